/**
 * DYNL v1 binary writer/reader.
 *
 * Layout (little-endian): magic "DYNL", u16 version=1, u8 flags
 * (bit0 labels, bit1 noise flags), u64 n, u64 t_max, four float32 grids of
 * n*t_max cells in column-major order (all samples for epoch 1, then epoch
 * 2, ...), a packed LSB-first bit grid for correctness, then optional
 * u32 labels[n] and a packed LSB-first noise-flag bit array.
 */

export interface DynamicsLogData {
  n: number;
  tMax: number;
  /** Grids indexed [sample][epoch], epoch 0-based here, 1-based on disk. */
  pTarget: Float32Array;
  pRunnerUp: Float32Array;
  el2n: Float32Array;
  entropy: Float32Array;
  correct: Uint8Array;
  labels?: Uint32Array;
  noiseFlags?: Uint8Array;
}

const MAGIC = Buffer.from("DYNL", "ascii");
const HEADER_SIZE = 4 + 2 + 1 + 8 + 8;

export function binarySize(n: number, tMax: number, labels: boolean, noise: boolean): number {
  const cells = n * tMax;
  let size = HEADER_SIZE + 4 * 4 * cells + Math.ceil(cells / 8);
  if (labels) size += 4 * n;
  if (noise) size += Math.ceil(n / 8);
  return size;
}

/** grid[i * tMax + e] -> column-major cell index e * n + i. */
function toColumnMajor(grid: Float32Array, n: number, tMax: number): Float32Array {
  const out = new Float32Array(n * tMax);
  for (let i = 0; i < n; i++) {
    for (let e = 0; e < tMax; e++) {
      out[e * n + i] = grid[i * tMax + e];
    }
  }
  return out;
}

function packBitsLsb(bits: Uint8Array): Buffer {
  const out = Buffer.alloc(Math.ceil(bits.length / 8));
  for (let k = 0; k < bits.length; k++) {
    if (bits[k]) out[k >> 3] |= 1 << (k & 7);
  }
  return out;
}

function unpackBitsLsb(buf: Buffer, count: number): Uint8Array {
  const out = new Uint8Array(count);
  for (let k = 0; k < count; k++) {
    out[k] = (buf[k >> 3] >> (k & 7)) & 1;
  }
  return out;
}

export function encodeDynl(log: DynamicsLogData): Buffer {
  const { n, tMax } = log;
  const cells = n * tMax;
  const flags = (log.labels ? 1 : 0) | (log.noiseFlags ? 2 : 0);
  const buf = Buffer.alloc(binarySize(n, tMax, !!log.labels, !!log.noiseFlags));

  MAGIC.copy(buf, 0);
  buf.writeUInt16LE(1, 4);
  buf.writeUInt8(flags, 6);
  buf.writeBigUInt64LE(BigInt(n), 7);
  buf.writeBigUInt64LE(BigInt(tMax), 15);

  let off = HEADER_SIZE;
  for (const grid of [log.pTarget, log.pRunnerUp, log.el2n, log.entropy]) {
    const col = toColumnMajor(grid, n, tMax);
    Buffer.from(col.buffer, col.byteOffset, 4 * cells).copy(buf, off);
    off += 4 * cells;
  }

  const correctCol = new Uint8Array(cells);
  for (let i = 0; i < n; i++) {
    for (let e = 0; e < tMax; e++) {
      correctCol[e * n + i] = log.correct[i * tMax + e];
    }
  }
  const packed = packBitsLsb(correctCol);
  packed.copy(buf, off);
  off += packed.length;

  if (log.labels) {
    for (let i = 0; i < n; i++) {
      buf.writeUInt32LE(log.labels[i], off + 4 * i);
    }
    off += 4 * n;
  }
  if (log.noiseFlags) {
    packBitsLsb(log.noiseFlags).copy(buf, off);
  }
  return buf;
}

export function decodeDynl(buf: Buffer): DynamicsLogData {
  if (!buf.subarray(0, 4).equals(MAGIC)) throw new Error("bad magic bytes");
  if (buf.readUInt16LE(4) !== 1) throw new Error("unsupported version");
  const flags = buf.readUInt8(6);
  const n = Number(buf.readBigUInt64LE(7));
  const tMax = Number(buf.readBigUInt64LE(15));
  const cells = n * tMax;
  if (buf.length !== binarySize(n, tMax, !!(flags & 1), !!(flags & 2))) {
    throw new Error("truncated file");
  }

  let off = HEADER_SIZE;
  const grids: Float32Array[] = [];
  for (let g = 0; g < 4; g++) {
    const col = new Float32Array(buf.buffer.slice(buf.byteOffset + off, buf.byteOffset + off + 4 * cells));
    const row = new Float32Array(cells);
    for (let i = 0; i < n; i++) {
      for (let e = 0; e < tMax; e++) {
        row[i * tMax + e] = col[e * n + i];
      }
    }
    grids.push(row);
    off += 4 * cells;
  }

  const packedLen = Math.ceil(cells / 8);
  const correctCol = unpackBitsLsb(buf.subarray(off, off + packedLen), cells);
  off += packedLen;
  const correct = new Uint8Array(cells);
  for (let i = 0; i < n; i++) {
    for (let e = 0; e < tMax; e++) {
      correct[i * tMax + e] = correctCol[e * n + i];
    }
  }

  let labels: Uint32Array | undefined;
  if (flags & 1) {
    labels = new Uint32Array(n);
    for (let i = 0; i < n; i++) labels[i] = buf.readUInt32LE(off + 4 * i);
    off += 4 * n;
  }
  let noiseFlags: Uint8Array | undefined;
  if (flags & 2) {
    noiseFlags = unpackBitsLsb(buf.subarray(off, off + Math.ceil(n / 8)), n);
  }

  return {
    n,
    tMax,
    pTarget: grids[0],
    pRunnerUp: grids[1],
    el2n: grids[2],
    entropy: grids[3],
    correct,
    labels,
    noiseFlags,
  };
}
