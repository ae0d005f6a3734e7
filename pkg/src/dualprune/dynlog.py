"""Canonical per-sample training-dynamics log and its serializations.

A DynamicsLog is a dense (sample, epoch) grid of five per-epoch summary
fields. Epochs are 1-indexed. Storage precision is float32; score code
upcasts to float64 on entry.

Binary format "DYNL v1", little-endian:

    magic       4 bytes   0x44 0x59 0x4E 0x4C ("DYNL")
    version     u16       1
    flags       u8        bit0: labels present, bit1: noise_flags present
    n           u64
    t_max       u64
    p_target    f32[n*t]  column-major (all samples for epoch 1, then 2, ...)
    p_runner_up f32[n*t]  same order
    el2n        f32[n*t]
    entropy     f32[n*t]
    correct     packed bits, column-major order, LSB-first, padded to byte
    labels      u32[n]            (if flags bit0)
    noise_flags packed bits[n], LSB-first, padded to byte   (if flags bit1)

CSV format: header ``sample_id,epoch,p_target,p_runner_up,el2n,entropy,correct``,
one row per grid cell, any row order; completeness is validated on load.
CSV carries only the record grid -- labels and noise_flags do not round-trip
through CSV, only through the binary format.

The format is agnostic to whether probabilities were recorded before or
after data augmentation at evaluation time; producers document their choice.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    IncompleteLogError,
    RangeError,
    ValidationError,
)

MAGIC = b"DYNL"
VERSION = 1
_HEADER = struct.Struct("<4sHBQQ")
PROB_SLACK = 1e-6

_FLAG_LABELS = 0x01
_FLAG_NOISE = 0x02


@dataclass(frozen=True)
class EpochRecord:
    """One (sample, epoch) cell of the dynamics grid."""

    p_target: float
    p_runner_up: float
    el2n: float
    entropy: float
    correct: bool


@dataclass(frozen=True)
class DynamicsLog:
    """Immutable dense grid of EpochRecord fields, shape (n, t_max).

    Arrays are float32 (bool for ``correct``) and write-protected after
    construction; the log is safe to share across threads read-only.
    """

    p_target: np.ndarray
    p_runner_up: np.ndarray
    el2n: np.ndarray
    entropy: np.ndarray
    correct: np.ndarray
    labels: np.ndarray | None = None
    noise_flags: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.p_target.shape[0]

    @property
    def t_max(self) -> int:
        return self.p_target.shape[1]

    def record(self, sample_id: int, epoch: int) -> EpochRecord:
        """Cell accessor; ``epoch`` is 1-indexed."""
        if not 1 <= epoch <= self.t_max:
            raise RangeError(f"epoch {epoch} outside [1, {self.t_max}]")
        i, e = sample_id, epoch - 1
        return EpochRecord(
            float(self.p_target[i, e]),
            float(self.p_runner_up[i, e]),
            float(self.el2n[i, e]),
            float(self.entropy[i, e]),
            bool(self.correct[i, e]),
        )

    @classmethod
    def from_arrays(
        cls,
        p_target,
        p_runner_up,
        el2n,
        entropy,
        correct,
        labels=None,
        noise_flags=None,
    ) -> "DynamicsLog":
        """Validate, cast to storage precision, and freeze."""
        p_target = np.asarray(p_target, dtype=np.float32)
        p_runner_up = np.asarray(p_runner_up, dtype=np.float32)
        el2n = np.asarray(el2n, dtype=np.float32)
        entropy = np.asarray(entropy, dtype=np.float32)
        correct = np.asarray(correct, dtype=bool)

        shape = p_target.shape
        if p_target.ndim != 2 or shape[0] < 1 or shape[1] < 1:
            raise ValidationError(f"grid must be 2-D and non-empty, got shape {shape}")
        for name, arr in (
            ("p_runner_up", p_runner_up),
            ("el2n", el2n),
            ("entropy", entropy),
            ("correct", correct),
        ):
            if arr.shape != shape:
                raise ValidationError(f"{name} shape {arr.shape} != {shape}")
        for name, arr in (
            ("p_target", p_target),
            ("p_runner_up", p_runner_up),
            ("el2n", el2n),
            ("entropy", entropy),
        ):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains NaN or Inf")

        for name, arr in (("p_target", p_target), ("p_runner_up", p_runner_up)):
            if np.any(arr < -PROB_SLACK) or np.any(arr > 1 + PROB_SLACK):
                raise ValidationError(f"{name} outside [0, 1] beyond {PROB_SLACK} slack")
        if np.any(p_target.astype(np.float64) + p_runner_up > 1 + PROB_SLACK):
            raise ValidationError("p_target + p_runner_up exceeds 1 beyond slack")
        if np.any(el2n < 0):
            raise ValidationError("el2n must be non-negative")
        if np.any(entropy < 0):
            raise ValidationError("entropy must be non-negative")

        # restore exact bounds after the slack check; identity for in-range data
        p_target = np.clip(p_target, 0.0, 1.0)
        p_runner_up = np.clip(p_runner_up, 0.0, 1.0)

        n = shape[0]
        if labels is not None:
            labels = np.asarray(labels, dtype=np.uint32)
            if labels.shape != (n,):
                raise ValidationError(f"labels length {labels.shape} != ({n},)")
        if noise_flags is not None:
            noise_flags = np.asarray(noise_flags, dtype=bool)
            if noise_flags.shape != (n,):
                raise ValidationError(f"noise_flags length {noise_flags.shape} != ({n},)")

        for arr in (p_target, p_runner_up, el2n, entropy, correct, labels, noise_flags):
            if arr is not None:
                arr.flags.writeable = False
        return cls(p_target, p_runner_up, el2n, entropy, correct, labels, noise_flags)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DynamicsLog):
            return NotImplemented
        same_opt = (
            (self.labels is None) == (other.labels is None)
            and (self.noise_flags is None) == (other.noise_flags is None)
            and (self.labels is None or np.array_equal(self.labels, other.labels))
            and (self.noise_flags is None or np.array_equal(self.noise_flags, other.noise_flags))
        )
        return (
            same_opt
            and np.array_equal(self.p_target, other.p_target)
            and np.array_equal(self.p_runner_up, other.p_runner_up)
            and np.array_equal(self.el2n, other.el2n)
            and np.array_equal(self.entropy, other.entropy)
            and np.array_equal(self.correct, other.correct)
        )


def slice_epochs(log: DynamicsLog, t: int) -> DynamicsLog:
    """Restrict ``log`` to epochs [1, t]; the source is untouched."""
    if not 1 <= t <= log.t_max:
        raise RangeError(f"t={t} outside [1, {log.t_max}]")
    return DynamicsLog.from_arrays(
        log.p_target[:, :t].copy(),
        log.p_runner_up[:, :t].copy(),
        log.el2n[:, :t].copy(),
        log.entropy[:, :t].copy(),
        log.correct[:, :t].copy(),
        None if log.labels is None else log.labels.copy(),
        None if log.noise_flags is None else log.noise_flags.copy(),
    )


def _pack_bits(flat_bool: np.ndarray) -> bytes:
    return np.packbits(flat_bool.astype(np.uint8), bitorder="little").tobytes()


def _unpack_bits(buf: bytes, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="little")
    return bits[:count].astype(bool)


def binary_size(n: int, t_max: int, labels: bool = False, noise_flags: bool = False) -> int:
    """Exact on-disk size in bytes of a DYNL v1 file."""
    cells = n * t_max
    size = _HEADER.size + 4 * 4 * cells + (cells + 7) // 8
    if labels:
        size += 4 * n
    if noise_flags:
        size += (n + 7) // 8
    return size


def write_log(log: DynamicsLog, path, format: str = "binary") -> None:
    """Serialize ``log``; binary round-trips bit-exactly, CSV within 1e-7."""
    path = Path(path)
    if format == "binary":
        _write_binary(log, path)
    elif format == "csv":
        _write_csv(log, path)
    else:
        raise ValueError(f"unknown format {format!r}")


def read_log(path, format: str = "binary") -> DynamicsLog:
    path = Path(path)
    if format == "binary":
        return _read_binary(path)
    if format == "csv":
        return _read_csv(path)
    raise ValueError(f"unknown format {format!r}")


def infer_format(path) -> str:
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def _write_binary(log: DynamicsLog, path: Path) -> None:
    flags = 0
    if log.labels is not None:
        flags |= _FLAG_LABELS
    if log.noise_flags is not None:
        flags |= _FLAG_NOISE
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, flags, log.n, log.t_max))
        for arr in (log.p_target, log.p_runner_up, log.el2n, log.entropy):
            fh.write(np.asfortranarray(arr, dtype="<f4").tobytes(order="F"))
        fh.write(_pack_bits(log.correct.flatten(order="F")))
        if log.labels is not None:
            fh.write(log.labels.astype("<u4").tobytes())
        if log.noise_flags is not None:
            fh.write(_pack_bits(log.noise_flags))


def _read_binary(path: Path) -> DynamicsLog:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError("file shorter than DYNL header")
    magic, version, flags, n, t_max = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic bytes {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if n < 1 or t_max < 1:
        raise FormatError(f"invalid dimensions n={n}, t_max={t_max}")
    expected = binary_size(n, t_max, bool(flags & _FLAG_LABELS), bool(flags & _FLAG_NOISE))
    if len(data) != expected:
        raise IncompleteLogError(f"file size {len(data)} != expected {expected}")

    cells = n * t_max
    off = _HEADER.size
    grids = []
    for _ in range(4):
        arr = np.frombuffer(data, dtype="<f4", count=cells, offset=off)
        grids.append(arr.reshape((n, t_max), order="F"))
        off += 4 * cells
    nbytes = (cells + 7) // 8
    correct = _unpack_bits(data[off : off + nbytes], cells).reshape((n, t_max), order="F")
    off += nbytes
    labels = None
    if flags & _FLAG_LABELS:
        labels = np.frombuffer(data, dtype="<u4", count=n, offset=off).copy()
        off += 4 * n
    noise = None
    if flags & _FLAG_NOISE:
        noise = _unpack_bits(data[off : off + (n + 7) // 8], n)
    return DynamicsLog.from_arrays(*grids, correct, labels, noise)


_CSV_HEADER = ["sample_id", "epoch", "p_target", "p_runner_up", "el2n", "entropy", "correct"]


def _fmt32(v: np.float32) -> str:
    # 9 significant digits round-trip any float32 exactly
    return format(float(v), ".9g")


def _write_csv(log: DynamicsLog, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for i in range(log.n):
            for e in range(log.t_max):
                writer.writerow(
                    [
                        i,
                        e + 1,
                        _fmt32(log.p_target[i, e]),
                        _fmt32(log.p_runner_up[i, e]),
                        _fmt32(log.el2n[i, e]),
                        _fmt32(log.entropy[i, e]),
                        int(log.correct[i, e]),
                    ]
                )


def _read_csv(path: Path) -> DynamicsLog:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV file") from None
        if [h.strip() for h in header] != _CSV_HEADER:
            raise FormatError(f"unexpected CSV header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise FormatError(f"line {lineno}: expected 7 fields, got {len(row)}")
            try:
                sid = int(row[0])
                epoch = int(row[1])
                vals = [float(v) for v in row[2:6]]
                corr = row[6].strip().lower()
                if corr in ("1", "true"):
                    cval = True
                elif corr in ("0", "false"):
                    cval = False
                else:
                    raise ValueError(corr)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: unparseable field ({exc})") from None
            if sid < 0 or epoch < 1:
                raise FormatError(f"line {lineno}: invalid indices sample={sid} epoch={epoch}")
            rows.append((sid, epoch, *vals, cval))

    if not rows:
        raise IncompleteLogError("CSV contains no data rows")
    n = max(r[0] for r in rows) + 1
    t_max = max(r[1] for r in rows)
    if len(rows) != n * t_max:
        raise IncompleteLogError(f"{len(rows)} rows for an {n} x {t_max} grid")
    seen = np.zeros((n, t_max), dtype=bool)
    grids = [np.zeros((n, t_max), dtype=np.float32) for _ in range(4)]
    correct = np.zeros((n, t_max), dtype=bool)
    for sid, epoch, pt, pr, el, en, cval in rows:
        i, e = sid, epoch - 1
        if seen[i, e]:
            raise IncompleteLogError(f"duplicate cell (sample {sid}, epoch {epoch})")
        seen[i, e] = True
        grids[0][i, e] = pt
        grids[1][i, e] = pr
        grids[2][i, e] = el
        grids[3][i, e] = en
        correct[i, e] = cval
    if not seen.all():
        i, e = np.argwhere(~seen)[0]
        raise IncompleteLogError(f"missing cell (sample {i}, epoch {e + 1})")
    return DynamicsLog.from_arrays(*grids, correct)
