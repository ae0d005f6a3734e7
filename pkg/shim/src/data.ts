/** Toy datasets plus the symmetric label-noise protocol. */

import { gaussian, mulberry32, sampleIndices } from "./rng.js";

export type DatasetName = "toy-gaussians" | "small-image";

export interface Dataset {
  features: Float32Array[];
  labels: number[];
  numClasses: number;
}

const NUM_CLASSES = 4;

/** Four Gaussian blobs on a ring; 2-D features. */
export function toyGaussians(n: number, seed: number): Dataset {
  const rand = mulberry32(seed);
  const features: Float32Array[] = [];
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    const cls = i % NUM_CLASSES;
    const angle = (2 * Math.PI * cls) / NUM_CLASSES;
    features.push(
      new Float32Array([
        2.5 * Math.cos(angle) + 0.7 * gaussian(rand),
        2.5 * Math.sin(angle) + 0.7 * gaussian(rand),
      ]),
    );
    labels.push(cls);
  }
  return { features, labels, numClasses: NUM_CLASSES };
}

/** 6x6 synthetic "images": one bar/diagonal/checker pattern per class plus
 * pixel noise; 36-D features. */
export function smallImages(n: number, seed: number): Dataset {
  const rand = mulberry32(seed);
  const size = 6;
  const templates: Float32Array[] = [];
  for (let cls = 0; cls < NUM_CLASSES; cls++) {
    const img = new Float32Array(size * size);
    for (let r = 0; r < size; r++) {
      for (let c = 0; c < size; c++) {
        let v = 0;
        if (cls === 0) v = r === 2 || r === 3 ? 1 : 0; // horizontal bar
        if (cls === 1) v = c === 2 || c === 3 ? 1 : 0; // vertical bar
        if (cls === 2) v = Math.abs(r - c) <= 1 ? 1 : 0; // diagonal
        if (cls === 3) v = (r + c) % 2; // checkerboard
        img[r * size + c] = v;
      }
    }
    templates.push(img);
  }
  const features: Float32Array[] = [];
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    const cls = i % NUM_CLASSES;
    const img = Float32Array.from(templates[cls], (v) => v + 0.3 * gaussian(rand));
    features.push(img);
    labels.push(cls);
  }
  return { features, labels, numClasses: NUM_CLASSES };
}

export function makeDataset(name: DatasetName, n: number, seed: number): Dataset {
  return name === "toy-gaussians" ? toyGaussians(n, seed) : smallImages(n, seed);
}

export interface NoisyLabels {
  labels: number[];
  flags: Uint8Array;
}

/** Symmetric label noise: an exact round(fraction * n) subset is reassigned,
 * each flipped label drawn uniformly from the other numClasses - 1 classes. */
export function applyLabelNoise(
  labels: number[],
  numClasses: number,
  fraction: number,
  seed: number,
): NoisyLabels {
  const n = labels.length;
  const k = Math.round(fraction * n);
  const rand = mulberry32(seed ^ 0x9e3779b9);
  const flags = new Uint8Array(n);
  const noisy = labels.slice();
  for (const i of sampleIndices(n, k, rand)) {
    flags[i] = 1;
    const shift = 1 + Math.floor(rand() * (numClasses - 1));
    noisy[i] = (labels[i] + shift) % numClasses;
  }
  return { labels: noisy, flags };
}
