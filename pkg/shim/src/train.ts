/**
 * Reference trainer: a small MLP on a toy dataset, logging per-sample
 * prediction dynamics after every epoch into a DYNL v1 buffer.
 *
 * Probabilities are recorded in evaluation mode (a forward pass after the
 * epoch's updates, no augmentation), so the log reflects the model, not the
 * input pipeline. Training is deterministic for a fixed config: seeded
 * initializers, fixed data order, full-batch gradient descent.
 */

import * as tf from "@tensorflow/tfjs";

import { applyLabelNoise, makeDataset, type DatasetName } from "./data.js";
import { encodeDynl, type DynamicsLogData } from "./dynl.js";

export interface ShimConfig {
  dataset: DatasetName;
  epochs: number;
  labelNoise: number;
  seed: number;
  numSamples: number;
  learningRate: number;
}

export const DEFAULTS: Omit<ShimConfig, "seed"> = {
  dataset: "toy-gaussians",
  epochs: 30,
  labelNoise: 0.0,
  numSamples: 128,
  learningRate: 0.5,
};

export function validateConfig(config: ShimConfig): void {
  if (config.epochs < 2) throw new Error("epochs must be >= 2");
  if (config.labelNoise < 0 || config.labelNoise >= 1) {
    throw new Error("label noise fraction must be in [0, 1)");
  }
  if (config.numSamples < 4) throw new Error("need at least 4 samples");
}

function buildModel(inputDim: number, numClasses: number, seed: number): tf.Sequential {
  const model = tf.sequential();
  model.add(
    tf.layers.dense({
      inputShape: [inputDim],
      units: 16,
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: "zeros",
    }),
  );
  model.add(
    tf.layers.dense({
      units: numClasses,
      activation: "softmax",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
      biasInitializer: "zeros",
    }),
  );
  model.compile({ optimizer: tf.train.sgd(0.5), loss: "categoricalCrossentropy" });
  return model;
}

/** Per-epoch record grids extracted from a probability matrix. */
function recordEpoch(
  probs: Float32Array,
  labels: number[],
  numClasses: number,
  epoch: number,
  log: DynamicsLogData,
): void {
  const { n, tMax } = log;
  for (let i = 0; i < n; i++) {
    const row = probs.subarray(i * numClasses, (i + 1) * numClasses);
    const target = labels[i];
    let runnerUp = 0;
    let argmax = 0;
    let el2nSq = 0;
    let entropy = 0;
    for (let c = 0; c < numClasses; c++) {
      const p = row[c];
      if (c !== target && p > runnerUp) runnerUp = p;
      if (p > row[argmax]) argmax = c;
      const err = c === target ? p - 1 : p;
      el2nSq += err * err;
      if (p > 0) entropy -= p * Math.log(p);
    }
    const cell = i * tMax + epoch;
    log.pTarget[cell] = row[target];
    log.pRunnerUp[cell] = runnerUp;
    log.el2n[cell] = Math.sqrt(el2nSq);
    log.entropy[cell] = Math.max(0, entropy);
    log.correct[cell] = argmax === target ? 1 : 0;
  }
}

export async function trainAndLog(config: ShimConfig): Promise<Buffer> {
  validateConfig(config);
  const base = makeDataset(config.dataset, config.numSamples, config.seed);
  const { labels: trainLabels, flags } = applyLabelNoise(
    base.labels,
    base.numClasses,
    config.labelNoise,
    config.seed,
  );

  const n = config.numSamples;
  const dim = base.features[0].length;
  const flat = new Float32Array(n * dim);
  base.features.forEach((f, i) => flat.set(f, i * dim));
  const xs = tf.tensor2d(flat, [n, dim]);
  const ys = tf.oneHot(tf.tensor1d(trainLabels, "int32"), base.numClasses);

  const cells = n * config.epochs;
  const log: DynamicsLogData = {
    n,
    tMax: config.epochs,
    pTarget: new Float32Array(cells),
    pRunnerUp: new Float32Array(cells),
    el2n: new Float32Array(cells),
    entropy: new Float32Array(cells),
    correct: new Uint8Array(cells),
    labels: Uint32Array.from(trainLabels),
    noiseFlags: flags,
  };

  const model = buildModel(dim, base.numClasses, config.seed);
  model.compile({
    optimizer: tf.train.sgd(config.learningRate),
    loss: "categoricalCrossentropy",
  });
  try {
    for (let epoch = 0; epoch < config.epochs; epoch++) {
      await model.fit(xs, ys, { epochs: 1, batchSize: n, shuffle: false, verbose: 0 });
      const probs = tf.tidy(() => model.predict(xs) as tf.Tensor2D);
      recordEpoch(await probs.data() as Float32Array, trainLabels, base.numClasses, epoch, log);
      probs.dispose();
    }
  } finally {
    xs.dispose();
    ys.dispose();
    model.dispose();
  }
  return encodeDynl(log);
}
