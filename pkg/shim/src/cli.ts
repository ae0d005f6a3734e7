/** Flags mirror the trainer config; see README for the end-to-end flow. */

import { writeFileSync } from "node:fs";

import { DEFAULTS, trainAndLog, type ShimConfig } from "./train.js";
import type { DatasetName } from "./data.js";

function usage(): never {
  console.error(
    "usage: node dist/cli.js --out PATH [--dataset toy-gaussians|small-image] " +
      "[--epochs N] [--label-noise F] [--seed N] [--n N] [--learning-rate F]",
  );
  process.exit(2);
}

export function parseArgs(argv: string[]): ShimConfig & { out: string } {
  const opts = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) usage();
    opts.set(key.slice(2), value);
  }
  const out = opts.get("out");
  if (!out) usage();
  const dataset = (opts.get("dataset") ?? DEFAULTS.dataset) as DatasetName;
  if (dataset !== "toy-gaussians" && dataset !== "small-image") usage();
  return {
    out,
    dataset,
    epochs: Number(opts.get("epochs") ?? DEFAULTS.epochs),
    labelNoise: Number(opts.get("label-noise") ?? DEFAULTS.labelNoise),
    seed: Number(opts.get("seed") ?? 0),
    numSamples: Number(opts.get("n") ?? DEFAULTS.numSamples),
    learningRate: Number(opts.get("learning-rate") ?? DEFAULTS.learningRate),
  };
}

async function main(): Promise<void> {
  const config = parseArgs(process.argv.slice(2));
  const buffer = await trainAndLog(config);
  writeFileSync(config.out, buffer);
  console.log(
    `wrote ${config.out}: ${config.numSamples} samples x ${config.epochs} epochs ` +
      `(${config.dataset}, noise=${config.labelNoise}, seed=${config.seed})`,
  );
}

main().catch((err) => {
  console.error(`error: ${err.message ?? err}`);
  process.exit(1);
});
