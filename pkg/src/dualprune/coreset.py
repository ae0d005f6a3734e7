"""End-to-end selection (score -> strategy -> manifest) and evaluation reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynlog import DynamicsLog
from .errors import MetadataError, RangeError, ShapeError, ValidationError
from .sampler import (
    PruneConfig,
    Strategy,
    beta_params,
    coreset_size,
    mu_top,
    sample_without_replacement,
    sampling_weights,
)
from .scores import Metric, ScoreTable, compute_metric, spearman


@dataclass(frozen=True)
class CoresetManifest:
    """Kept/pruned partition of [0, n) plus the replayable config snapshot."""

    kept: np.ndarray
    pruned: np.ndarray
    config: PruneConfig
    metric: Metric
    weights: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.kept.shape[0] + self.pruned.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "metric": self.metric.value,
                "strategy": self.config.strategy.value,
                "r": self.config.r,
                "t": self.config.t,
                "j": self.config.j,
                "c_dataset": self.config.c_dataset,
                "big_c": self.config.big_c,
                "seed": self.config.seed,
                "kept": [int(i) for i in self.kept],
                "pruned": [int(i) for i in self.pruned],
            },
            indent=2,
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "CoresetManifest":
        doc = json.loads(Path(path).read_text())
        config = PruneConfig(
            r=doc["r"],
            t=doc["t"],
            j=doc["j"],
            c_dataset=doc["c_dataset"],
            big_c=doc["big_c"],
            seed=doc["seed"],
            strategy=Strategy(doc["strategy"]),
        )
        return cls(
            kept=np.asarray(sorted(doc["kept"]), dtype=np.int64),
            pruned=np.asarray(sorted(doc["pruned"]), dtype=np.int64),
            config=config,
            metric=Metric(doc["metric"]),
        )


@dataclass(frozen=True)
class NoiseReport:
    pruned_noise_fraction: float
    noise_recall: float
    optimal_recall: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "pruned_noise_fraction": self.pruned_noise_fraction,
                "noise_recall": self.noise_recall,
                "optimal_recall": self.optimal_recall,
            },
            indent=2,
        )


def select(log: DynamicsLog, config: PruneConfig, metric: Metric = Metric.DUAL) -> CoresetManifest:
    """Run Threshold or BetaSampling selection and partition all indices."""
    table = compute_metric(log, metric, config.t, config.j)
    n = table.n
    m = coreset_size(n, config.r)

    weights = None
    if config.strategy is Strategy.THRESHOLD:
        order = np.argsort(-table.values, kind="stable")
        kept = np.sort(order[:m])
    else:
        if config.seed is None:
            raise ValidationError("beta sampling requires an explicit seed")
        mu = mu_top(table, min(config.top_k_for_mu, n))
        params = beta_params(config.r, mu, config.c_dataset, config.big_c)
        weights = sampling_weights(table, params)
        kept = sample_without_replacement(weights, m, config.seed)

    mask = np.zeros(n, dtype=bool)
    mask[kept] = True
    pruned = np.flatnonzero(~mask)
    return CoresetManifest(kept.astype(np.int64), pruned.astype(np.int64), config, metric, weights)


def noise_report(manifest: CoresetManifest, log: DynamicsLog) -> NoiseReport:
    """Exact set arithmetic against the injected-noise ground truth."""
    if log.noise_flags is None:
        raise MetadataError("log carries no noise_flags")
    noisy = np.flatnonzero(log.noise_flags)
    pruned = manifest.pruned
    n_noisy = noisy.shape[0]
    n_pruned = pruned.shape[0]
    hit = np.intersect1d(noisy, pruned).shape[0]
    # no injected noise: recall is vacuous, report the optimum as reached
    recall = hit / n_noisy if n_noisy else 1.0
    fraction = hit / n_pruned if n_pruned else 0.0
    optimal = min(1.0, manifest.config.r * log.n / n_noisy) if n_noisy else 1.0
    return NoiseReport(fraction, recall, optimal)


def moon_export(log: DynamicsLog, t: int, j: int) -> np.ndarray:
    """Per-sample (std, mean) of p_target over epochs [1, t], shape (n, 2).

    ``j`` is validated against the horizon for interface parity with the
    windowed scores; the exported statistics span the whole horizon.
    """
    if not 1 <= t <= log.t_max:
        raise RangeError(f"t={t} outside [1, {log.t_max}]")
    if not 2 <= j <= t:
        raise RangeError(f"j={j} outside [2, {t}]")
    p = log.p_target[:, :t].astype(np.float64)
    return np.column_stack([p.std(axis=1, ddof=1), p.mean(axis=1)])


def moon_to_csv(moon: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "p_std", "p_mean"])
        for i, (s, m) in enumerate(moon):
            writer.writerow([i, repr(float(s)), repr(float(m))])


def stability_report(tables: Sequence[ScoreTable]) -> float:
    """Mean Spearman correlation of each run against the runs' mean score."""
    if len(tables) < 2:
        raise MetadataError("stability needs at least two score tables")
    metric = tables[0].metric
    n = tables[0].n
    for tbl in tables[1:]:
        if tbl.metric is not metric:
            raise MetadataError(f"metric mismatch: {tbl.metric} != {metric}")
        if tbl.n != n:
            raise ShapeError(f"sample count mismatch: {tbl.n} != {n}")
    mean_vec = np.mean([tbl.values for tbl in tables], axis=0)
    return float(np.mean([spearman(tbl.values, mean_vec) for tbl in tables]))
