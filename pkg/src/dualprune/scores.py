"""Per-sample importance scores computed from a DynamicsLog.

All metrics are pure functions of the log; sample order is preserved and
per-sample accumulation runs epoch-ascending, so results do not depend on
how callers partition samples across threads.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import rankdata

from .dynlog import DynamicsLog
from .errors import DegenerateError, RangeError, ShapeError, ValidationError, WindowError


class Metric(str, enum.Enum):
    DUAL = "dual"
    DYN_UNC = "dyn-unc"
    EL2N = "el2n"
    AUM = "aum"
    FORGETTING = "forgetting"
    ENTROPY = "entropy"


#: (t, j, c_dataset) triples per dataset scale.
PRESETS: dict[str, tuple[int, int, float]] = {
    "cifar10": (30, 10, 5.5),
    "cifar100": (30, 10, 4.0),
    "imagenet": (60, 10, 11.0),
}


@dataclass(frozen=True)
class ScoreTable:
    """Per-sample scores for one metric plus the prediction means the
    ratio-adaptive sampler needs."""

    metric: Metric
    values: np.ndarray
    t_used: int
    j_used: int | None
    prediction_mean: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.prediction_mean.shape or self.values.ndim != 1:
            raise ShapeError("values and prediction_mean must be equal-length 1-D arrays")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("score values contain NaN or Inf")
        if np.any(self.prediction_mean < 0) or np.any(self.prediction_mean > 1):
            raise ValidationError("prediction_mean outside [0, 1]")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "score", "prediction_mean"])
            for i in range(self.n):
                writer.writerow([i, repr(float(self.values[i])), repr(float(self.prediction_mean[i]))])

    @classmethod
    def from_csv(cls, path, metric: Metric, t_used: int = 0, j_used: int | None = None) -> "ScoreTable":
        ids, vals, means = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                ids.append(int(row["sample_id"]))
                vals.append(float(row["score"]))
                means.append(float(row["prediction_mean"]))
        order = np.argsort(ids)
        return cls(metric, np.asarray(vals)[order], t_used, j_used, np.asarray(means)[order])


def _check_window(t: int, j: int) -> None:
    if j < 2:
        raise WindowError(f"window j={j} too short; variance needs j >= 2")
    if j > t:
        raise WindowError(f"window j={j} exceeds series length {t}")


def _window_mean_std(p: np.ndarray, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Window means and Bessel-corrected stds over axis 1, shape (n, T-j+1)."""
    windows = sliding_window_view(p, j, axis=1)
    return windows.mean(axis=2), windows.std(axis=2, ddof=1)


def windowed_uncertainty(series: Sequence[float], j: int) -> np.ndarray:
    """Sliding-window sample standard deviation (divisor j-1) of one series."""
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1:
        raise ShapeError("series must be 1-D")
    _check_window(s.shape[0], j)
    _, stds = _window_mean_std(s[None, :], j)
    return stds[0]


def _horizon_probs(log: DynamicsLog, t: int) -> np.ndarray:
    if not 1 <= t <= log.t_max:
        raise RangeError(f"t={t} outside [1, {log.t_max}]")
    return log.p_target[:, :t].astype(np.float64)


def dyn_unc(log: DynamicsLog, t: int, j: int) -> ScoreTable:
    """Mean windowed prediction std over all windows in [1, t]."""
    p = _horizon_probs(log, t)
    _check_window(t, j)
    _, stds = _window_mean_std(p, j)
    return ScoreTable(Metric.DYN_UNC, stds.mean(axis=1), t, j, p.mean(axis=1))


def dual_score(log: DynamicsLog, t: int, j: int) -> ScoreTable:
    """Window difficulty (1 - mean) times window std, averaged over windows."""
    p = _horizon_probs(log, t)
    _check_window(t, j)
    means, stds = _window_mean_std(p, j)
    values = ((1.0 - means) * stds).mean(axis=1)
    return ScoreTable(Metric.DUAL, values, t, j, p.mean(axis=1))


def el2n_score(logs: Sequence[DynamicsLog], epoch: int) -> ScoreTable:
    """Error-norm column at ``epoch``, averaged across independent runs."""
    if not logs:
        raise ShapeError("el2n_score needs at least one log")
    n = logs[0].n
    for log in logs:
        if log.n != n:
            raise ShapeError(f"sample count mismatch: {log.n} != {n}")
        if not 1 <= epoch <= log.t_max:
            raise RangeError(f"epoch={epoch} outside [1, {log.t_max}]")
    values = np.mean([log.el2n[:, epoch - 1].astype(np.float64) for log in logs], axis=0)
    pmean = np.mean([_horizon_probs(log, epoch).mean(axis=1) for log in logs], axis=0)
    return ScoreTable(Metric.EL2N, values, epoch, None, pmean)


def aum_score(log: DynamicsLog, t: int) -> ScoreTable:
    """Mean margin p_target - p_runner_up over epochs [1, t]."""
    p = _horizon_probs(log, t)
    margins = p - log.p_runner_up[:, :t].astype(np.float64)
    return ScoreTable(Metric.AUM, margins.mean(axis=1), t, None, p.mean(axis=1))


def forgetting_score(log: DynamicsLog, t: int, never_correct_sentinel: bool = True) -> ScoreTable:
    """Count of correct->incorrect transitions in [1, t].

    Samples never predicted correctly in [1, t] are assigned the sentinel
    value ``t`` (treated as maximally forgettable) unless the sentinel is
    disabled, in which case they keep their raw count of zero.
    """
    p = _horizon_probs(log, t)
    correct = log.correct[:, :t]
    flips = (correct[:, :-1] & ~correct[:, 1:]).sum(axis=1).astype(np.float64)
    if never_correct_sentinel:
        flips = np.where(correct.any(axis=1), flips, float(t))
    return ScoreTable(Metric.FORGETTING, flips, t, None, p.mean(axis=1))


def entropy_score(log: DynamicsLog, epoch: int) -> ScoreTable:
    """Prediction entropy column at ``epoch`` (natural log units)."""
    p = _horizon_probs(log, epoch)
    values = log.entropy[:, epoch - 1].astype(np.float64)
    return ScoreTable(Metric.ENTROPY, values, epoch, None, p.mean(axis=1))


def spearman(a, b) -> float:
    """Spearman rank correlation with average-rank tie handling."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise ShapeError("need at least 2 observations")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateError("rank correlation undefined on constant input")
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    ra = ra - ra.mean()
    rb = rb - rb.mean()
    rho = float(np.dot(ra, rb) / np.sqrt(np.dot(ra, ra) * np.dot(rb, rb)))
    return min(1.0, max(-1.0, rho))


def compute_metric(
    log: DynamicsLog, metric: Metric, t: int, j: int | None = None
) -> ScoreTable:
    """Dispatch to the right score; snapshot metrics use ``t`` as their epoch."""
    if metric is Metric.DUAL:
        return dual_score(log, t, j if j is not None else 10)
    if metric is Metric.DYN_UNC:
        return dyn_unc(log, t, j if j is not None else 10)
    if metric is Metric.EL2N:
        return el2n_score([log], t)
    if metric is Metric.AUM:
        return aum_score(log, t)
    if metric is Metric.FORGETTING:
        return forgetting_score(log, t)
    if metric is Metric.ENTROPY:
        return entropy_score(log, t)
    raise ValueError(f"unknown metric {metric}")
