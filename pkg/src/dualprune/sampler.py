"""Pruning-ratio-adaptive Beta sampling.

The Beta distribution's beta parameter shrinks as the pruning ratio grows,
pushing the distribution mean from the top-samples' prediction mean toward 1
(the easy region) while alpha + beta stays fixed at big_c + 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import NumericalError, RangeError, ShapeError, ValidationError
from .scores import ScoreTable

BETA_FLOOR = 1e-9
PDF_CLAMP = 1e-6


class Strategy(str, enum.Enum):
    THRESHOLD = "threshold"
    BETA_SAMPLING = "beta"


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float
    c_dataset: float
    big_c: float
    mu_top: float
    r: float


@dataclass
class PruneConfig:
    """Every knob of a selection run; snapshotted into the manifest."""

    r: float
    t: int
    j: int
    c_dataset: float
    big_c: float = 15.0
    seed: int | None = None
    strategy: Strategy = Strategy.THRESHOLD
    top_k_for_mu: int = 10

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise RangeError(f"pruning ratio r={self.r} outside [0, 1)")
        if self.t < 1:
            raise RangeError(f"t={self.t} must be positive")
        if self.c_dataset < 1.0:
            raise RangeError(f"c_dataset={self.c_dataset} must be >= 1")
        if self.big_c <= 0.0:
            raise RangeError(f"big_c={self.big_c} must be positive")
        if self.top_k_for_mu < 1:
            raise RangeError("top_k_for_mu must be positive")
        self.strategy = Strategy(self.strategy)


def coreset_size(n: int, r: float) -> int:
    """floor((1-r) * n), at least 1; nudged against float artifacts of
    decimal ratios like 0.7."""
    return max(1, int(math.floor((1.0 - r) * n + 1e-9)))


def beta_params(r: float, mu_top: float, c_dataset: float, big_c: float = 15.0) -> BetaParams:
    """Evaluate the ratio-adaptive parameters.

    beta = max(big_c * (1 - mu_top) * (1 - r^c_dataset), 1e-9) and
    alpha = big_c - beta + 1; the +1 keeps the PDF stationary at low ratios,
    and the floor keeps the distribution valid in the r -> 1 limit.
    """
    if not 0.0 <= r < 1.0:
        raise RangeError(f"r={r} outside [0, 1); Beta degenerates at r=1")
    if not 0.0 <= mu_top <= 1.0:
        raise RangeError(f"mu_top={mu_top} outside [0, 1]")
    if c_dataset < 1.0:
        raise RangeError(f"c_dataset={c_dataset} must be >= 1")
    if big_c <= 0.0:
        raise RangeError(f"big_c={big_c} must be positive")
    beta = max(big_c * (1.0 - mu_top) * (1.0 - r**c_dataset), BETA_FLOOR)
    alpha = big_c - beta + 1.0
    return BetaParams(alpha, beta, c_dataset, big_c, mu_top, r)


def mu_top(table: ScoreTable, k: int) -> float:
    """Mean prediction_mean of the k highest-score samples (ties by index)."""
    if table.n < 1:
        raise ShapeError("empty score table")
    if not 1 <= k <= table.n:
        raise RangeError(f"k={k} outside [1, {table.n}]")
    order = np.argsort(-table.values, kind="stable")
    return float(table.prediction_mean[order[:k]].mean())


def beta_pdf(x, params: BetaParams):
    """Beta PDF via log-gamma; the argument is clamped to [1e-6, 1 - 1e-6]
    so memorized samples with prediction mean exactly 0 or 1 stay finite."""
    x = np.clip(np.asarray(x, dtype=np.float64), PDF_CLAMP, 1.0 - PDF_CLAMP)
    a, b = params.alpha, params.beta
    log_norm = gammaln(a) + gammaln(b) - gammaln(a + b)
    log_pdf = (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - log_norm
    pdf = np.exp(log_pdf)
    if not np.all(np.isfinite(pdf)):
        raise NumericalError("beta_pdf produced a non-finite value")
    return pdf if pdf.ndim else float(pdf)


def sampling_weights(table: ScoreTable, params: BetaParams) -> np.ndarray:
    """PDF-at-prediction-mean times score, normalized to sum 1.

    An all-zero product vector (e.g. a constant log yields zero scores)
    falls back to uniform weights so selection still succeeds.
    """
    if table.n < 1:
        raise ShapeError("empty score table")
    w = beta_pdf(table.prediction_mean, params) * table.values
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0 or np.any(w < 0):
        return np.full(table.n, 1.0 / table.n)
    return w / total


def sample_without_replacement(weights, m: int, seed: int) -> np.ndarray:
    """Draw m distinct indices with probability proportional to weight.

    Uses exponential keys (key_i = log(u_i) / w_i, keep the m largest):
    one pass, reproducible per seed, exact marginals for single draws.
    Zero-weight indices are drawn only to pad when fewer than m weights
    are positive; the pad is uniform.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ShapeError("weights must be a non-empty 1-D array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite and non-negative")
    n = w.shape[0]
    if not 1 <= m <= n:
        raise RangeError(f"m={m} outside [1, {n}]")

    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)  # in (0, 1], avoids log(0)
    keys = np.full(n, -np.inf)
    positive = w > 0
    keys[positive] = np.log(u[positive]) / w[positive]

    n_pos = int(positive.sum())
    if n_pos >= m:
        chosen = np.argsort(-keys, kind="stable")[:m]
    else:
        pad = rng.choice(np.flatnonzero(~positive), size=m - n_pos, replace=False)
        chosen = np.concatenate([np.flatnonzero(positive), pad])
    return np.sort(chosen)
