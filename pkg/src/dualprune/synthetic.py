"""Two-point gradient-descent system and an N-point linear-GD log generator.

The two-point system trains a zero-initialized linear classifier on two
points by full-batch gradient descent under exponential loss and tracks
the logistic outputs sigma(y_t). Window variance/mean statistics of the two
outputs define the crossing times: the variance-only statistic flips order
at T_v, the variance-times-difficulty statistic at T_vm, and for small
learning rates T_vm < T_v.

The N-point generator runs the same recurrence on the signed Gram matrix
(y_i * y_j * <x_i, x_j>) so an N=2 run reproduces the two-point outputs bit
for bit, and emits a DynamicsLog for end-to-end pipeline tests without any
ML framework.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .dynlog import DynamicsLog
from .errors import AssumptionError, NumericalError, RangeError, ShapeError, WindowError

logger = logging.getLogger(__name__)

#: Reference geometry: a hard small-norm point and an easy
#: far one at a mildly acute angle.
D2_X1 = (0.1, 0.1)
D2_X2 = (10.0, 5.0)

ZETA_TOL = 1e-12
ZETA_MAX_ITER = 200


@dataclass(frozen=True)
class TwoPointConfig:
    x1: np.ndarray
    x2: np.ndarray
    eta: float
    t_max: int
    j: int = 10

    @classmethod
    def d2(cls, eta: float = 0.01, t_max: int = 2000, j: int = 10) -> "TwoPointConfig":
        return cls(np.asarray(D2_X1, dtype=np.float64), np.asarray(D2_X2, dtype=np.float64), eta, t_max, j)

    def __post_init__(self):
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=np.float64))
        object.__setattr__(self, "x2", np.asarray(self.x2, dtype=np.float64))
        if self.x1.shape != (2,) or self.x2.shape != (2,):
            raise ShapeError("x1 and x2 must be 2-vectors")
        if self.eta < 0:
            raise RangeError("eta must be non-negative")
        if self.t_max < 1:
            raise RangeError("t_max must be positive")
        assumption_check(self.x1, self.x2)


def assumption_check(x1, x2) -> None:
    """||x2|| > 1, 4||x1||^2 < 2<x1,x2> < ||x2||^2, <x1,x2> < ||x1|| ||x2||."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a = float(x1 @ x1)
    b = float(x1 @ x2)
    c = float(x2 @ x2)
    if c <= 1.0:
        raise AssumptionError(f"||x2||={np.sqrt(c):.6g} must exceed 1")
    if not 4.0 * a < 2.0 * b:
        raise AssumptionError(f"4||x1||^2={4*a:.6g} must be < 2<x1,x2>={2*b:.6g}")
    if not 2.0 * b < c:
        raise AssumptionError(f"2<x1,x2>={2*b:.6g} must be < ||x2||^2={c:.6g}")
    if not b < np.sqrt(a) * np.sqrt(c):
        raise AssumptionError("x1 and x2 must not be parallel")


def eta_stability_bound(x1, x2) -> float:
    """Learning rate below which the crossing-order guarantee is derived.

    log(<x1,x2>/||x1||^2) / (||x2||^2 + <x1,x2>); about 0.034 for the
    reference geometry.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a, b, c = float(x1 @ x1), float(x1 @ x2), float(x2 @ x2)
    return float(np.log(b / a) / (c + b))


def _gram_descent(gram: np.ndarray, eta: float, t_max: int) -> np.ndarray:
    """Margins z_t for full-batch GD on exponential loss, shape (t_max+1, n).

    z_{t+1} = z_t + eta * G @ exp(-z_t), z_0 = 0. Shared by the two-point
    simulator and the N-point generator so their outputs agree bitwise.
    """
    n = gram.shape[0]
    z = np.zeros(n, dtype=np.float64)
    out = np.empty((t_max + 1, n), dtype=np.float64)
    out[0] = z
    with np.errstate(over="raise"):
        try:
            for t in range(1, t_max + 1):
                z = z + eta * (gram @ np.exp(-z))
                out[t] = z
        except FloatingPointError:
            raise NumericalError(
                f"margin overflow at step {t}; learning rate too large for this geometry"
            ) from None
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite margins during descent")
    return out


@dataclass
class TwoPointTrajectory:
    """State series plus every derived statistic of one simulation run."""

    config: TwoPointConfig
    w: np.ndarray          # (t_max+1, 2)
    y1: np.ndarray         # (t_max+1,)
    y2: np.ndarray
    sig1: np.ndarray       # sigma(y)
    sig2: np.ndarray
    dy: np.ndarray         # y2 - y1
    ratio: np.ndarray      # one-step output ratio, length t_max
    gamma_v: np.ndarray    # truncated at the last finite/positive denominator
    gamma_m: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    dzeta: np.ndarray
    v1: np.ndarray         # window variances/means, length t_max - j + 2
    v2: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    t_v: int | None
    t_vm: int | None
    saturation_index: int  # first t with sigma(y2) == 1.0 in f64, else t_max+1
    eta_bound: float
    r_limit: float         # ||x1||^2 / <x1,x2>
    r0: float              # first-step ratio

    @property
    def t_max(self) -> int:
        return self.config.t_max


def _complement(y: np.ndarray) -> np.ndarray:
    """1 - sigma(y) evaluated stably as sigma(-y)."""
    return expit(-y)


def _sigma_prime(z: np.ndarray | float):
    return expit(z) * expit(-np.asarray(z, dtype=np.float64))


def _zeta_series(y: np.ndarray) -> np.ndarray:
    """Mean-value abscissae: sigma(y_{t+1}) - sigma(y_t) = (y_{t+1}-y_t) sigma'(zeta).

    Batched bisection on [y_t, y_{t+1}], where sigma' is strictly decreasing
    (y >= 0), to absolute tolerance 1e-12.
    """
    comp = _complement(y)
    dy = y[1:] - y[:-1]
    num = comp[:-1] - comp[1:]
    valid = (dy > 0) & (num > 0)
    k = int(np.argmin(valid)) if not valid.all() else len(valid)
    if k == 0:
        return np.empty(0, dtype=np.float64)

    lo = y[:k].copy()
    hi = y[1 : k + 1].copy()
    target = num[:k] / dy[:k]
    if np.any(_sigma_prime(lo) < target) or np.any(_sigma_prime(hi) > target):
        raise NumericalError("lost bisection bracket in zeta solve")
    for _ in range(ZETA_MAX_ITER):
        mid = 0.5 * (lo + hi)
        go_right = _sigma_prime(mid) >= target
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        if float(np.max(hi - lo)) < ZETA_TOL:
            break
    return 0.5 * (lo + hi)


def window_stats(values: np.ndarray, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Bessel-corrected variance and mean over windows [t, t+j-1] of a series."""
    values = np.asarray(values, dtype=np.float64)
    if j < 2:
        raise WindowError("window j must be >= 2")
    if j > values.shape[0]:
        raise WindowError(f"window j={j} exceeds series length {values.shape[0]}")
    windows = np.lib.stride_tricks.sliding_window_view(values, j)
    return windows.var(axis=1, ddof=1), windows.mean(axis=1)


def crossing_times(
    v1: np.ndarray, v2: np.ndarray, mu1: np.ndarray, mu2: np.ndarray
) -> tuple[int | None, int | None]:
    """First window-start indices where the variance-only and the
    variance-times-difficulty statistics flip order; None if never."""
    hit_v = np.flatnonzero(v1 > v2)
    hit_vm = np.flatnonzero(v1 * (1.0 - mu1) > v2 * (1.0 - mu2))
    t_v = int(hit_v[0]) if hit_v.size else None
    t_vm = int(hit_vm[0]) if hit_vm.size else None
    return t_v, t_vm


def simulate_two_point(config: TwoPointConfig) -> TwoPointTrajectory:
    """Run the recurrence and populate every derived series."""
    x1, x2, eta, t_max = config.x1, config.x2, config.eta, config.t_max
    a, b, c = float(x1 @ x1), float(x1 @ x2), float(x2 @ x2)

    bound = eta_stability_bound(x1, x2)
    if eta > bound:
        warnings.warn(
            f"eta={eta:.6g} above the stability bound {bound:.6g}; "
            "crossing order is no longer guaranteed",
            stacklevel=2,
        )

    gram = np.array([[a, b], [b, c]], dtype=np.float64)
    z = _gram_descent(gram, eta, t_max)
    y1, y2 = z[:, 0].copy(), z[:, 1].copy()

    # weight track, for directional-convergence diagnostics
    increments = eta * (np.exp(-y1[:-1, None]) * x1 + np.exp(-y2[:-1, None]) * x2)
    w = np.vstack([np.zeros((1, 2)), np.cumsum(increments, axis=0)])

    sig1, sig2 = expit(y1), expit(y2)
    dy = y2 - y1

    dy1_steps = np.diff(y1)
    dy2_steps = np.diff(y2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(dy2_steps > 0, dy1_steps / dy2_steps, np.nan)

    comp1, comp2 = _complement(y1), _complement(y2)
    num_v = comp1[:-1] - comp1[1:]
    den_v = comp2[:-1] - comp2[1:]
    valid = den_v > 0
    cut = int(np.argmin(valid)) if not valid.all() else len(valid)
    gamma_v = num_v[:cut] / den_v[:cut]

    log_gm = np.logaddexp(0.0, y2) - np.logaddexp(0.0, y1)
    gamma_m = np.exp(log_gm)
    finite = np.isfinite(gamma_m)
    if not finite.all():
        gamma_m = gamma_m[: int(np.argmin(finite))]

    zeta1 = _zeta_series(y1)
    zeta2 = _zeta_series(y2)
    k = min(len(zeta1), len(zeta2))
    dzeta = zeta2[:k] - zeta1[:k]

    if config.j <= t_max:
        v1, mu1 = window_stats(sig1, config.j)
        v2, mu2 = window_stats(sig2, config.j)
    else:
        v1 = v2 = mu1 = mu2 = np.empty(0)
    t_v, t_vm = crossing_times(v1, v2, mu1, mu2)

    sat = np.flatnonzero(sig2 >= 1.0)
    saturation_index = int(sat[0]) if sat.size else t_max + 1

    r_limit = a / b
    r0 = (a + b) / (b + c)

    return TwoPointTrajectory(
        config=config,
        w=w,
        y1=y1,
        y2=y2,
        sig1=sig1,
        sig2=sig2,
        dy=dy,
        ratio=ratio,
        gamma_v=gamma_v,
        gamma_m=gamma_m,
        zeta1=zeta1,
        zeta2=zeta2,
        dzeta=dzeta,
        v1=v1,
        v2=v2,
        mu1=mu1,
        mu2=mu2,
        t_v=t_v,
        t_vm=t_vm,
        saturation_index=saturation_index,
        eta_bound=bound,
        r_limit=r_limit,
        r0=r0,
    )


def gamma_series(traj: TwoPointTrajectory) -> tuple[np.ndarray, np.ndarray]:
    return traj.gamma_v, traj.gamma_m


def zeta_series(traj: TwoPointTrajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return traj.zeta1, traj.zeta2, traj.dzeta


def trajectory_to_csv(traj: TwoPointTrajectory, path) -> None:
    """Flat per-step export; cells outside a series' computed length stay empty."""
    cols = {
        "y1": traj.y1,
        "y2": traj.y2,
        "sig1": traj.sig1,
        "sig2": traj.sig2,
        "dy": traj.dy,
        "gammaV": traj.gamma_v,
        "gammaM": traj.gamma_m,
        "zeta1": traj.zeta1,
        "zeta2": traj.zeta2,
        "dzeta": traj.dzeta,
        "V1": traj.v1,
        "V2": traj.v2,
        "mu1": traj.mu1,
        "mu2": traj.mu2,
    }
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *cols.keys()])
        for t in range(traj.t_max + 1):
            row = [t]
            for series in cols.values():
                if t < len(series) and np.isfinite(series[t]):
                    row.append(repr(float(series[t])))
                else:
                    row.append("")
            writer.writerow(row)


def moon_trajectory_to_csv(traj: TwoPointTrajectory, path) -> None:
    """Cumulative (std, mean) of each point's sigma(y) series up to t."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "p_std1", "p_mean1", "p_std2", "p_mean2"])
        for t in range(1, traj.t_max + 1):
            s1 = traj.sig1[: t + 1]
            s2 = traj.sig2[: t + 1]
            writer.writerow(
                [
                    t,
                    repr(float(s1.std(ddof=1))),
                    repr(float(s1.mean())),
                    repr(float(s2.std(ddof=1))),
                    repr(float(s2.mean())),
                ]
            )


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    q = p[interior]
    out[interior] = -q * np.log(q) - (1.0 - q) * np.log1p(-q)
    return out


def is_separable(points: Sequence[tuple[np.ndarray, int]]) -> bool:
    """2-D linear separability through the origin: the signed directions
    y_i * x_i must fit inside an open half-plane."""
    dirs = np.array([np.asarray(x, dtype=np.float64) * y for x, y in points])
    angles = np.sort(np.arctan2(dirs[:, 1], dirs[:, 0]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
    return bool(gaps.max() > np.pi)


def generate_linear_log(
    points: Sequence[tuple[np.ndarray, int]],
    flip_fraction: float,
    eta: float,
    t_max: int,
    seed: int,
) -> DynamicsLog:
    """Train a zero-init linear classifier by full-batch GD on exponential
    loss and record per-epoch dynamics for every sample.

    A ``flip_fraction`` share of samples (exact count, chosen by ``seed``)
    gets its label negated before training; the flips are recorded in
    noise_flags and never otherwise influence the recorded fields.
    """
    n = len(points)
    if n < 2:
        raise ShapeError("need at least 2 points")
    if t_max < 2:
        raise RangeError("t_max must be >= 2")
    if not 0.0 <= flip_fraction < 1.0:
        raise RangeError(f"flip_fraction={flip_fraction} outside [0, 1)")

    xs = np.array([np.asarray(x, dtype=np.float64) for x, _ in points])
    ys = np.array([float(y) for _, y in points])
    if xs.shape[1] != 2:
        raise ShapeError("points must be 2-vectors")
    if not np.all(np.abs(ys) == 1.0):
        raise ShapeError("labels must be +1 or -1")

    if not is_separable(points):
        logger.warning("input set is not linearly separable before flips")

    rng = np.random.default_rng(seed)
    flips = np.zeros(n, dtype=bool)
    k = int(round(flip_fraction * n))
    if k:
        flips[rng.choice(n, size=k, replace=False)] = True
    y_train = np.where(flips, -ys, ys)

    gram = np.outer(y_train, y_train) * (xs @ xs.T)
    z = _gram_descent(gram, eta, t_max)

    p = expit(z[1:]).T  # (n, t_max), epoch e holds sigma(z_e)
    el2n = np.sqrt(2.0) * np.abs(1.0 - p)
    entropy = _binary_entropy(p)
    return DynamicsLog.from_arrays(
        p_target=p,
        p_runner_up=1.0 - p,
        el2n=el2n,
        entropy=entropy,
        correct=p > 0.5,
        labels=((y_train + 1.0) / 2.0).astype(np.uint32),
        noise_flags=flips,
    )


#: Reference noise-filtering geometry: a small far-norm cluster that the
#: model fits first and a large near-origin cluster held in a slow standoff,
#: all labeled +1. Flipped labels ride the early gradient (low uncertainty,
#: low difficulty-weighted score) while clean near-origin points stay
#: uncertain, so threshold pruning removes flips preferentially.
TWO_GAUSSIAN_DEFAULTS = {
    "n_far": 26,
    "far_center": (4.0, 0.0),
    "far_std": 0.2,
    "n_near": 174,
    "near_radius": 0.49,
    "near_angle_deg": 161.0,
    "near_std": 0.0196,
}
TWO_GAUSSIAN_ETA = 1.2e-4


def two_gaussian_points(
    seed: int,
    n_far: int = TWO_GAUSSIAN_DEFAULTS["n_far"],
    n_near: int = TWO_GAUSSIAN_DEFAULTS["n_near"],
    far_center: tuple[float, float] = TWO_GAUSSIAN_DEFAULTS["far_center"],
    far_std: float = TWO_GAUSSIAN_DEFAULTS["far_std"],
    near_radius: float = TWO_GAUSSIAN_DEFAULTS["near_radius"],
    near_angle_deg: float = TWO_GAUSSIAN_DEFAULTS["near_angle_deg"],
    near_std: float = TWO_GAUSSIAN_DEFAULTS["near_std"],
) -> list[tuple[np.ndarray, int]]:
    """Draw the seeded two-Gaussian reference set (labels all +1)."""
    rng = np.random.default_rng(seed)
    theta = np.radians(near_angle_deg)
    near_center = near_radius * np.array([np.cos(theta), np.sin(theta)])
    far = rng.normal(far_center, far_std, size=(n_far, 2))
    near = rng.normal(near_center, near_std, size=(n_near, 2))
    return [(x, 1) for x in far] + [(x, 1) for x in near]
