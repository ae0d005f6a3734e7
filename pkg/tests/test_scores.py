import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualprune.dynlog import DynamicsLog, slice_epochs
from dualprune.errors import DegenerateError, RangeError, ShapeError, WindowError
from dualprune.scores import (
    Metric,
    PRESETS,
    ScoreTable,
    aum_score,
    dual_score,
    dyn_unc,
    el2n_score,
    entropy_score,
    forgetting_score,
    spearman,
    windowed_uncertainty,
)

from conftest import make_random_log


def log_from_p(p_target, correct=None):
    p = np.asarray(p_target, dtype=np.float32)
    if p.ndim == 1:
        p = p[None, :]
    z = np.zeros_like(p)
    c = (p > 0.5) if correct is None else np.asarray(correct, bool)
    if c.ndim == 1:
        c = c[None, :]
    return DynamicsLog.from_arrays(p, z, z, z, c)


# -- windowed uncertainty ------------------------------------------------

def test_constant_series_zero():
    np.testing.assert_array_equal(windowed_uncertainty([0.7] * 10, 5), np.zeros(6))


def test_three_point_window():
    out = windowed_uncertainty([0.2, 0.4, 0.6], 3)
    assert out == pytest.approx([0.2], rel=1e-7)


def test_two_point_window():
    out = windowed_uncertainty([0.0, 1.0], 2)
    assert out == pytest.approx([math.sqrt(0.5)], rel=1e-12)


def test_window_errors():
    with pytest.raises(WindowError):
        windowed_uncertainty([0.1, 0.2], 3)
    with pytest.raises(WindowError):
        windowed_uncertainty([0.1, 0.2], 1)


def test_uncertainty_bound(rng):
    # max std of [0,1]-valued data
    for j in (2, 5, 10):
        series = rng.random(40)
        assert windowed_uncertainty(series, j).max() <= 0.5 * math.sqrt(j / (j - 1)) + 1e-12


# -- dyn-unc and dual ----------------------------------------------------

def test_dyn_unc_constant_zero():
    table = dyn_unc(log_from_p([0.3] * 8), 8, 4)
    assert table.values == pytest.approx([0.0], abs=1e-12)


def test_dyn_unc_hand_value():
    table = dyn_unc(log_from_p([0.2, 0.4, 0.6, 0.8]), 4, 3)
    assert table.values == pytest.approx([0.2], rel=1e-6)


def test_dual_constant_zero():
    for level in (0.0, 0.42, 1.0):
        table = dual_score(log_from_p([level] * 6), 6, 3)
        assert table.values == pytest.approx([0.0], abs=1e-12)


def test_dual_hand_values():
    t1 = dual_score(log_from_p([0.2, 0.4, 0.6]), 3, 3)
    assert t1.values == pytest.approx([0.12], rel=1e-6)
    t2 = dual_score(log_from_p([0.2, 0.4, 0.6, 0.8]), 4, 3)
    assert t2.values == pytest.approx([0.10], rel=1e-6)
    assert t2.prediction_mean == pytest.approx([0.5], rel=1e-6)


def naive_dual_and_unc(p, j):
    """Reference nested-loop implementation, kept deliberately simple."""
    n, t = p.shape
    dual = np.zeros(n)
    unc = np.zeros(n)
    for i in range(n):
        du, un = [], []
        for k in range(t - j + 1):
            window = [float(p[i, k + off]) for off in range(j)]
            mean = sum(window) / j
            var = sum((v - mean) ** 2 for v in window) / (j - 1)
            std = math.sqrt(var)
            un.append(std)
            du.append((1.0 - mean) * std)
        dual[i] = sum(du) / len(du)
        unc[i] = sum(un) / len(un)
    return dual, unc


def test_oracle_equivalence_sample(rng):
    for _ in range(10):
        n = int(rng.integers(2, 30))
        t = int(rng.integers(12, 40))
        j = int(rng.choice([2, 5, 10]))
        log = make_random_log(rng, n, t)
        p = log.p_target.astype(np.float64)
        exp_dual, exp_unc = naive_dual_and_unc(p, j)
        np.testing.assert_allclose(dual_score(log, t, j).values, exp_dual, atol=1e-12)
        np.testing.assert_allclose(dyn_unc(log, t, j).values, exp_unc, atol=1e-12)


def test_dual_below_dyn_unc(rng):
    log = make_random_log(rng, 40, 30)
    d = dual_score(log, 30, 10).values
    u = dyn_unc(log, 30, 10).values
    assert np.all(d <= u + 1e-15)


def test_order_invariance(rng):
    log = make_random_log(rng, 25, 18)
    perm = rng.permutation(25)
    permuted = DynamicsLog.from_arrays(
        log.p_target[perm], log.p_runner_up[perm], log.el2n[perm],
        log.entropy[perm], log.correct[perm],
    )
    np.testing.assert_array_equal(dual_score(permuted, 18, 5).values, dual_score(log, 18, 5).values[perm])


def test_dual_ignores_later_epochs(rng):
    log = make_random_log(rng, 10, 40)
    full = dual_score(log, 25, 10).values
    cut = dual_score(slice_epochs(log, 25), 25, 10).values
    np.testing.assert_array_equal(full, cut)


def test_horizon_out_of_range(rng):
    log = make_random_log(rng, 4, 10)
    with pytest.raises(RangeError):
        dual_score(log, 11, 5)
    with pytest.raises(WindowError):
        dual_score(log, 10, 11)


# -- snapshot metrics ----------------------------------------------------

def _log_with_el2n(el2n_rows):
    e = np.asarray(el2n_rows, dtype=np.float32)
    z = np.zeros_like(e)
    return DynamicsLog.from_arrays(z, z, e, z, z.astype(bool))


def test_el2n_single_log():
    log = _log_with_el2n([[0.5, 1.5], [2.5, 3.5]])
    table = el2n_score([log], 2)
    assert table.values == pytest.approx([1.5, 3.5])


def test_el2n_average_over_runs(rng):
    rows1 = np.full((3, 25), 0.5)
    rows2 = np.full((3, 25), 0.7)
    table = el2n_score([_log_with_el2n(rows1), _log_with_el2n(rows2)], 20)
    assert table.values == pytest.approx([0.6, 0.6, 0.6], rel=1e-6)


def test_el2n_errors(rng):
    a = make_random_log(rng, 4, 10)
    b = make_random_log(rng, 5, 10)
    with pytest.raises(ShapeError):
        el2n_score([a, b], 5)
    with pytest.raises(RangeError):
        el2n_score([a], 11)


def test_aum_maximal_margin():
    p = np.ones((1, 4), dtype=np.float32)
    z = np.zeros_like(p)
    log = DynamicsLog.from_arrays(p, z, z, z, np.ones_like(p, bool))
    assert aum_score(log, 4).values == pytest.approx([1.0])


def test_aum_hand_value():
    p = np.array([[0.4, 0.2, 0.6]], dtype=np.float32)
    q = np.array([[0.3, 0.4, 0.3]], dtype=np.float32)  # margins 0.1, -0.2, 0.3
    z = np.zeros_like(p)
    log = DynamicsLog.from_arrays(p, q, z, z, z.astype(bool))
    assert aum_score(log, 3).values == pytest.approx([0.2 / 3], rel=1e-5)


def test_aum_tie_is_zero():
    p = np.full((1, 5), 0.5, dtype=np.float32)
    z = np.zeros_like(p)
    log = DynamicsLog.from_arrays(p, p, z, z, z.astype(bool))
    assert aum_score(log, 5).values == pytest.approx([0.0], abs=1e-12)


def test_forgetting_counts():
    always = log_from_p([0.9] * 5, correct=[[True] * 5])
    assert forgetting_score(always, 5).values == pytest.approx([0.0])
    flipping = log_from_p([0.5] * 5, correct=[[True, False, True, False, True]])
    assert forgetting_score(flipping, 5).values == pytest.approx([2.0])


def test_forgetting_sentinel():
    never = log_from_p([0.1] * 30, correct=[[False] * 30])
    assert forgetting_score(never, 30).values == pytest.approx([30.0])
    assert forgetting_score(never, 30, never_correct_sentinel=False).values == pytest.approx([0.0])


def test_entropy_projection():
    ent = np.array([[math.log(2), 0.0]], dtype=np.float32)
    z = np.zeros_like(ent)
    log = DynamicsLog.from_arrays(z, z, z, ent, z.astype(bool))
    assert entropy_score(log, 1).values == pytest.approx([0.6931], abs=1e-4)
    assert entropy_score(log, 2).values == pytest.approx([0.0])


# -- spearman ------------------------------------------------------------

def test_spearman_identity_and_reversal(rng):
    a = rng.random(50)
    assert spearman(a, a) == pytest.approx(1.0)
    assert spearman(a, -a) == pytest.approx(-1.0)


def test_spearman_hand_value():
    assert spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_spearman_tie_handling():
    # average ranks: scipy convention, cross-checked by hand
    assert spearman([1, 1, 2], [1, 2, 3]) == pytest.approx(math.sqrt(3) / 2, rel=1e-12)


def test_spearman_errors():
    with pytest.raises(ShapeError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateError):
        spearman([1.0, 1.0, 1.0], [1, 2, 3])
    with pytest.raises(ShapeError):
        spearman([1.0], [2.0])


@given(st.lists(st.integers(-5000, 5000), min_size=3, max_size=30, unique=True), st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_spearman_monotone_invariance(values, seed):
    rng = np.random.default_rng(seed)
    a = np.array(values, dtype=np.float64)
    b = rng.random(len(values))
    if np.all(b == b[0]):
        return
    base = spearman(a, b)
    assert spearman(np.exp(a / 50.0), b) == pytest.approx(base, abs=1e-9)
    assert spearman(a**3, b) == pytest.approx(base, abs=1e-9)


def test_presets():
    assert PRESETS["cifar10"] == (30, 10, 5.5)
    assert PRESETS["cifar100"] == (30, 10, 4.0)
    assert PRESETS["imagenet"] == (60, 10, 11.0)


def test_score_table_csv_round_trip(rng, tmp_path):
    log = make_random_log(rng, 9, 15)
    table = dual_score(log, 15, 5)
    path = tmp_path / "scores.csv"
    table.to_csv(path)
    back = ScoreTable.from_csv(path, Metric.DUAL, 15, 5)
    np.testing.assert_allclose(back.values, table.values, rtol=0, atol=0)
    np.testing.assert_allclose(back.prediction_mean, table.prediction_mean, rtol=0, atol=0)
