import numpy as np
import pytest

from dualprune.dynlog import DynamicsLog


def make_random_log(rng, n, t, labels=False, noise=False):
    """Valid random log; probabilities consistent, correctness arbitrary."""
    p_target = rng.random((n, t)).astype(np.float32)
    p_runner = (rng.random((n, t)) * (1.0 - p_target)).astype(np.float32)
    el2n = (rng.random((n, t)) * 2.0).astype(np.float32)
    entropy = (rng.random((n, t)) * 3.0).astype(np.float32)
    correct = rng.random((n, t)) > 0.5
    return DynamicsLog.from_arrays(
        p_target,
        p_runner,
        el2n,
        entropy,
        correct,
        labels=rng.integers(0, 10, n).astype(np.uint32) if labels else None,
        noise_flags=(rng.random(n) < 0.2) if noise else None,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_log(rng):
    return make_random_log(rng, n=12, t=20)
