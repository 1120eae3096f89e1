import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from expdiff.errors import ConfigError, DomainError
from expdiff.sde import DiffusionSchedule, cond_score_target, dsm_weight, sample_forward

SCHED = DiffusionSchedule()


class _ZeroRng:
    def standard_normal(self, shape):
        return np.zeros(shape)


class _FixedSchedule(DiffusionSchedule):
    """Schedule with prescribed alpha for hand-evaluated examples."""

    def __init__(self, a):
        object.__setattr__(self, "_a", a)
        super().__init__()

    def alpha(self, t):
        return self._a

    def v(self, t):
        return 1.0 - self._a


def test_alpha_examples():
    assert SCHED.alpha(0.0) == 1.0 and SCHED.v(0.0) == 0.0
    assert SCHED.alpha(1.0) == pytest.approx(4.5377e-5, rel=1e-4)
    assert SCHED.alpha(1.0) == pytest.approx(math.exp(-10.0005), rel=1e-14)
    assert DiffusionSchedule(2.0, 2.0).alpha(0.5) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_alpha_matches_numeric_integral_of_beta():
    for t in (0.1, 0.5, 0.9):
        integral, _ = integrate.quad(lambda s: float(SCHED.beta(s)), 0.0, t)
        assert SCHED.alpha(t) == pytest.approx(math.exp(-integral), rel=1e-12)


def test_alpha_monotone_and_eps_bound():
    ts = np.linspace(0, 1, 1001)
    assert np.all(np.diff(SCHED.alpha(ts)) < 0)
    assert SCHED.alpha(SCHED.eps) > 0.99


def test_time_outside_unit_interval_raises():
    with pytest.raises(DomainError):
        SCHED.alpha(1.5)
    with pytest.raises(DomainError):
        SCHED.v(-0.1)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        DiffusionSchedule(beta0=0.0)
    with pytest.raises(ConfigError):
        DiffusionSchedule(beta0=2.0, beta1=1.0)
    with pytest.raises(ConfigError):
        DiffusionSchedule(eps=1.0)


def test_forward_sample_examples():
    x0 = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(sample_forward(SCHED, x0, 0.0, None, z=np.ones(3)), x0)
    out = sample_forward(SCHED, x0, 0.4, _ZeroRng())
    np.testing.assert_allclose(out, math.sqrt(SCHED.alpha(0.4)) * x0)


def test_forward_sample_moments(rng):
    x0 = np.full(100_000, 1.5)
    t = 0.3
    xt = sample_forward(SCHED, x0, t, rng)
    a, v = SCHED.alpha(t), SCHED.v(t)
    se_mean = math.sqrt(v / x0.size)
    se_var = v * math.sqrt(2.0 / x0.size)
    assert abs(xt.mean() - math.sqrt(a) * 1.5) < 4 * se_mean
    assert abs(xt.var() - v) < 4 * se_var


def test_forward_sample_per_row_times(rng):
    x0 = np.ones((3, 2))
    t = np.array([0.1, 0.5, 0.9])
    out = sample_forward(SCHED, x0, t, rng, z=np.zeros((3, 2)))
    np.testing.assert_allclose(out[:, 0], np.sqrt(SCHED.alpha(t)))


def test_cond_score_examples():
    assert np.all(cond_score_target(SCHED, np.ones(2), math.sqrt(SCHED.alpha(0.5)) * np.ones(2), 0.5) == 0)
    s = _FixedSchedule(0.25)
    assert cond_score_target(s, np.array([2.0]), np.array([1.0]), 0.5)[0] == pytest.approx(0.0)
    assert cond_score_target(s, np.array([0.0]), np.array([0.75]), 0.5)[0] == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        cond_score_target(SCHED, np.zeros(1), np.zeros(1), 0.0)


def test_dsm_weight_examples():
    assert dsm_weight(SCHED, 0.0) == 0.0
    assert dsm_weight(SCHED, 1.0) == 1.0 - SCHED.alpha(1.0)
    assert dsm_weight(DiffusionSchedule(2.0, 2.0), 0.5) == pytest.approx(1 - math.exp(-1))


@pytest.mark.parametrize("t", [0.05, 0.4, 0.95])
def test_weighted_target_has_unit_scale(t, rng):
    d = 16
    x0 = rng.standard_normal((20_000, d))
    xt = sample_forward(SCHED, x0, t, rng)
    target = cond_score_target(SCHED, x0, xt, t)
    ratio = dsm_weight(SCHED, t) * np.mean(np.sum(target**2, axis=1)) / d
    assert abs(ratio - 1.0) < 0.02


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_alpha_decreasing_property(t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    assert SCHED.alpha(lo) >= SCHED.alpha(hi)
    assert SCHED.alpha(hi) + SCHED.v(hi) == pytest.approx(1.0, abs=1e-15)
