import math

import numpy as np
import pytest
from scipy import integrate

from expdiff import gp
from expdiff.errors import ConfigError, NumericalError
from expdiff.sde import DiffusionSchedule


def test_covariance_values():
    params = gp.RbfKernelParams(1.0, 0.1)
    K = gp.build_covariance(np.array([0.0, 0.1, 0.3]), params)
    assert K[0, 0] == 1.0
    assert K[0, 1] == pytest.approx(0.606531, abs=1e-6)
    assert K[0, 2] == pytest.approx(0.011109, abs=1e-6)
    assert np.array_equal(K, K.T)
    K2 = gp.build_covariance(np.linspace(0, 1, 5), gp.RbfKernelParams(2.5, 0.3))
    assert np.all(np.diag(K2) == 2.5)


def test_kernel_params_validated():
    with pytest.raises(ConfigError):
        gp.RbfKernelParams(0.0, 0.1)
    with pytest.raises(ConfigError):
        gp.RbfKernelParams(1.0, -0.1)


def test_cholesky_identity_needs_no_jitter():
    f = gp.cholesky_with_jitter(np.eye(4))
    assert f.jitter == 0.0
    assert np.array_equal(f.chol, np.eye(4))


def test_cholesky_singular_gets_jitter():
    f = gp.cholesky_with_jitter(np.ones((2, 2)))
    assert f.jitter > 0
    assert np.all(np.diag(f.chol) > 0)
    assert np.max(np.abs(f.cov - np.ones((2, 2)))) <= f.jitter + 1e-10


def test_cholesky_reconstruction(rng):
    A = rng.standard_normal((6, 6))
    K = A @ A.T
    f = gp.cholesky_with_jitter(K)
    assert np.max(np.abs(f.cov - K)) < 1e-10 + f.jitter
    assert np.allclose(np.tril(f.chol), f.chol)


def test_cholesky_failure_and_asymmetry():
    with pytest.raises(NumericalError):
        gp.cholesky_with_jitter(-np.eye(3))
    with pytest.raises(ConfigError):
        gp.cholesky_with_jitter(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_benchmark_grid_factor():
    f = gp.gp_factor(30)
    K = gp.build_covariance(gp.grid_points(30), gp.RbfKernelParams())
    assert np.max(np.abs(f.cov - K)) <= f.jitter + 1e-10
    assert gp.grid_points(30)[0] == 0.0 and gp.grid_points(30)[-1] == 1.0


def test_log_density_identity_at_origin():
    f = gp.cholesky_with_jitter(np.eye(3))
    assert gp.log_density(f, np.zeros(3)) == pytest.approx(-1.5 * math.log(2 * math.pi))


def test_log_density_matches_scipy(rng):
    from scipy import stats

    f = gp.gp_factor(5)
    x = rng.standard_normal((4, 5))
    ref = stats.multivariate_normal(np.zeros(5), f.cov).logpdf(x)
    np.testing.assert_allclose(gp.log_density(f, x), ref, rtol=1e-10)


def test_log_density_integrates_to_one_in_one_dimension():
    f = gp.cholesky_with_jitter(np.array([[0.7]]))
    val, _ = integrate.quad(lambda x: math.exp(gp.log_density(f, np.array([x]))), -np.inf, np.inf)
    assert abs(val - 1.0) < 1e-6


class _ZeroRng:
    def standard_normal(self, shape):
        return np.zeros(shape)


def test_sample_with_zero_noise_is_zero():
    f = gp.gp_factor(4)
    assert np.array_equal(gp.sample(f, _ZeroRng()), np.zeros(4))


def test_sample_covariance_monte_carlo(rng):
    f = gp.gp_factor(6)
    x = gp.sample(f, rng, 100_000)
    assert np.max(np.abs(np.cov(x.T) - f.cov)) < 0.05


def test_standard_normal_factor_mean(rng):
    f = gp.cholesky_with_jitter(np.eye(3))
    x = gp.sample(f, rng, 100_000)
    assert np.all(np.abs(x.mean(axis=0)) < 0.02)


def test_marginal_score_is_gradient_of_marginal_log_density(rng):
    import oracles

    f = gp.gp_factor(4)
    sched = DiffusionSchedule()
    t = 0.3
    cov = gp.marginal_cov(f, sched.alpha(t), sched.v(t))
    x = rng.standard_normal(4)
    fd = oracles.numeric_grad(lambda z: -0.5 * z @ np.linalg.solve(cov, z), x)
    np.testing.assert_allclose(gp.marginal_score(f, sched, x, t), fd, rtol=1e-7, atol=1e-8)
