"""Zero-mean Gaussian-process prior with an RBF kernel on a 1-D grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, NumericalError

log = logging.getLogger(__name__)

MAX_JITTER_EXPONENT = 6


@dataclass(frozen=True)
class RbfKernelParams:
    variance: float = 1.0
    lengthscale: float = 0.1

    def __post_init__(self):
        if not (self.variance > 0 and self.lengthscale > 0):
            raise ConfigError("RBF variance and lengthscale must be strictly positive")


@dataclass(frozen=True)
class GpFactor:
    points: np.ndarray
    chol: np.ndarray
    jitter: float

    @property
    def d(self):
        return self.chol.shape[0]

    @property
    def cov(self):
        return self.chol @ self.chol.T


def grid_points(d):
    return np.linspace(0.0, 1.0, d)


def build_covariance(points, params: RbfKernelParams):
    """k(s, s') = variance * exp(-(s - s')^2 / (2 lengthscale^2))."""
    s = np.asarray(points, dtype=float)
    diff = s[:, None] - s[None, :]
    return params.variance * np.exp(-0.5 * (diff / params.lengthscale) ** 2)


def cholesky_with_jitter(K, points=None) -> GpFactor:
    """Cholesky factor of K + jitter I, escalating jitter 1e-10 * 10^k until it succeeds."""
    K = np.asarray(K, dtype=float)
    if not np.allclose(K, K.T, rtol=0, atol=1e-12):
        raise ConfigError("covariance matrix is not symmetric")
    d = K.shape[0]
    points = grid_points(d) if points is None else np.asarray(points, dtype=float)
    jitters = [0.0] + [1e-10 * 10.0**k for k in range(MAX_JITTER_EXPONENT + 1)]
    for jitter in jitters:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            continue
        if np.all(np.diag(L) > 0):
            if jitter:
                log.info("cholesky needed jitter %.1e", jitter)
            return GpFactor(points, L, jitter)
    raise NumericalError(f"cholesky failed even with jitter {jitters[-1]:.1e}")


def gp_factor(d, params: RbfKernelParams | None = None) -> GpFactor:
    params = params or RbfKernelParams()
    pts = grid_points(d)
    return cholesky_with_jitter(build_covariance(pts, params), pts)


def sample(factor: GpFactor, rng, n=None):
    """x0 = L z with z standard normal; ``n`` draws stacked by row if given."""
    if n is None:
        return factor.chol @ rng.standard_normal(factor.d)
    z = rng.standard_normal((n, factor.d))
    return z @ factor.chol.T


def log_density(factor: GpFactor, x0):
    """Exact multivariate normal log density, vectorized over leading axes."""
    x0 = np.asarray(x0, dtype=float)
    flat = x0.reshape(-1, factor.d)
    w = solve_triangular(factor.chol, flat.T, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(factor.chol)))
    out = -0.5 * (np.sum(w * w, axis=0) + logdet + factor.d * math.log(2.0 * math.pi))
    return out.reshape(x0.shape[:-1])[()] if x0.ndim > 1 else float(out[0])


def marginal_cov(factor: GpFactor, alpha, v):
    """Covariance alpha K + v I of the noised marginal when x0 ~ N(0, K)."""
    return alpha * factor.cov + v * np.eye(factor.d)


def marginal_score(factor: GpFactor, sched, x_t, t):
    """Analytic score of p(x_t) = N(0, alpha_t K + v_t I)."""
    cov = marginal_cov(factor, sched.alpha(t), sched.v(t))
    x_t = np.asarray(x_t, dtype=float)
    return -np.linalg.solve(cov, x_t.reshape(-1, factor.d).T).T.reshape(x_t.shape)
