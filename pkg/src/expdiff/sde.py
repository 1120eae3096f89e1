"""Variance-preserving SDE with a linear noise schedule.

beta(t) = beta0 + t (beta1 - beta0),  alpha_t = exp(-int_0^t beta),  v_t = 1 - alpha_t,
and the forward kernel x_t | x0 ~ N(sqrt(alpha_t) x0, v_t I).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


def _check_t(t, lo=0.0):
    t = np.asarray(t, dtype=float)
    if not np.all((t >= lo) & (t <= 1.0)):
        raise DomainError(f"time must lie in [{lo:g}, 1], got {t.ravel()[np.argmax(~((t >= lo) & (t <= 1.0)).ravel())]!r}")
    return t


@dataclass(frozen=True)
class DiffusionSchedule:
    beta0: float = 0.001
    beta1: float = 20.0
    eps: float = 1e-3

    def __post_init__(self):
        if not (self.beta0 > 0 and self.beta1 >= self.beta0):
            raise ConfigError("schedule requires 0 < beta0 <= beta1")
        if not 0 < self.eps < 1:
            raise ConfigError("schedule requires 0 < eps < 1")

    def beta(self, t):
        return self.beta0 + np.asarray(t, dtype=float) * (self.beta1 - self.beta0)

    def log_alpha(self, t):
        t = _check_t(t)
        return -(t * self.beta0 + 0.5 * (self.beta1 - self.beta0) * t * t)

    def alpha(self, t):
        out = np.exp(self.log_alpha(t))
        return out[()] if np.ndim(out) == 0 else out

    def v(self, t):
        out = -np.expm1(self.log_alpha(t))
        return out[()] if np.ndim(out) == 0 else out


def alpha(sched: DiffusionSchedule, t):
    return sched.alpha(t)


def v(sched: DiffusionSchedule, t):
    return sched.v(t)


def _col(a, ndim):
    # broadcast per-row times against (B, d) arrays
    a = np.asarray(a, dtype=float)
    return a.reshape(a.shape + (1,) * (ndim - a.ndim)) if a.ndim and ndim > a.ndim else a


def sample_forward(sched: DiffusionSchedule, x0, t, rng, z=None):
    """x_t = sqrt(alpha_t) x0 + sqrt(v_t) z; ``t`` may be a scalar or one time per row."""
    x0 = np.asarray(x0, dtype=float)
    _check_t(t)
    if z is None:
        z = rng.standard_normal(x0.shape)
    a = _col(sched.alpha(t), x0.ndim)
    var = _col(sched.v(t), x0.ndim)
    return np.sqrt(a) * x0 + np.sqrt(var) * z


def cond_score_target(sched: DiffusionSchedule, x0, x_t, t):
    """Score of the forward kernel, -(x_t - sqrt(alpha_t) x0) / v_t."""
    t = _check_t(t)
    var = sched.v(t)
    if np.any(np.asarray(var) <= 0):
        raise DomainError("conditional score undefined at t = 0")
    x0 = np.asarray(x0, dtype=float)
    x_t = np.asarray(x_t, dtype=float)
    a = _col(sched.alpha(t), x_t.ndim)
    return -(x_t - np.sqrt(a) * x0) / _col(var, x_t.ndim)


def dsm_weight(sched: DiffusionSchedule, t):
    """Weight lambda(t) = v_t (the 1/d factor is absorbed by averaging over coordinates)."""
    return sched.v(t)
