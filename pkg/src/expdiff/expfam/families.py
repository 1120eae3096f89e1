"""One-parameter exponential-family likelihoods and their natural conjugate priors.

Every family writes its likelihood as

    p(y | theta) = h(y) exp(eta(theta) T(y) - A_y(theta))

and its conjugate prior on theta, with hyperparameters zeta = (nu, tau), as

    q(theta | nu, tau) = h_theta exp(nu eta(theta) - tau A_y(theta) - A_theta(nu, tau)).

All methods are vectorized over numpy arrays. Values outside a family's
support or domain raise :class:`~expdiff.errors.DomainError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .._specstr import format_spec, parse_spec
from ..errors import ConfigError, DomainError
from .special import digamma, lgamma, log_binom

INTEGER_TOL = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


def _arr(x):
    return np.asarray(x, dtype=float)


def _ret(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


@dataclass(frozen=True)
class LikelihoodFamily:
    """Base class; concrete families are the subclasses registered in ``FAMILIES``."""

    kind: ClassVar[str] = ""
    conjugate: ClassVar[str] = ""  # normal | gamma | beta | invgamma
    discrete: ClassVar[bool] = False
    supports_exposure: ClassVar[bool] = False
    log_h_theta: ClassVar[float] = 0.0

    # -- support and domains -------------------------------------------------
    def _support_mask(self, y):
        raise NotImplementedError

    def check_support(self, y):
        """Return y as a float array, rounded to integers for discrete families."""
        y = _arr(y)
        ok = np.isfinite(y) & self._support_mask(y)
        if self.discrete:
            ok &= np.abs(y - np.round(y)) <= INTEGER_TOL
        if not np.all(ok):
            bad = y[~ok].ravel()[0]
            raise DomainError(f"value {bad!r} is outside the support of {self}")
        return np.round(y) if self.discrete else y

    def _theta_mask(self, theta):
        return theta > 0.0

    def check_theta(self, theta):
        theta = _arr(theta)
        ok = np.isfinite(theta) & self._theta_mask(theta)
        if not np.all(ok):
            bad = theta[~ok].ravel()[0]
            raise DomainError(f"parameter theta={bad!r} is outside the parameter space of {self}")
        return theta

    def prior_domain(self, nu, tau):
        """Boolean mask of (nu, tau) pairs where A_theta is finite, and the rule as text."""
        raise NotImplementedError

    def check_zeta(self, nu, tau):
        nu, tau = np.broadcast_arrays(_arr(nu), _arr(tau))
        ok, rule = self.prior_domain(nu, tau)
        ok = ok & np.isfinite(nu) & np.isfinite(tau)
        if not np.all(ok):
            idx = np.argwhere(~ok)[0]
            pos = tuple(int(i) for i in idx)
            raise DomainError(
                f"hyperparameters outside the domain of {self} at index {pos}: "
                f"nu={nu[pos]!r}, tau={tau[pos]!r} violate {rule}"
            )
        return nu, tau

    # -- likelihood pieces (unchecked; public wrappers validate) -------------
    def _suff_stat(self, y):
        return y

    def _log_h(self, y):
        raise NotImplementedError

    def _eta(self, theta):
        raise NotImplementedError

    def _a_y(self, theta):
        raise NotImplementedError

    def theta_from_eta(self, eta):
        raise NotImplementedError

    # -- prior pieces -------------------------------------------------------
    def _a_theta(self, nu, tau):
        raise NotImplementedError

    def _a_theta_grad(self, nu, tau):
        raise NotImplementedError

    def _to_zeta(self, p1, p2):
        raise NotImplementedError

    def _from_zeta(self, nu, tau):
        raise NotImplementedError

    def _classical_ok(self, p1, p2):
        return (p1 > 0) & (p2 > 0)

    def simulate(self, theta, rng, exposure=1.0):
        raise NotImplementedError

    # -- public methods ------------------------------------------------------
    def suff_stat(self, y):
        return _ret(self._suff_stat(self.check_support(y)))

    def log_base_measure(self, y):
        return _ret(self._log_h(self.check_support(y)))

    def natural_param(self, theta):
        return _ret(self._eta(self.check_theta(theta)))

    def lik_log_partition(self, theta):
        return _ret(self._a_y(self.check_theta(theta)))

    def log_likelihood(self, y, theta, exposure=1.0):
        """log p(y | theta) elementwise; exposure scales A_y (Poisson only)."""
        exposure = _arr(exposure)
        if not self.supports_exposure and np.any(exposure != 1.0):
            raise DomainError(f"{self} does not accept non-unit exposure")
        y = self.check_support(y)
        theta = self.check_theta(theta)
        out = self._log_h(y) + self._eta(theta) * self._suff_stat(y) - exposure * self._a_y(theta)
        if self.supports_exposure:
            out = out + y * np.log(exposure)
        return _ret(out)

    def prior_log_partition(self, nu, tau):
        nu, tau = self.check_zeta(nu, tau)
        return _ret(self._a_theta(nu, tau))

    def prior_log_partition_grad(self, nu, tau):
        """Partial derivatives (dA_theta/dnu, dA_theta/dtau)."""
        nu, tau = self.check_zeta(nu, tau)
        gn, gt = self._a_theta_grad(nu, tau)
        return _ret(gn), _ret(gt)

    def log_prior_density(self, theta, nu, tau):
        """log q(theta | nu, tau) with respect to Lebesgue measure on theta."""
        theta = self.check_theta(theta)
        nu, tau = self.check_zeta(nu, tau)
        out = self.log_h_theta + nu * self._eta(theta) - tau * self._a_y(theta) - self._a_theta(nu, tau)
        return _ret(out)

    def classical_to_zeta(self, p1, p2):
        p1, p2 = np.broadcast_arrays(_arr(p1), _arr(p2))
        if not np.all(self._classical_ok(p1, p2)):
            raise DomainError(f"classical prior parameters ({p1!r}, {p2!r}) invalid for {self}")
        nu, tau = self._to_zeta(p1, p2)
        return _ret(nu), _ret(tau)

    def zeta_to_classical(self, nu, tau):
        nu, tau = self.check_zeta(nu, tau)
        p1, p2 = self._from_zeta(nu, tau)
        return _ret(p1), _ret(p2)

    def params(self):
        return {}

    def __str__(self):
        return format_spec(self.kind, self.params())


# ---------------------------------------------------------------------------
# Normal conjugate prior: q(theta) = N(nu / tau, sigma2 / tau)
# classical parameters: (prior mean, prior variance)


@dataclass(frozen=True)
class _NormalConjugate(LikelihoodFamily):
    sigma2: float = 1.0
    conjugate: ClassVar[str] = "normal"
    log_h_theta: ClassVar[float] = -0.5 * _LOG_2PI

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError(f"{self.kind} requires sigma2 > 0, got {self.sigma2}")

    def _theta_mask(self, theta):
        return np.ones(theta.shape, dtype=bool)

    def _eta(self, theta):
        return theta / self.sigma2

    def _a_y(self, theta):
        return theta * theta / (2.0 * self.sigma2)

    def theta_from_eta(self, eta):
        return _arr(eta) * self.sigma2

    def prior_domain(self, nu, tau):
        return tau > 0, "tau > 0"

    def _a_theta(self, nu, tau):
        return nu * nu / (2.0 * tau * self.sigma2) - 0.5 * np.log(tau / self.sigma2)

    def _a_theta_grad(self, nu, tau):
        gn = nu / (tau * self.sigma2)
        gt = -nu * nu / (2.0 * tau * tau * self.sigma2) - 0.5 / tau
        return gn, gt

    def _classical_ok(self, p1, p2):
        return np.isfinite(p1) & (p2 > 0)

    def _to_zeta(self, mean, var):
        tau = self.sigma2 / var
        return tau * mean, tau

    def _from_zeta(self, nu, tau):
        return nu / tau, self.sigma2 / tau

    def params(self):
        return {"sigma2": self.sigma2}


@dataclass(frozen=True)
class NormalFixedVar(_NormalConjugate):
    """Normal(y; theta, sigma2) with known variance."""

    kind: ClassVar[str] = "normal_fixed_var"

    def _support_mask(self, y):
        return np.ones(y.shape, dtype=bool)

    def _log_h(self, y):
        return -0.5 * (_LOG_2PI + math.log(self.sigma2)) - y * y / (2.0 * self.sigma2)

    def simulate(self, theta, rng, exposure=1.0):
        return rng.normal(theta, math.sqrt(self.sigma2))


@dataclass(frozen=True)
class LognormalFixedVar(_NormalConjugate):
    """Log-Normal(y; theta, sigma2): log y ~ Normal(theta, sigma2)."""

    kind: ClassVar[str] = "lognormal_fixed_var"

    def _support_mask(self, y):
        return y > 0

    def _suff_stat(self, y):
        return np.log(y)

    def _log_h(self, y):
        ly = np.log(y)
        return -0.5 * (_LOG_2PI + math.log(self.sigma2)) - ly - ly * ly / (2.0 * self.sigma2)

    def simulate(self, theta, rng, exposure=1.0):
        return rng.lognormal(theta, math.sqrt(self.sigma2))


# ---------------------------------------------------------------------------
# Gamma conjugate priors


@dataclass(frozen=True)
class Poisson(LikelihoodFamily):
    """Poisson(y; theta); the only family that accepts an exposure c, y ~ Poisson(c theta)."""

    kind: ClassVar[str] = "poisson"
    conjugate: ClassVar[str] = "gamma"
    discrete: ClassVar[bool] = True
    supports_exposure: ClassVar[bool] = True

    def _support_mask(self, y):
        return y >= 0

    def _log_h(self, y):
        return -lgamma(y + 1.0)

    def _eta(self, theta):
        return np.log(theta)

    def _a_y(self, theta):
        return theta

    def theta_from_eta(self, eta):
        return np.exp(_arr(eta))

    def prior_domain(self, nu, tau):
        return (nu > -1) & (tau > 0), "nu > -1 and tau > 0"

    def _a_theta(self, nu, tau):
        return lgamma(nu + 1.0) - (nu + 1.0) * np.log(tau)

    def _a_theta_grad(self, nu, tau):
        return digamma(nu + 1.0) - np.log(tau), -(nu + 1.0) / tau

    # Gamma(shape alpha, rate beta): nu = alpha - 1, tau = beta
    def _to_zeta(self, alpha, beta):
        return alpha - 1.0, beta

    def _from_zeta(self, nu, tau):
        return nu + 1.0, tau

    def simulate(self, theta, rng, exposure=1.0):
        return np.asarray(rng.poisson(np.asarray(theta) * exposure), dtype=float)


@dataclass(frozen=True)
class Exponential(LikelihoodFamily):
    """Exponential(y; rate theta)."""

    kind: ClassVar[str] = "exponential"
    conjugate: ClassVar[str] = "gamma"

    def _support_mask(self, y):
        return y >= 0

    def _log_h(self, y):
        return np.zeros_like(y)

    def _eta(self, theta):
        return -theta

    def _a_y(self, theta):
        return -np.log(theta)

    def theta_from_eta(self, eta):
        return -_arr(eta)

    def prior_domain(self, nu, tau):
        return (nu > 0) & (tau > -1), "nu > 0 and tau > -1"

    def _a_theta(self, nu, tau):
        return lgamma(tau + 1.0) - (tau + 1.0) * np.log(nu)

    def _a_theta_grad(self, nu, tau):
        return -(tau + 1.0) / nu, digamma(tau + 1.0) - np.log(nu)

    # Gamma(alpha, beta): nu = beta, tau = alpha - 1
    def _to_zeta(self, alpha, beta):
        return beta, alpha - 1.0

    def _from_zeta(self, nu, tau):
        return tau + 1.0, nu

    def simulate(self, theta, rng, exposure=1.0):
        return rng.exponential(1.0 / np.asarray(theta))


@dataclass(frozen=True)
class GammaFixedShape(LikelihoodFamily):
    """Gamma(y; shape a, rate theta) with known shape."""

    a: float = 1.0
    kind: ClassVar[str] = "gamma_fixed_shape"
    conjugate: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"gamma_fixed_shape requires a > 0, got {self.a}")

    def _support_mask(self, y):
        return y > 0

    def _log_h(self, y):
        return (self.a - 1.0) * np.log(y) - lgamma(self.a)

    def _eta(self, theta):
        return -theta

    def _a_y(self, theta):
        return -self.a * np.log(theta)

    def theta_from_eta(self, eta):
        return -_arr(eta)

    def prior_domain(self, nu, tau):
        return (nu > 0) & (self.a * tau > -1), "nu > 0 and a*tau > -1"

    def _a_theta(self, nu, tau):
        s = self.a * tau + 1.0
        return lgamma(s) - s * np.log(nu)

    def _a_theta_grad(self, nu, tau):
        s = self.a * tau + 1.0
        return -s / nu, self.a * (digamma(s) - np.log(nu))

    # Gamma(alpha, beta): nu = beta, tau = (alpha - 1) / a
    def _to_zeta(self, alpha, beta):
        return beta, (alpha - 1.0) / self.a

    def _from_zeta(self, nu, tau):
        return self.a * tau + 1.0, nu

    def simulate(self, theta, rng, exposure=1.0):
        return rng.gamma(self.a, 1.0 / np.asarray(theta))

    def params(self):
        return {"a": self.a}


@dataclass(frozen=True)
class ParetoFixedScale(LikelihoodFamily):
    """Pareto(y; scale xm, shape theta) with known scale; support y >= xm."""

    xm: float = 1.0
    kind: ClassVar[str] = "pareto_fixed_scale"
    conjugate: ClassVar[str] = "gamma"

    def __post_init__(self):
        if not self.xm > 0:
            raise ConfigError(f"pareto_fixed_scale requires xm > 0, got {self.xm}")

    @property
    def log_xm(self):
        return math.log(self.xm)

    def _support_mask(self, y):
        return y >= self.xm

    def _suff_stat(self, y):
        return np.log(y)

    def _log_h(self, y):
        return np.zeros_like(y)

    def _eta(self, theta):
        return -theta - 1.0

    def _a_y(self, theta):
        return -np.log(theta) - theta * self.log_xm

    def theta_from_eta(self, eta):
        return -_arr(eta) - 1.0

    def prior_domain(self, nu, tau):
        return (tau > -1) & (nu - tau * self.log_xm > 0), "tau > -1 and nu - tau*log(xm) > 0"

    def _a_theta(self, nu, tau):
        rate = nu - tau * self.log_xm
        return lgamma(tau + 1.0) - nu - (tau + 1.0) * np.log(rate)

    def _a_theta_grad(self, nu, tau):
        rate = nu - tau * self.log_xm
        gn = -1.0 - (tau + 1.0) / rate
        gt = digamma(tau + 1.0) - np.log(rate) + (tau + 1.0) * self.log_xm / rate
        return gn, gt

    # Gamma(alpha, beta): tau = alpha - 1, nu = beta + (alpha - 1) log xm
    def _to_zeta(self, alpha, beta):
        return beta + (alpha - 1.0) * self.log_xm, alpha - 1.0

    def _from_zeta(self, nu, tau):
        return tau + 1.0, nu - tau * self.log_xm

    def simulate(self, theta, rng, exposure=1.0):
        return self.xm * (1.0 + rng.pareto(np.asarray(theta)))

    def params(self):
        return {"xm": self.xm}


# ---------------------------------------------------------------------------
# Beta conjugate priors


@dataclass(frozen=True)
class Binomial(LikelihoodFamily):
    """Binomial(y; n, theta) with known number of trials."""

    n: int = 1
    kind: ClassVar[str] = "binomial"
    conjugate: ClassVar[str] = "beta"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not (self.n >= 1 and float(self.n).is_integer()):
            raise ConfigError(f"binomial requires integer n >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def _support_mask(self, y):
        return (y >= 0) & (y <= self.n + INTEGER_TOL)

    def _log_h(self, y):
        return log_binom(self.n, y)

    def _theta_mask(self, theta):
        return (theta > 0) & (theta < 1)

    def _eta(self, theta):
        return np.log(theta) - np.log1p(-theta)

    def _a_y(self, theta):
        return -self.n * np.log1p(-theta)

    def theta_from_eta(self, eta):
        return 1.0 / (1.0 + np.exp(-_arr(eta)))

    def prior_domain(self, nu, tau):
        return (nu > -1) & (self.n * tau - nu > -1), "nu > -1 and n*tau - nu > -1"

    def _a_theta(self, nu, tau):
        nt = self.n * tau
        return lgamma(nu + 1.0) + lgamma(nt - nu + 1.0) - lgamma(nt + 2.0)

    def _a_theta_grad(self, nu, tau):
        nt = self.n * tau
        gn = digamma(nu + 1.0) - digamma(nt - nu + 1.0)
        gt = self.n * (digamma(nt - nu + 1.0) - digamma(nt + 2.0))
        return gn, gt

    # Beta(alpha, beta): nu = alpha - 1, tau = (alpha + beta - 2) / n
    def _to_zeta(self, alpha, beta):
        return alpha - 1.0, (alpha + beta - 2.0) / self.n

    def _from_zeta(self, nu, tau):
        return nu + 1.0, self.n * tau - nu + 1.0

    def simulate(self, theta, rng, exposure=1.0):
        return np.asarray(rng.binomial(self.n, np.asarray(theta)), dtype=float)

    def params(self):
        return {"n": self.n}


@dataclass(frozen=True)
class NegBinomial(LikelihoodFamily):
    """Number of failures before the r-th success, success probability theta."""

    r: int = 1
    kind: ClassVar[str] = "negbinomial"
    conjugate: ClassVar[str] = "beta"
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not (self.r >= 1 and float(self.r).is_integer()):
            raise ConfigError(f"{self.kind} requires integer r >= 1, got {self.r}")
        object.__setattr__(self, "r", int(self.r))

    def _support_mask(self, y):
        return y >= 0

    def _log_h(self, y):
        return log_binom(y + self.r - 1.0, y)

    def _theta_mask(self, theta):
        return (theta > 0) & (theta < 1)

    def _eta(self, theta):
        return np.log1p(-theta)

    def _a_y(self, theta):
        return -self.r * np.log(theta)

    def theta_from_eta(self, eta):
        return -np.expm1(_arr(eta))

    def prior_domain(self, nu, tau):
        return (nu > -1) & (self.r * tau > -1), "nu > -1 and r*tau > -1"

    def _a_theta(self, nu, tau):
        rt = self.r * tau
        return lgamma(rt + 1.0) + lgamma(nu + 1.0) - lgamma(rt + nu + 2.0)

    def _a_theta_grad(self, nu, tau):
        rt = self.r * tau
        tail = digamma(rt + nu + 2.0)
        return digamma(nu + 1.0) - tail, self.r * (digamma(rt + 1.0) - tail)

    # Beta(alpha, beta): nu = beta - 1, tau = (alpha - 1) / r
    def _to_zeta(self, alpha, beta):
        return beta - 1.0, (alpha - 1.0) / self.r

    def _from_zeta(self, nu, tau):
        return self.r * tau + 1.0, nu + 1.0

    def simulate(self, theta, rng, exposure=1.0):
        return np.asarray(rng.negative_binomial(self.r, np.asarray(theta)), dtype=float)

    def params(self):
        return {"r": self.r}


@dataclass(frozen=True)
class Geometric(NegBinomial):
    """Number of failures before the first success."""

    kind: ClassVar[str] = "geometric"

    def __post_init__(self):
        object.__setattr__(self, "r", 1)

    def simulate(self, theta, rng, exposure=1.0):
        return np.asarray(rng.geometric(np.asarray(theta)), dtype=float) - 1.0

    def params(self):
        return {}


# ---------------------------------------------------------------------------
# Inverse-gamma conjugate priors


@dataclass(frozen=True)
class _InvGammaMeanConjugate(LikelihoodFamily):
    """Shared pieces of the fixed-mean normal and log-normal rows (theta = variance)."""

    mu: float = 0.0
    conjugate: ClassVar[str] = "invgamma"

    def _eta(self, theta):
        return 1.0 / theta

    def _a_y(self, theta):
        return self.mu * self.mu / (2.0 * theta) + 0.5 * np.log(theta)

    def theta_from_eta(self, eta):
        return 1.0 / _arr(eta)

    def prior_domain(self, nu, tau):
        return (tau > 2) & (tau * self.mu**2 / 2.0 - nu > 0), "tau > 2 and tau*mu^2/2 - nu > 0"

    def _a_theta(self, nu, tau):
        shape = tau / 2.0 - 1.0
        scale = tau * self.mu**2 / 2.0 - nu
        return lgamma(shape) - shape * np.log(scale)

    def _a_theta_grad(self, nu, tau):
        shape = tau / 2.0 - 1.0
        scale = tau * self.mu**2 / 2.0 - nu
        gn = shape / scale
        gt = 0.5 * (digamma(shape) - np.log(scale)) - shape * self.mu**2 / (2.0 * scale)
        return gn, gt

    # InvGamma(alpha, beta): tau = 2 (alpha + 1), nu = mu^2 (alpha + 1) - beta
    def _to_zeta(self, alpha, beta):
        return self.mu**2 * (alpha + 1.0) - beta, 2.0 * (alpha + 1.0)

    def _from_zeta(self, nu, tau):
        return tau / 2.0 - 1.0, tau * self.mu**2 / 2.0 - nu

    def params(self):
        return {"mu": self.mu}


@dataclass(frozen=True)
class NormalFixedMean(_InvGammaMeanConjugate):
    """Normal(y; mu, theta) with known mean and unknown variance theta."""

    kind: ClassVar[str] = "normal_fixed_mean"

    def _support_mask(self, y):
        return np.ones(y.shape, dtype=bool)

    def _suff_stat(self, y):
        return -0.5 * y * y + self.mu * y

    def _log_h(self, y):
        return np.full_like(y, -0.5 * _LOG_2PI)

    def simulate(self, theta, rng, exposure=1.0):
        return rng.normal(self.mu, np.sqrt(theta))


@dataclass(frozen=True)
class LognormalFixedMean(_InvGammaMeanConjugate):
    """Log-Normal(y; mu, theta): log y ~ Normal(mu, theta)."""

    kind: ClassVar[str] = "lognormal_fixed_mean"

    def _support_mask(self, y):
        return y > 0

    def _suff_stat(self, y):
        ly = np.log(y)
        return -0.5 * ly * ly + self.mu * ly

    def _log_h(self, y):
        return -0.5 * _LOG_2PI - np.log(y)

    def simulate(self, theta, rng, exposure=1.0):
        return rng.lognormal(self.mu, np.sqrt(theta))


@dataclass(frozen=True)
class WeibullFixedShape(LikelihoodFamily):
    """Weibull(y; scale theta^(1/k), shape k) with known shape."""

    k: float = 1.0
    kind: ClassVar[str] = "weibull_fixed_shape"
    conjugate: ClassVar[str] = "invgamma"

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigError(f"weibull_fixed_shape requires k > 0, got {self.k}")

    def _support_mask(self, y):
        return y > 0

    def _suff_stat(self, y):
        return y**self.k

    def _log_h(self, y):
        return math.log(self.k) + (self.k - 1.0) * np.log(y)

    def _eta(self, theta):
        return -1.0 / theta

    def _a_y(self, theta):
        return np.log(theta)

    def theta_from_eta(self, eta):
        return -1.0 / _arr(eta)

    def prior_domain(self, nu, tau):
        return (nu > 0) & (tau > 1), "nu > 0 and tau > 1"

    def _a_theta(self, nu, tau):
        return lgamma(tau - 1.0) - (tau - 1.0) * np.log(nu)

    def _a_theta_grad(self, nu, tau):
        return -(tau - 1.0) / nu, digamma(tau - 1.0) - np.log(nu)

    # InvGamma(alpha, beta): nu = beta, tau = alpha + 1
    def _to_zeta(self, alpha, beta):
        return beta, alpha + 1.0

    def _from_zeta(self, nu, tau):
        return tau - 1.0, nu

    def simulate(self, theta, rng, exposure=1.0):
        return np.asarray(theta) ** (1.0 / self.k) * rng.weibull(self.k, size=np.shape(theta))

    def params(self):
        return {"k": self.k}


FAMILIES = {
    cls.kind: cls
    for cls in (
        NormalFixedVar,
        LognormalFixedVar,
        Poisson,
        Exponential,
        GammaFixedShape,
        ParetoFixedScale,
        Binomial,
        NegBinomial,
        Geometric,
        NormalFixedMean,
        LognormalFixedMean,
        WeibullFixedShape,
    )
}


def parse_family(text):
    """Build a family from a config string such as ``"binomial{n=10}"``."""
    if isinstance(text, LikelihoodFamily):
        return text
    name, params = parse_spec(text)
    if name not in FAMILIES:
        raise ConfigError(f"unknown likelihood family {name!r}; choose from {sorted(FAMILIES)}")
    cls = FAMILIES[name]
    allowed = {f for f in cls.__dataclass_fields__}
    unknown = set(params) - allowed
    if unknown or (cls is Geometric and params):
        raise ConfigError(f"unknown parameters {sorted(unknown or params)} for family {name!r}")
    return cls(**params)
