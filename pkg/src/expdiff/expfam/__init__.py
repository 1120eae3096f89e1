"""Exponential-family likelihoods, conjugate priors and closed-form evidence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .families import FAMILIES, LikelihoodFamily, parse_family
from .observations import (
    ObservationSet,
    SuffStatsAgg,
    aggregate,
    concat,
    read_observations,
    write_observations,
)
from .special import digamma, lgamma

__all__ = [
    "FAMILIES",
    "ConjugateHyperparams",
    "LikelihoodFamily",
    "ObservationSet",
    "SuffStatsAgg",
    "aggregate",
    "classical_to_zeta",
    "concat",
    "digamma",
    "lgamma",
    "lik_log_partition",
    "log_base_measure",
    "log_evidence",
    "log_evidence_terms",
    "natural_param",
    "parse_family",
    "posterior_update",
    "prior_log_partition",
    "read_observations",
    "suff_stat",
    "t_theta",
    "write_observations",
    "zeta_to_classical",
]


@dataclass(frozen=True)
class ConjugateHyperparams:
    nu: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if nu.shape != tau.shape:
            raise ValueError(f"nu and tau shapes differ: {nu.shape} vs {tau.shape}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "tau", tau)


def suff_stat(family, y):
    return parse_family(family).suff_stat(y)


def log_base_measure(family, y, exposure=1.0):
    """log h(y); for Poisson with exposure c this is y log c - log y!."""
    family = parse_family(family)
    out = family.log_base_measure(y)
    if np.any(np.asarray(exposure) != 1.0):
        if not family.supports_exposure:
            raise DomainError(f"{family} does not accept non-unit exposure")
        out = out + np.asarray(y, dtype=float) * np.log(exposure)
    return out


def natural_param(family, theta):
    return parse_family(family).natural_param(theta)


def lik_log_partition(family, theta):
    return parse_family(family).lik_log_partition(theta)


def prior_log_partition(family, nu, tau):
    return parse_family(family).prior_log_partition(nu, tau)


def t_theta(family, link, x0):
    """Prior sufficient statistics (eta(theta), -A_y(theta)) at theta = g^-1(x0)."""
    from ..link import inv_link

    family = parse_family(family)
    theta = family.check_theta(inv_link(link, x0))
    return family._eta(theta), -family._a_y(theta)


def _updated(family, agg, nu, tau):
    nu = np.asarray(nu, dtype=float)
    tau = np.asarray(tau, dtype=float)
    return nu + agg.t_sum, tau + agg.count


def log_evidence_terms(family, agg, nu, tau, check=True):
    """Per-dimension evidence terms A(nu + t, tau + m) - A(nu, tau), broadcast over leading axes."""
    nu_post, tau_post = _updated(family, agg, nu, tau)
    if check:
        family.check_zeta(nu, tau)
        family.check_zeta(nu_post, tau_post)
    return family._a_theta(nu_post, tau_post) - family._a_theta(np.asarray(nu, float), np.asarray(tau, float))


def log_evidence(family, agg: SuffStatsAgg, zeta: ConjugateHyperparams):
    """Exact log marginal likelihood of the conjugate model, summed over dimensions."""
    family = parse_family(family)
    terms = log_evidence_terms(family, agg, zeta.nu, zeta.tau)
    return float(agg.log_h + np.sum(terms))


def posterior_update(zeta: ConjugateHyperparams, agg: SuffStatsAgg) -> ConjugateHyperparams:
    return ConjugateHyperparams(zeta.nu + agg.t_sum, zeta.tau + agg.count)


def classical_to_zeta(family, p1, p2) -> ConjugateHyperparams:
    """Map classical prior parameters to (nu, tau).

    (p1, p2) is (mean, variance) for the normal-conjugate families and
    (alpha, beta) for the Gamma, Beta and Inverse-Gamma conjugates.
    """
    nu, tau = parse_family(family).classical_to_zeta(p1, p2)
    return ConjugateHyperparams(nu, tau)


def zeta_to_classical(family, zeta: ConjugateHyperparams):
    return parse_family(family).zeta_to_classical(zeta.nu, zeta.tau)
