"""Likelihood guidance: closed-form evidence under the inference network, its
gradient, the composed posterior score, and DPS baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .expfam import ObservationSet, SuffStatsAgg, aggregate, parse_family
from .link import inv_link, inv_link_deriv, parse_link
from .net import DenseNetwork
from .sde import DiffusionSchedule


@dataclass(frozen=True)
class GuidanceContext:
    family: object
    link: object
    agg: SuffStatsAgg
    infer_net: DenseNetwork | None
    dmap: object
    score_net: DenseNetwork
    sched: DiffusionSchedule
    clip: float = 10.0
    clip_total: bool = False
    obs: ObservationSet | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        object.__setattr__(self, "link", parse_link(self.link))
        if not self.clip > 0:
            raise ConfigError("clip bound must be positive")
        d = self.score_net.input_dim
        if self.agg.t_sum.shape != (d,):
            raise ConfigError(f"observations have {self.agg.t_sum.shape[0]} dims, score net {d}")
        if self.infer_net is not None:
            if self.infer_net.input_dim != d or self.infer_net.output_dim != 2 * d:
                raise ConfigError("inference network shape does not match the score network")

    @classmethod
    def from_observations(cls, obs: ObservationSet, link, infer_net, dmap, score_net, sched, **kw):
        return cls(obs.family, link, aggregate(obs), infer_net, dmap, score_net, sched, obs=obs, **kw)

    @property
    def d(self):
        return self.score_net.input_dim

    @property
    def empty(self):
        return not np.any(self.agg.count)


def _rows(x):
    x = np.asarray(x, dtype=float)
    return x.ndim == 1, np.atleast_2d(x)


def _out(single, a):
    return a[0] if single else a


def prior_score(ctx: GuidanceContext, x_t, t):
    single, x = _rows(x_t)
    return _out(single, -ctx.score_net.forward(x, t) / np.sqrt(ctx.sched.v(t)))


def _zeta(ctx, x, t):
    out, cache = ctx.infer_net.forward_cached(x, t)
    nu, tau = ctx.dmap(out)
    return out, cache, nu, tau


def _check(ctx, nu, tau):
    fam = ctx.family
    fam.check_zeta(nu, tau)
    fam.check_zeta(nu + ctx.agg.t_sum, tau + ctx.agg.count)


def evidence_log_density(ctx: GuidanceContext, x_t, t):
    """log h(y) + sum_j [A(nu_j + T_j, tau_j + m_j) - A(nu_j, tau_j)] with (nu, tau) = zeta(x_t, t)."""
    single, x = _rows(x_t)
    if ctx.empty:
        return _out(single, np.full(x.shape[0], float(ctx.agg.log_h)))
    _, _, nu, tau = _zeta(ctx, x, t)
    _check(ctx, nu, tau)
    fam, agg = ctx.family, ctx.agg
    terms = fam._a_theta(nu + agg.t_sum, tau + agg.count) - fam._a_theta(nu, tau)
    return _out(single, agg.log_h + terms.sum(axis=-1))


def evidence_score(ctx: GuidanceContext, x_t, t):
    """Gradient of :func:`evidence_log_density` with respect to x_t."""
    single, x = _rows(x_t)
    if ctx.empty:
        return _out(single, np.zeros_like(x))
    out, cache, nu, tau = _zeta(ctx, x, t)
    _check(ctx, nu, tau)
    fam, agg = ctx.family, ctx.agg
    gn1, gt1 = fam._a_theta_grad(nu + agg.t_sum, tau + agg.count)
    gn0, gt0 = fam._a_theta_grad(nu, tau)
    g_out = ctx.dmap.vjp(out, gn1 - gn0, gt1 - gt0)
    _, gx = ctx.infer_net.backward(cache, g_out, need_params=False)
    return _out(single, gx)


def _guided(ctx, prior, guide):
    """Componentwise clip of the guidance term, or of the sum in clip-total mode."""
    c = ctx.clip
    if ctx.clip_total:
        return np.clip(prior + guide, -c, c)
    return prior + np.clip(guide, -c, c)


def posterior_score(ctx: GuidanceContext, x_t, t):
    """Prior score plus the clipped likelihood score (componentwise)."""
    return _guided(ctx, prior_score(ctx, x_t, t), evidence_score(ctx, x_t, t))


def tweedie_x0hat(sched: DiffusionSchedule, x_t, t, score):
    """Posterior mean of x0 given x_t: (x_t + (1 - alpha_t) score) / sqrt(alpha_t)."""
    a = sched.alpha(t)
    return (np.asarray(x_t, dtype=float) + (1.0 - a) * np.asarray(score, dtype=float)) / np.sqrt(a)


# -- DPS baselines -----------------------------------------------------------
DPS_KINDS = ("normal", "poisson_ls", "poisson_shot")


@dataclass(frozen=True)
class DpsVariant:
    kind: str
    sigma2: float = 1.0
    rho: float = 0.3
    zero_offset: float | None = 0.01

    def __post_init__(self):
        if self.kind not in DPS_KINDS:
            raise ConfigError(f"unknown DPS variant {self.kind!r}; choose from {DPS_KINDS}")
        if not (self.sigma2 > 0 and self.rho > 0):
            raise ConfigError("DPS sigma2 and rho must be positive")
        if self.zero_offset is not None and not self.zero_offset > 0:
            raise ConfigError("zero-count offset must be positive")


def dps_weights(obs: ObservationSet, variant: DpsVariant):
    """Per-cell residual weights (1 or 1/(2y)) with the zero-count offset applied."""
    y = np.where(obs.mask, obs.values, 0.0)
    if variant.kind != "poisson_shot":
        return y, obs.mask.astype(float)
    zero = obs.mask & (y <= 0)
    if np.any(zero):
        if variant.zero_offset is None:
            raise DomainError("shot-noise DPS needs positive counts; configure a zero-count offset")
        y = np.where(zero, variant.zero_offset, y)
    lam = np.where(obs.mask, 1.0 / (2.0 * np.where(obs.mask, y, 1.0)), 0.0)
    return y, lam


def dps_step_size(obs: ObservationSet, theta_hat, variant: DpsVariant):
    """rho = 1/sigma^2 for the Normal variant, rho'/sqrt(sum ||y_i - theta_hat||^2) otherwise."""
    if variant.kind == "normal":
        return np.full(np.atleast_2d(theta_hat).shape[0], 1.0 / variant.sigma2)
    y, _ = dps_weights(obs, variant)
    r = np.where(obs.mask[None], y[None] - np.atleast_2d(theta_hat)[:, None, :], 0.0)
    norm = np.sqrt(np.sum(r * r, axis=(1, 2)))
    # a zero residual has zero gradient, so its weight is irrelevant
    return np.divide(variant.rho, norm, out=np.zeros_like(norm), where=norm > 0)


def dps_score(ctx: GuidanceContext, x_t, t, variant: DpsVariant):
    """Prior score minus rho * grad_x_t sum_i ||y_i - g^-1(x0_hat)||^2_Lambda.

    The guidance term is clipped exactly like the likelihood score in
    ``posterior_score``; without it the 1/sqrt(alpha_t) factor in the Tweedie
    estimate makes the guidance explode near t = 1.
    """
    if ctx.obs is None:
        raise ConfigError("DPS guidance needs the raw observation table")
    single, x = _rows(x_t)
    sched = ctx.sched
    a, v = sched.alpha(t), sched.v(t)
    eps_hat, cache = ctx.score_net.forward_cached(x, t)
    s = -eps_hat / np.sqrt(v)
    x0 = tweedie_x0hat(sched, x, t, s)
    theta = inv_link(ctx.link, x0)
    dtheta = inv_link_deriv(ctx.link, x0)
    y, lam = dps_weights(ctx.obs, variant)
    resid = np.where(ctx.obs.mask[None], y[None] - theta[:, None, :], 0.0)
    # d/dx0 of sum_i lam_i (y_i - theta)^2
    c = -2.0 * np.sum(lam[None] * resid, axis=1) * dtheta
    rho = dps_step_size(ctx.obs, theta, variant)
    _, js = ctx.score_net.backward(cache, c, need_params=False)
    jt = (c + (1.0 - a) * (-js / np.sqrt(v))) / np.sqrt(a)
    return _out(single, _guided(ctx, s, -rho[:, None] * jt))
