"""Monotone link functions theta = g^-1(x0) between latent coordinates and parameters.

The inverse link is evaluated at ``u = scale * x + shift``; ``scale`` is the
sigmoid steepness s for probability families and ``shift`` gives the
high-rate variant exp(5 + x0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._specstr import format_spec, parse_spec
from .errors import ConfigError, DomainError

KINDS = ("identity", "exp", "inv_exp", "sigmoid", "gamma", "pareto")


@dataclass(frozen=True)
class LinkSpec:
    kind: str
    scale: float = 1.0
    shift: float = 0.0
    param: float | None = None  # a for "gamma", xm for "pareto"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown link {self.kind!r}; choose from {KINDS}")
        if not self.scale > 0:
            raise ConfigError(f"link scale must be positive, got {self.scale}")
        if self.kind in ("gamma", "pareto"):
            if self.param is None or not self.param > 0:
                raise ConfigError(f"link {self.kind!r} needs a positive parameter")

    def __str__(self):
        params = {}
        if self.kind == "sigmoid":
            params["s"] = self.scale
        elif self.scale != 1.0:
            params["scale"] = self.scale
        if self.kind == "gamma":
            params["a"] = self.param
        if self.kind == "pareto":
            params["xm"] = self.param
        if self.shift:
            params["shift"] = self.shift
        return format_spec(self.kind, params)


def parse_link(text) -> LinkSpec:
    """Parse ``identity | exp | inv_exp | sigmoid{s=..} | gamma{a=..} | pareto{xm=..}``.

    Every kind also accepts ``shift=`` and (except sigmoid, which uses ``s``) ``scale=``.
    """
    if isinstance(text, LinkSpec):
        return text
    kind, params = parse_spec(text)
    scale = params.pop("s" if kind == "sigmoid" else "scale", 1.0)
    shift = params.pop("shift", 0.0)
    param = None
    if kind == "gamma":
        param = params.pop("a", None)
    elif kind == "pareto":
        param = params.pop("xm", None)
    if params:
        raise ConfigError(f"unknown parameters {sorted(params)} for link {kind!r}")
    return LinkSpec(kind, scale=scale, shift=shift, param=param)


def _expit(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    e = np.exp(u[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _u(spec, x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("link input must be finite")
    return spec.scale * x + spec.shift


def _ret(x):
    return x[()] if x.ndim == 0 else x


def inv_link(spec, x):
    """theta = g^-1(x), elementwise."""
    spec = parse_link(spec)
    u = np.atleast_1d(_u(spec, x))
    k = spec.kind
    if k == "identity":
        out = u.copy()
    elif k == "exp":
        out = np.exp(u)
    elif k == "inv_exp":
        out = np.exp(-u)
    elif k == "sigmoid":
        out = _expit(u)
    elif k == "gamma":
        out = spec.param * np.exp(-u)
    else:
        log_xm = math.log(spec.param)
        denom = np.exp(u) - log_xm
        if not np.all(denom > 0):
            raise DomainError(f"pareto link requires exp(x) > log(xm) = {log_xm:g}")
        out = 1.0 / denom
    return _ret(out.reshape(np.shape(x)))


def inv_link_deriv(spec, x):
    """d theta / d x, elementwise."""
    spec = parse_link(spec)
    u = np.atleast_1d(_u(spec, x))
    k = spec.kind
    if k == "identity":
        out = np.ones_like(u)
    elif k == "exp":
        out = np.exp(u)
    elif k == "inv_exp":
        out = -np.exp(-u)
    elif k == "sigmoid":
        s = _expit(u)
        out = s * (1.0 - s)
    elif k == "gamma":
        out = -spec.param * np.exp(-u)
    else:
        e = np.exp(u)
        denom = e - math.log(spec.param)
        if not np.all(denom > 0):
            raise DomainError("pareto link requires exp(x) > log(xm)")
        out = -e / (denom * denom)
    return _ret((spec.scale * out).reshape(np.shape(x)))


def link(spec, theta):
    """x = g(theta), the inverse of :func:`inv_link`."""
    spec = parse_link(spec)
    shape = np.shape(theta)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = spec.kind
    if not np.all(np.isfinite(theta)):
        raise DomainError("link argument must be finite")
    if k != "identity" and not np.all(theta > 0):
        raise DomainError(f"link {spec} requires theta > 0")
    if k == "identity":
        u = theta
    elif k == "exp":
        u = np.log(theta)
    elif k == "inv_exp":
        u = -np.log(theta)
    elif k == "sigmoid":
        if not np.all(theta < 1):
            raise DomainError("sigmoid link requires 0 < theta < 1")
        u = np.log(theta) - np.log1p(-theta)
    elif k == "gamma":
        u = np.log(spec.param / theta)
    else:
        inner = 1.0 / theta + math.log(spec.param)
        if not np.all(inner > 0):
            raise DomainError("pareto link requires 1/theta + log(xm) > 0")
        u = np.log(inner)
    x = (u - spec.shift) / spec.scale
    return _ret(x.reshape(shape))


def default_link(family, s=1.0) -> LinkSpec:
    """The suggested link for each likelihood family; ``s`` scales sigmoid links."""
    from .expfam.families import parse_family

    family = parse_family(family)
    kind = family.kind
    if kind in ("normal_fixed_var", "lognormal_fixed_var"):
        return LinkSpec("identity")
    if kind == "exponential":
        return LinkSpec("inv_exp")
    if kind == "gamma_fixed_shape":
        return LinkSpec("gamma", param=family.a)
    if kind == "pareto_fixed_scale":
        return LinkSpec("pareto", param=family.xm)
    if kind in ("binomial", "negbinomial", "geometric"):
        return LinkSpec("sigmoid", scale=s)
    # poisson, normal/lognormal with fixed mean, weibull
    return LinkSpec("exp")
