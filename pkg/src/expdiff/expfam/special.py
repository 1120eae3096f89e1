"""Log-gamma and digamma for positive real arguments.

Both functions are vectorized over numpy arrays and return a Python float
for scalar input.
"""

import math

import numpy as np

from ..errors import DomainError

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Bernoulli-number coefficients of the digamma asymptotic series in 1/x^2.
_DIGAMMA_ASYMPT = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _check_positive(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0.0):
        bad = arr[~(arr > 0.0)].ravel()[0]
        raise DomainError(f"{name} requires x > 0, got {bad!r}")
    return arr


def _lgamma_lanczos(x):
    # valid for x >= 0.5
    z = x - 1.0
    acc = np.full_like(z, _LANCZOS_COEF[0])
    for k, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc = acc + c / (z + k)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def lgamma(x):
    """Natural log of the gamma function for x > 0.

    Uses the Lanczos series for x >= 1/2 and the reflection formula below.
    """
    arr = _check_positive(x, "lgamma")
    out = np.empty_like(arr)
    hi = arr >= 0.5
    out[hi] = _lgamma_lanczos(arr[hi])
    lo = ~hi
    if np.any(lo):
        xl = arr[lo]
        out[lo] = np.log(np.pi / np.abs(np.sin(np.pi * xl))) - _lgamma_lanczos(1.0 - xl)
    out[(arr == 1.0) | (arr == 2.0)] = 0.0  # exact zeros of log Gamma
    return out[()] if out.ndim == 0 else out


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x) for x > 0."""
    arr = _check_positive(x, "digamma")
    x = arr.copy()
    shift = np.zeros_like(x)
    small = x < 6.0
    while np.any(small):
        shift[small] -= 1.0 / x[small]
        x[small] += 1.0
        small = x < 6.0
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for c in reversed(_DIGAMMA_ASYMPT):
        series = (series + c) * inv2
    out = np.log(x) - 0.5 / x - series + shift
    return out[()] if out.ndim == 0 else out


def log_binom(n, k):
    """log C(n, k) for real n >= k >= 0."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)
