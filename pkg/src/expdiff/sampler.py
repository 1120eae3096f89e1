"""Predictor-corrector reverse-SDE sampling and a random-walk Metropolis reference."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, NumericalError, SamplingError
from .link import inv_link, parse_link
from .sde import DiffusionSchedule

log = logging.getLogger(__name__)

BLOCK = 64
MAX_DROP_RATE = 0.01


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 1000
    snr: float = 0.1
    n_samples: int = 500
    seed: int = 0
    correctors_per_step: int = 1
    # "block": norms averaged over a fixed block of sample indices; "sample": per row
    corrector_norm: str = "block"

    def __post_init__(self):
        if self.corrector_norm not in ("block", "sample"):
            raise ConfigError("corrector_norm must be 'block' or 'sample'")
        if self.steps < 2:
            raise ConfigError("sampler needs at least 2 steps")
        if not self.snr > 0:
            raise ConfigError("snr must be positive")
        if self.n_samples < 0 or self.correctors_per_step < 0:
            raise ConfigError("n_samples and correctors_per_step must be nonnegative")


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iters: int = 200_000
    burn_in: int = 50_000
    target_accept: float = 0.234
    seed: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.chains < 1 or self.iters < 1 or self.thin < 1:
            raise ConfigError("chains, iters and thin must be positive")
        if not 0 <= self.burn_in < self.iters:
            raise ConfigError("burn_in must lie in [0, iters)")
        if not 0 < self.target_accept < 1:
            raise ConfigError("target_accept must lie in (0, 1)")


def config_hash(obj):
    """Short stable hash of a JSON-serializable description."""
    raw = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(raw).hexdigest()[:16]


@dataclass
class SampleSet:
    x0: np.ndarray
    link: object = "identity"
    provenance: dict = field(default_factory=dict)
    dropped: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.ndim != 2:
            raise ConfigError("sample matrix must be two-dimensional")
        if not np.all(np.isfinite(self.x0)):
            raise NumericalError("sample set contains non-finite rows")
        self.link = parse_link(self.link)

    @property
    def n(self):
        return self.x0.shape[0]

    @property
    def d(self):
        return self.x0.shape[1]

    @property
    def theta(self):
        return inv_link(self.link, self.x0)


def sample_rng(master_seed, index):
    """Independent stream for sample ``index``; identical no matter which worker draws it."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(int(index),)))


def _grid(sched, steps):
    dt = (1.0 - sched.eps) / steps
    return 1.0 - dt * np.arange(steps + 1), dt


def _safe_score(score_fn, x, t, alive):
    """Evaluate on live rows; rows whose evaluation fails are marked dead."""
    out = np.zeros_like(x)
    idx = np.flatnonzero(alive)
    if idx.size == 0:
        return out
    try:
        out[idx] = score_fn(x[idx], t)
        return out
    except DomainError:
        pass
    for i in idx:
        try:
            out[i] = score_fn(x[i : i + 1], t)[0]
        except DomainError:
            alive[i] = False
    return out


def _corrector_step(cfg, z, s, alive):
    """Langevin step size 2 (r |z| / |s|)^2, with norms per row or averaged over the block."""
    zn = np.linalg.norm(z, axis=1)
    sn = np.linalg.norm(s, axis=1)
    if cfg.corrector_norm == "block":
        if not np.any(alive):
            return np.zeros(len(zn))
        zn = np.full(len(zn), zn[alive].mean())
        sn = np.full(len(sn), sn[alive].mean())
    safe = np.where(sn > 0, sn, 1.0)
    return np.where(sn > 0, 2.0 * (cfg.snr * zn / safe) ** 2, 0.0)


def _pc_block(score_fn, sched: DiffusionSchedule, cfg: SamplerConfig, rngs, d):
    """Run the PC sampler for a block of samples, one RNG stream per row.

    Each stream draws the start point and all noise for its sample up front.
    With per-row corrector norms a row's trajectory depends only on its own
    stream; with block norms it also depends on the other rows of its block,
    which is still independent of the worker count because blocks are fixed
    index ranges.
    """
    n = len(rngs)
    ncorr = cfg.correctors_per_step
    noise = np.empty((cfg.steps, 1 + ncorr, n, d))
    x = np.empty((n, d))
    for j, rng in enumerate(rngs):
        x[j] = rng.standard_normal(d)
        noise[:, :, j, :] = rng.standard_normal((cfg.steps, 1 + ncorr, d))
    ts, dt = _grid(sched, cfg.steps)
    alive = np.ones(n, dtype=bool)
    fail = {}
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(cfg.steps):
            t = ts[k]
            beta = sched.beta(t)
            s = _safe_score(score_fn, x, t, alive)
            x = x + (0.5 * beta * x + beta * s) * dt + np.sqrt(beta * dt) * noise[k, 0]
            t_next = ts[k + 1]
            for c in range(ncorr):
                s = _safe_score(score_fn, x, t_next, alive)
                z = noise[k, 1 + c]
                eta = _corrector_step(cfg, z, s, alive)
                x = x + eta[:, None] * s + np.sqrt(2.0 * eta)[:, None] * z
            bad = alive & ~np.all(np.isfinite(x), axis=1)
            for j in np.flatnonzero(bad):
                fail[int(j)] = (float(t_next), k)
            alive &= ~bad
            x[~alive] = 0.0
    for j in np.flatnonzero(~alive):
        fail.setdefault(int(j), (float("nan"), -1))
    return x, alive, fail


def pc_sample(score_fn, sched: DiffusionSchedule, cfg: SamplerConfig, rng, d):
    """One reverse-SDE draw; ``score_fn(x, t)`` maps (B, d) rows at scalar t to scores."""
    x, alive, fail = _pc_block(score_fn, sched, cfg, [rng], d)
    if not alive[0]:
        t, step = fail[0]
        raise SamplingError(f"sampler state became non-finite at t={t:.6g} (step {step})", t, step)
    return x[0]


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get("EXPDIFF_THREADS", "1") or 1)
    return max(1, int(workers))


def pc_sample_many(score_fn, sched, cfg: SamplerConfig, d, workers=None):
    """cfg.n_samples draws with per-index streams, processed in fixed blocks."""
    blocks = [list(range(i, min(i + BLOCK, cfg.n_samples))) for i in range(0, cfg.n_samples, BLOCK)]

    def run(block):
        rngs = [sample_rng(cfg.seed, i) for i in block]
        return _pc_block(score_fn, sched, cfg, rngs, d)

    n_workers = _workers(workers)
    if n_workers == 1 or len(blocks) <= 1:
        results = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, blocks))
    if not results:
        return np.empty((0, d)), np.empty(0, dtype=bool)
    x = np.concatenate([r[0] for r in results])
    alive = np.concatenate([r[1] for r in results])
    return x, alive


def sample_posterior(ctx, cfg: SamplerConfig, workers=None, score_fn=None) -> SampleSet:
    """Posterior draws using the guided score; θ view via the context's link."""
    from .guidance import posterior_score

    if score_fn is None:
        def score_fn(x, t):
            return posterior_score(ctx, x, t)

    d = ctx.d
    x, alive = pc_sample_many(score_fn, ctx.sched, cfg, d, workers)
    # a finite state can still overflow the link; such rows count as failures
    with np.errstate(over="ignore"):
        alive &= np.all(np.isfinite(inv_link(parse_link(ctx.link), x)), axis=1)
    dropped = int(np.sum(~alive))
    if cfg.n_samples and dropped > MAX_DROP_RATE * cfg.n_samples:
        raise SamplingError(f"{dropped} of {cfg.n_samples} samples became non-finite")
    prov = {
        "sampler": asdict(cfg),
        "sde": asdict(ctx.sched),
        "clip": ctx.clip,
        "clip_total": ctx.clip_total,
        "sample_seeds": f"SeedSequence({cfg.seed}, spawn_key=(index,))",
    }
    prov["config_hash"] = config_hash(prov)
    return SampleSet(x[alive], ctx.link, prov, dropped)


# -- random-walk Metropolis ------------------------------------------------------
def split_rhat(chains):
    """Split-R-hat per dimension for an array of shape (chains, draws, d)."""
    chains = np.asarray(chains, dtype=float)
    c, n, d = chains.shape
    half = n // 2
    if half < 2:
        raise ConfigError("need at least 4 draws per chain for split R-hat")
    parts = np.concatenate([chains[:, :half], chains[:, n - half :]], axis=0)
    means = parts.mean(axis=1)
    w = parts.var(axis=1, ddof=1).mean(axis=0)
    b = half * means.var(axis=0, ddof=1)
    var_plus = (half - 1) / half * w + b / half
    return np.sqrt(var_plus / w)


def rwm_sample(log_target, d, cfg: McmcConfig, transform=None, link="identity") -> SampleSet:
    """Adaptive random-walk Metropolis, all chains advanced together.

    ``log_target`` maps a (chains, d) array to (chains,) log densities.
    The proposal scale of each chain adapts toward ``target_accept`` during
    burn-in and is frozen afterwards. ``transform`` maps chain states to
    reported x0 rows (e.g. whitened to correlated coordinates).
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    C = cfg.chains
    x = np.zeros((C, d))
    lp = np.asarray(log_target(x), dtype=float)
    if not np.all(np.isfinite(lp)):
        raise NumericalError("log target is not finite at the origin")
    log_scale = np.full(C, np.log(2.38 / np.sqrt(d)))
    n_keep = (cfg.iters - cfg.burn_in) // cfg.thin
    kept = np.empty((C, n_keep, d))
    acc_post = np.zeros(C)
    ever_accepted = np.zeros(C, dtype=bool)
    init_window = 10 * d
    k = 0
    for it in range(cfg.iters):
        prop = x + np.exp(log_scale)[:, None] * rng.standard_normal((C, d))
        lp_prop = np.asarray(log_target(prop), dtype=float)
        log_u = np.log(rng.uniform(size=C))
        with np.errstate(invalid="ignore"):
            accept = np.isfinite(lp_prop) & (log_u < lp_prop - lp)
        x[accept] = prop[accept]
        lp[accept] = lp_prop[accept]
        ever_accepted |= accept
        if it + 1 == init_window and not np.all(ever_accepted):
            bad = np.flatnonzero(~ever_accepted).tolist()
            raise NumericalError(f"chains {bad} rejected all of the first {init_window} proposals")
        if it < cfg.burn_in:
            gain = (it + 1) ** -0.6
            log_scale += gain * (accept - cfg.target_accept)
        else:
            acc_post += accept
            j = it - cfg.burn_in
            if j % cfg.thin == cfg.thin - 1 and k < n_keep:
                kept[:, k] = x
                k += 1
    kept = kept[:, :k]
    rhat = split_rhat(kept) if k >= 4 else np.full(d, np.nan)
    rows = kept.reshape(-1, d)
    if transform is not None:
        rows = transform(rows)
    diag = {
        "acceptance": (acc_post / max(cfg.iters - cfg.burn_in, 1)).tolist(),
        "rhat": rhat.tolist(),
        "proposal_scale": np.exp(log_scale).tolist(),
    }
    prov = {"mcmc": asdict(cfg)}
    prov["config_hash"] = config_hash(prov)
    return SampleSet(rows, link, prov, 0, diag)
