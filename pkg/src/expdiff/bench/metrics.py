"""Comparison metrics between posterior sample sets and against the truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

N_QUANTILES = 512
QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


def _levels(n=N_QUANTILES):
    return (np.arange(n) + 0.5) / n


def wasserstein1(a, b):
    """1-Wasserstein distance per column, comparing 512 matched quantiles.

    Accepts 1-D arrays (one dimension) or (n, d) matrices.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ConfigError("wasserstein1 needs nonempty sample sets")
    q = _levels()
    qa = np.quantile(a, q, axis=0)
    qb = np.quantile(b, q, axis=0)
    out = np.mean(np.abs(qa - qb), axis=0)
    return float(out) if out.ndim == 0 else out


def coverage(truth, lo, hi):
    """Fraction of dimensions whose truth lies inside [lo, hi]."""
    truth, lo, hi = (np.asarray(v, dtype=float) for v in (truth, lo, hi))
    if np.any(lo > hi):
        raise ConfigError("credible interval bounds are not ordered")
    if truth.size == 0:
        raise ConfigError("coverage of an empty vector is undefined")
    return float(np.mean((truth >= lo) & (truth <= hi)))


def quantile_table(x):
    """Rows q025, q25, median, q75, q975 for each column of x."""
    return np.quantile(np.asarray(x, dtype=float), QUANTILES, axis=0)


@dataclass
class MetricsReport:
    per_dim: dict
    summary: dict
    methods: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    @property
    def d(self):
        return len(self.per_dim["dim"])

    def to_dict(self):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {k: clean(w) for k, w in v.items()}
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {"per_dim": clean(self.per_dim), "summary": clean(self.summary),
                "methods": clean(self.methods), "seeds": clean(self.seeds)}


def compute_metrics(x0_true, theta_true, diffusion, mcmc=None, extra_methods=None, seeds=None, dropped=0):
    """Per-dimension quantiles in x0 and theta space, agreement with MCMC and coverage."""
    d = len(x0_true)
    if diffusion.n == 0:
        raise ConfigError("no posterior samples to summarize")
    qx = quantile_table(diffusion.x0)
    qt = quantile_table(diffusion.theta)
    per = {"dim": np.arange(d), "x0_true": np.asarray(x0_true), "theta_true": np.asarray(theta_true)}
    for name, row in zip(("q025", "q25", "median", "q75", "q975"), qt):
        per[f"theta_{name}"] = row
    for name, row in zip(("q025", "q25", "median", "q75", "q975"), qx):
        per[f"x0_{name}"] = row
    summary = {
        "coverage_theta": coverage(theta_true, qt[0], qt[4]),
        "mae_median_theta_vs_truth": float(np.mean(np.abs(qt[2] - theta_true))),
        "n_samples": diffusion.n,
        "drop_rate": dropped / max(dropped + diffusion.n, 1),
    }
    if mcmc is not None:
        mx = quantile_table(mcmc.x0)
        mt = quantile_table(mcmc.theta)
        for name, row in zip(("q025", "q25", "median", "q75", "q975"), mt):
            per[f"mcmc_theta_{name}"] = row
        per["mcmc_x0_median"] = mx[2]
        per["abs_median_diff_x0"] = np.abs(qx[2] - mx[2])
        per["w1_x0"] = wasserstein1(diffusion.x0, mcmc.x0)
        summary["mcmc_coverage_theta"] = coverage(theta_true, mt[0], mt[4])
        summary["mae_median_x0_vs_mcmc"] = float(np.mean(per["abs_median_diff_x0"]))
        summary["frac_median_within_0.25"] = float(np.mean(per["abs_median_diff_x0"] < 0.25))
        summary["frac_w1_below_0.35"] = float(np.mean(per["w1_x0"] < 0.35))
        if "rhat" in mcmc.diagnostics:
            summary["mcmc_max_rhat"] = float(np.max(mcmc.diagnostics["rhat"]))
            summary["mcmc_acceptance"] = mcmc.diagnostics["acceptance"]
    methods = {}
    for name, ss in (extra_methods or {}).items():
        if ss is None or ss.n == 0:
            methods[name] = {"n_samples": 0}
            continue
        q = quantile_table(ss.theta)
        methods[name] = {
            "n_samples": ss.n,
            "dropped": ss.dropped,
            "theta_q025": q[0], "theta_median": q[2], "theta_q975": q[4],
            "coverage_theta": coverage(theta_true, q[0], q[4]),
        }
    return MetricsReport(per, summary, methods, dict(seeds or {}))
