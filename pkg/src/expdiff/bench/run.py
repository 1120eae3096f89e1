"""Benchmark stages: data, training, posterior sampling, MCMC reference and metrics."""

from __future__ import annotations

import logging
import os
from contextlib import contextmanager

import numpy as np

from .. import gp
from ..errors import ConfigError, DomainError, ExpDiffError, SamplingError
from ..expfam import aggregate
from ..guidance import GuidanceContext, dps_score
from ..link import inv_link
from ..net import load
from ..sampler import SampleSet, config_hash, pc_sample_many, rwm_sample, sample_posterior
from ..train import DomainMap, GpPrior, train_inference, train_score
from .data import gen_synthetic, read_data_obs, read_samples, read_truth, write_data, write_samples
from .metrics import compute_metrics
from .report import report

log = logging.getLogger(__name__)


@contextmanager
def stage(name, cfg):
    """Prefix failures with the stage name; artifacts already written are left in place."""
    try:
        yield
    except ExpDiffError as exc:
        exc.args = (f"stage '{name}' failed (artifacts in {cfg.paths.out_dir}): {exc}",)
        raise


def _prior(cfg):
    return GpPrior(gp.gp_factor(cfg.d, cfg.kernel()))


def run_gen(cfg):
    with stage("gen-data", cfg):
        rng = np.random.default_rng(cfg.stage_seed("data"))
        data = gen_synthetic(cfg, rng)
        write_data(cfg, data)
        if data.jitter:
            log.info("GP factor used jitter %.1e", data.jitter)
        return data


def run_train_score(cfg):
    with stage("train-score", cfg):
        return train_score(cfg.train_config("score"), _prior(cfg), cfg.schedule(), cfg.paths.out_dir,
                           cfg.paths.resolve("score_weights")).net


def run_train_inference(cfg):
    with stage("train-inference", cfg):
        res = train_inference(cfg.train_config("inference"), _prior(cfg), cfg.family_obj, cfg.link_obj,
                              cfg.schedule(), cfg.paths.out_dir, cfg.paths.resolve("infer_weights"))
        return res.net


def load_networks(cfg):
    score_path = cfg.paths.resolve("score_weights")
    infer_path = cfg.paths.resolve("infer_weights")
    score_net = load(score_path)
    infer_net = load(infer_path) if os.path.exists(infer_path) else None
    if score_net.input_dim != cfg.d:
        raise ConfigError(f"{score_path} was trained for d={score_net.input_dim}, config has d={cfg.d}")
    if infer_net is not None:
        meta = infer_net.meta
        if meta.get("family") != str(cfg.family_obj) or meta.get("link") != str(cfg.link_obj):
            raise ConfigError(f"{infer_path} was trained for {meta.get('family')} / {meta.get('link')}")
    return score_net, infer_net


def guidance_context(cfg, obs, score_net, infer_net):
    if infer_net is None and np.any(obs.mask):
        raise ConfigError("posterior sampling with observations needs inference network weights")
    return GuidanceContext.from_observations(
        obs, cfg.link_obj, infer_net, DomainMap(cfg.family_obj), score_net, cfg.schedule(),
        clip=cfg.sampler.clip, clip_total=cfg.sampler.clip_total,
    )


def run_sample(cfg, workers=None, obs=None, nets=None):
    with stage("sample-posterior", cfg):
        obs = read_data_obs(cfg) if obs is None else obs
        score_net, infer_net = load_networks(cfg) if nets is None else nets
        ctx = guidance_context(cfg, obs, score_net, infer_net)
        samples = sample_posterior(ctx, cfg.sampler_config(), workers)
        samples.provenance["seeds"] = cfg.seeds()
        write_samples(cfg.paths.resolve("samples"), samples)
        return samples


def whitened_log_target(cfg, obs, factor):
    """Posterior log density in whitened coordinates w, with x0 = L w."""
    fam = cfg.family_obj
    link = cfg.link_obj
    agg = aggregate(obs)
    L = factor.chol

    def log_target(w):
        x = w @ L.T
        prior = -0.5 * np.sum(w * w, axis=1)
        try:
            theta = inv_link(link, x)
        except DomainError:
            return np.full(w.shape[0], -np.inf)
        with np.errstate(all="ignore"):
            ok = np.all(np.isfinite(theta) & fam._theta_mask(theta), axis=1)
            safe = np.where(ok[:, None], theta, 1.0 if fam.kind not in ("binomial", "negbinomial", "geometric") else 0.5)
            ll = agg.log_h + np.sum(fam._eta(safe) * agg.t_sum - agg.count * fam._a_y(safe), axis=1)
        return np.where(ok & np.isfinite(ll), prior + ll, -np.inf)

    return log_target


def run_mcmc(cfg, obs=None):
    with stage("mcmc", cfg):
        obs = read_data_obs(cfg) if obs is None else obs
        factor = gp.gp_factor(cfg.d, cfg.kernel())
        samples = rwm_sample(whitened_log_target(cfg, obs, factor), cfg.d, cfg.mcmc_config(),
                             transform=lambda w: w @ factor.chol.T, link=cfg.link_obj)
        samples.provenance["gp_jitter"] = factor.jitter
        write_samples(cfg.paths.resolve("mcmc_samples"), samples)
        return samples


def run_dps(cfg, obs, score_net, workers=None):
    """Optional DPS baselines; failures are recorded rather than raised."""
    out = {}
    sched = cfg.schedule()
    for variant in cfg.dps_variants():
        ctx = GuidanceContext.from_observations(obs, cfg.link_obj, None, DomainMap(cfg.family_obj),
                                                score_net, sched, clip=cfg.sampler.clip,
                                                clip_total=cfg.sampler.clip_total)
        scfg = cfg.sampler_config()
        try:
            x, alive = pc_sample_many(lambda x, t: dps_score(ctx, x, t, variant), sched, scfg, cfg.d, workers)
            with np.errstate(over="ignore"):
                alive &= np.all(np.isfinite(inv_link(cfg.link_obj, x)), axis=1)
            ss = SampleSet(x[alive], cfg.link_obj, {"dps": variant.kind}, int(np.sum(~alive)))
        except (ExpDiffError, FloatingPointError) as exc:
            log.warning("DPS variant %s failed: %s", variant.kind, exc)
            ss = None
        out[f"dps_{variant.kind}"] = ss
    return out


def run_benchmark(cfg, train=True, workers=None):
    """gen -> train -> sample -> mcmc -> metrics, writing every artifact under paths.out_dir."""
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    data = run_gen(cfg)
    if train:
        score_net = run_train_score(cfg)
        infer_net = run_train_inference(cfg)
    else:
        with stage("load-weights", cfg):
            score_net, infer_net = load_networks(cfg)
    samples = run_sample(cfg, workers, data.obs, (score_net, infer_net))
    mcmc = run_mcmc(cfg, data.obs)
    with stage("dps", cfg):
        extra = run_dps(cfg, data.obs, score_net, workers)
    with stage("report", cfg):
        metrics = compute_metrics(data.x0_true, data.theta_true, samples, mcmc, extra, cfg.seeds(), samples.dropped)
        metrics.summary["config_hash"] = config_hash(cfg.model_dump())
        metrics.summary["gp_jitter"] = data.jitter
        metrics.summary["clip_mode"] = "total" if cfg.sampler.clip_total else "likelihood"
        write_report(cfg, metrics)
    return metrics


def write_report(cfg, metrics):
    base = os.path.splitext(cfg.paths.resolve("metrics"))[0]
    report(metrics, cfg.paths.resolve("metrics"), cfg.paths.resolve("report"), base + ".json")


def run_report(cfg):
    """Recompute metrics from the CSV artifacts of earlier stages."""
    with stage("report", cfg):
        x0, theta = read_truth(cfg.paths.resolve("truth"))
        samples = read_samples(cfg.paths.resolve("samples"), cfg.link_obj)
        mcmc_path = cfg.paths.resolve("mcmc_samples")
        mcmc = read_samples(mcmc_path, cfg.link_obj) if os.path.exists(mcmc_path) else None
        if samples.n == 0:
            raise SamplingError("no posterior samples found; refusing to write an empty report")
        metrics = compute_metrics(x0, theta, samples, mcmc, seeds=cfg.seeds())
        write_report(cfg, metrics)
        return metrics
