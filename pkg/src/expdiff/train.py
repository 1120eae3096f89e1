"""Score-network (denoising score matching) and inference-network (AVI) trainers."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gp as gp_mod
from .errors import ConfigError, DomainError, TrainingError
from .expfam import parse_family, t_theta
from .link import parse_link
from .net import AdamState, DenseNetwork, adam_step, grad_params, make_network, save
from .sde import DiffusionSchedule, sample_forward

log = logging.getLogger(__name__)

# exp(+-LOG_CLIP) bounds the positive outputs of the domain map; keeping the
# ratio of the two classical parameters below e^30 stops rounding in the affine
# map from pushing (nu, tau) onto the domain boundary
LOG_CLIP = 15.0


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings. Every step draws a fresh batch from the prior source."""

    steps: int = 2000
    batch_size: int = 256
    lr: float = 1e-4
    seed: int = 0
    log_every: int = 100
    hidden: tuple = (96,) * 6
    time_embed_len: int = 64

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1 or self.log_every < 1:
            raise ConfigError("steps, batch_size and log_every must be positive")
        if not self.lr > 0:
            raise ConfigError("learning rate must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


# -- prior sources ----------------------------------------------------------
@dataclass(frozen=True)
class GpPrior:
    """x0 draws from a GP factor."""

    factor: gp_mod.GpFactor

    @property
    def d(self):
        return self.factor.d

    def sample(self, rng, n):
        return gp_mod.sample(self.factor, rng, n)


@dataclass(frozen=True)
class DatasetPrior:
    """x0 draws resampled with replacement from a fixed table of rows."""

    data: np.ndarray

    @property
    def d(self):
        return self.data.shape[1]

    def sample(self, rng, n):
        return self.data[rng.integers(0, self.data.shape[0], size=n)]


# -- domain maps --------------------------------------------------------------
@dataclass(frozen=True)
class DomainMap:
    """Maps unconstrained outputs o = (o1, o2) in R^{2d} to valid (nu, tau).

    Normal conjugates use mean = o1 and tau = exp(o2), so nu = tau * o1.
    Every other conjugate sets classical (alpha, beta) = exp(o1), exp(o2) and
    applies the family's affine map to (nu, tau). Positive classical
    parameters always land strictly inside the prior domain.
    """

    family: object

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        if self.family.conjugate != "normal":
            # coefficients of the affine map (alpha, beta) -> (nu, tau)
            z = np.zeros(1)
            o = np.ones(1)
            base = np.array(self.family._to_zeta(z, z), dtype=float).ravel()
            col_a = np.array(self.family._to_zeta(o, z), dtype=float).ravel() - base
            col_b = np.array(self.family._to_zeta(z, o), dtype=float).ravel() - base
            object.__setattr__(self, "_affine", (base, col_a, col_b))

    def _split(self, o):
        o = np.asarray(o, dtype=float)
        d = o.shape[-1] // 2
        if o.shape[-1] != 2 * d:
            raise ConfigError("domain map needs an even number of outputs")
        return o[..., :d], o[..., d:]

    def __call__(self, o):
        o1, o2 = self._split(o)
        e2 = np.exp(np.clip(o2, -LOG_CLIP, LOG_CLIP))
        if self.family.conjugate == "normal":
            return e2 * o1, e2
        e1 = np.exp(np.clip(o1, -LOG_CLIP, LOG_CLIP))
        base, ca, cb = self._affine
        return base[0] + ca[0] * e1 + cb[0] * e2, base[1] + ca[1] * e1 + cb[1] * e2

    def vjp(self, o, g_nu, g_tau):
        """Pull cotangents on (nu, tau) back to the raw outputs o."""
        o1, o2 = self._split(o)
        live2 = np.abs(o2) < LOG_CLIP
        e2 = np.exp(np.clip(o2, -LOG_CLIP, LOG_CLIP))
        if self.family.conjugate == "normal":
            g1 = g_nu * e2
            g2 = (g_nu * o1 + g_tau) * e2 * live2
        else:
            live1 = np.abs(o1) < LOG_CLIP
            e1 = np.exp(np.clip(o1, -LOG_CLIP, LOG_CLIP))
            _, ca, cb = self._affine
            g1 = (g_nu * ca[0] + g_tau * ca[1]) * e1 * live1
            g2 = (g_nu * cb[0] + g_tau * cb[1]) * e2 * live2
        return np.concatenate([g1, g2], axis=-1)

    def inverse(self, nu, tau):
        """Raw outputs producing (nu, tau); used to build exact reference maps in tests."""
        nu = np.asarray(nu, dtype=float)
        tau = np.asarray(tau, dtype=float)
        if self.family.conjugate == "normal":
            return np.concatenate([nu / tau, np.log(tau)], axis=-1)
        p1, p2 = self.family.zeta_to_classical(nu, tau)
        return np.concatenate([np.log(p1), np.log(p2)], axis=-1)


# -- losses ------------------------------------------------------------------
def _draw(sched, x0, rng):
    n = x0.shape[0]
    t = rng.uniform(sched.eps, 1.0, size=n)
    z = rng.standard_normal(x0.shape)
    return t, z, sample_forward(sched, x0, t, rng, z=z)


def dsm_value_and_grad(net: DenseNetwork, sched: DiffusionSchedule, x0, rng):
    """Noise-prediction DSM loss mean((eps_hat - z)^2) and its parameter gradients."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    t, z, x_t = _draw(sched, x0, rng)

    def loss_fn(out):
        r = out - z
        return float(np.mean(r * r)), 2.0 * r / r.size

    return grad_params(net, x_t, t, loss_fn)


def dsm_loss(net, sched, x0, rng):
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    t, z, x_t = _draw(sched, x0, rng)
    r = net.forward(x_t, t) - z
    return float(np.mean(r * r))


def _avi_terms(dmap, family, out, eta, neg_ay):
    nu, tau = dmap(out)
    family.check_zeta(nu, tau)
    a = family._a_theta(nu, tau)
    loss = a - nu * eta - tau * neg_ay
    return nu, tau, loss


def avi_value_and_grad(net, dmap: DomainMap, family, link, sched, x0, rng):
    """AVI loss A(zeta) - zeta^T T_theta(g^-1(x0)) averaged over batch and dims, with gradients."""
    family = parse_family(family)
    link = parse_link(link)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    eta, neg_ay = t_theta(family, link, x0)
    t, _, x_t = _draw(sched, x0, rng)

    def loss_fn(out):
        nu, tau, loss = _avi_terms(dmap, family, out, eta, neg_ay)
        gn, gt = family._a_theta_grad(nu, tau)
        scale = 1.0 / loss.size
        g_out = dmap.vjp(out, (gn - eta) * scale, (gt - neg_ay) * scale)
        return float(np.mean(loss)), g_out

    return grad_params(net, x_t, t, loss_fn)


def avi_loss(net, dmap, family, link, sched, x0, rng):
    family = parse_family(family)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    eta, neg_ay = t_theta(family, parse_link(link), x0)
    t, _, x_t = _draw(sched, x0, rng)
    return float(np.mean(_avi_terms(dmap, family, net.forward(x_t, t), eta, neg_ay)[2]))


# -- training loops ------------------------------------------------------------
@dataclass
class TrainResult:
    net: DenseNetwork
    losses: list = field(default_factory=list)
    dmap: DomainMap | None = None


def _streams(seed):
    init_ss, data_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(data_ss)


def _loop(net, cfg, step_fn, out_dir, prefix):
    """Shared Adam loop with CSV logging, checkpoints and divergence guard."""
    opt = AdamState.for_network(net, cfg.lr)
    log_path = ckpt = None
    rows = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_path = os.path.join(out_dir, f"{prefix}_train_log.csv")
    losses = []
    window = []
    for step in range(1, cfg.steps + 1):
        try:
            loss, grads = step_fn()
        except (DomainError, FloatingPointError) as exc:
            raise TrainingError(f"{prefix} training failed at step {step}: {exc}", ckpt) from exc
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingError(f"{prefix} loss became non-finite at step {step}", ckpt)
        adam_step(opt, net, grads)
        losses.append(loss)
        window.append(loss)
        if step % cfg.log_every == 0 or step == cfg.steps:
            avg = float(np.mean(window))
            window = []
            rows.append((step, loss, avg))
            log.debug("%s step %d loss %.6g", prefix, step, avg)
            if out_dir is not None:
                ckpt = os.path.join(out_dir, f"{prefix}.ckpt.wts")
                save(net, ckpt)
    if log_path is not None:
        with open(log_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "loss", "window_mean"])
            for s, l, a in rows:
                w.writerow([s, "%.17g" % l, "%.17g" % a])
    return losses


def _meta(kind, cfg, sched, **extra):
    meta = {"kind": kind, "train": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()},
            "sde": asdict(sched)}
    meta.update(extra)
    return meta


def _save_final(net, out_dir, weights_path, default_name):
    if weights_path is None and out_dir is not None:
        weights_path = os.path.join(out_dir, default_name)
    if weights_path is not None:
        save(net, weights_path)


def train_score(cfg: TrainConfig, prior, sched: DiffusionSchedule, out_dir=None, weights_path=None) -> TrainResult:
    """Fit a noise-prediction network; the score is -net(x_t, t) / sqrt(v_t)."""
    init_rng, data_rng = _streams(cfg.seed)
    d = prior.d
    net = make_network(d, d, init_rng, cfg.hidden, cfg.time_embed_len)
    net.meta = _meta("score", cfg, sched)

    def step_fn():
        return dsm_value_and_grad(net, sched, prior.sample(data_rng, cfg.batch_size), data_rng)

    losses = _loop(net, cfg, step_fn, out_dir, "score")
    _save_final(net, out_dir, weights_path, "score.wts")
    return TrainResult(net, losses)


def train_inference(cfg: TrainConfig, prior, family, link, sched: DiffusionSchedule, out_dir=None,
                    weights_path=None) -> TrainResult:
    """Fit the inference network mapping (x_t, t) to conjugate hyperparameters."""
    family = parse_family(family)
    link = parse_link(link)
    init_rng, data_rng = _streams(cfg.seed)
    d = prior.d
    net = make_network(d, 2 * d, init_rng, cfg.hidden, cfg.time_embed_len)
    net.meta = _meta("inference", cfg, sched, family=str(family), link=str(link))
    dmap = DomainMap(family)

    def step_fn():
        x0 = prior.sample(data_rng, cfg.batch_size)
        return avi_value_and_grad(net, dmap, family, link, sched, x0, data_rng)

    losses = _loop(net, cfg, step_fn, out_dir, "infer")
    _save_final(net, out_dir, weights_path, "infer.wts")
    return TrainResult(net, losses, dmap)
