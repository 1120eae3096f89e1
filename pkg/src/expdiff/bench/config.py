"""Run configuration: a strict JSON schema shared by every CLI stage."""

from __future__ import annotations

import json
import os
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..errors import ConfigError
from ..expfam import parse_family
from ..gp import RbfKernelParams
from ..guidance import DpsVariant
from ..link import default_link, parse_link
from ..sampler import McmcConfig, SamplerConfig
from ..sde import DiffusionSchedule
from ..train import TrainConfig

STAGES = ("data", "score", "inference", "sampler", "mcmc", "dps")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GpSection(_Strict):
    variance: float = Field(1.0, gt=0)
    lengthscale: float = Field(0.1, gt=0)


class SdeSection(_Strict):
    beta0: float = Field(0.001, gt=0)
    beta1: float = Field(20.0, gt=0)
    eps: float = Field(1e-3, gt=0, lt=1)


class TrainSection(_Strict):
    steps: int = Field(20_000, ge=1)
    batch_size: int = Field(256, ge=1)
    lr: float = Field(1e-4, gt=0)
    seed: Optional[int] = None
    log_every: int = Field(500, ge=1)
    hidden: list[int] = Field(default_factory=lambda: [96] * 6)
    time_embed_len: int = Field(64, ge=2)


def _score_default():
    return TrainSection()


def _inference_default():
    return TrainSection(lr=1e-3)


class TrainBlock(_Strict):
    score: TrainSection = Field(default_factory=_score_default)
    inference: TrainSection = Field(default_factory=_inference_default)


class SamplerSection(_Strict):
    steps: int = Field(1000, ge=2)
    snr: float = Field(0.1, gt=0)
    n_samples: int = Field(500, ge=0)
    seed: Optional[int] = None
    correctors_per_step: int = Field(1, ge=0)
    corrector_norm: Literal["block", "sample"] = "block"
    clip: float = Field(10.0, gt=0)
    clip_total: bool = False


class McmcSection(_Strict):
    chains: int = Field(4, ge=1)
    iters: int = Field(200_000, ge=1)
    burn_in: int = Field(50_000, ge=0)
    target_accept: float = Field(0.234, gt=0, lt=1)
    seed: Optional[int] = None
    thin: int = Field(10, ge=1)


class DpsSection(_Strict):
    kind: Literal["normal", "poisson_ls", "poisson_shot"]
    sigma2: float = Field(1.0, gt=0)
    rho: float = Field(0.3, gt=0)
    zero_offset: Optional[float] = Field(0.01, gt=0)


class PathsSection(_Strict):
    out_dir: str = "run"
    observations: str = "observations.csv"
    truth: str = "truth.csv"
    score_weights: str = "score.wts"
    infer_weights: str = "infer.wts"
    samples: str = "samples.csv"
    mcmc_samples: str = "mcmc.csv"
    metrics: str = "metrics.csv"
    report: str = "report.svg"

    def resolve(self, name):
        p = getattr(self, name)
        return p if os.path.isabs(p) else os.path.join(self.out_dir, p)


class RunConfig(_Strict):
    family: str = "poisson"
    link: Optional[str] = None
    d: int = Field(30, ge=1)
    N: int = Field(1, ge=0)
    exposure: Optional[list[float]] = None
    seed: int = 0
    gp: GpSection = Field(default_factory=GpSection)
    sde: SdeSection = Field(default_factory=SdeSection)
    train: TrainBlock = Field(default_factory=TrainBlock)
    sampler: SamplerSection = Field(default_factory=SamplerSection)
    mcmc: McmcSection = Field(default_factory=McmcSection)
    dps: list[DpsSection] = Field(default_factory=list)
    paths: PathsSection = Field(default_factory=PathsSection)

    @field_validator("family")
    @classmethod
    def _family_ok(cls, v):
        parse_family(v)
        return v

    @field_validator("link")
    @classmethod
    def _link_ok(cls, v):
        if v is not None:
            parse_link(v)
        return v

    # -- derived objects ---------------------------------------------------
    @property
    def family_obj(self):
        return parse_family(self.family)

    @property
    def link_obj(self):
        return parse_link(self.link) if self.link is not None else default_link(self.family_obj)

    @property
    def exposure_vec(self):
        if self.exposure is None:
            return None
        if len(self.exposure) != self.d:
            raise ConfigError(f"exposure has {len(self.exposure)} entries, expected d={self.d}")
        return np.asarray(self.exposure, dtype=float)

    def stage_seed(self, stage):
        """Explicit per-section seed if set, otherwise derived from the master seed."""
        explicit = {
            "score": self.train.score.seed,
            "inference": self.train.inference.seed,
            "sampler": self.sampler.seed,
            "mcmc": self.mcmc.seed,
        }.get(stage)
        if explicit is not None:
            return explicit
        ss = np.random.SeedSequence(self.seed, spawn_key=(STAGES.index(stage),))
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    def seeds(self):
        return {s: self.stage_seed(s) for s in STAGES}

    def kernel(self):
        return RbfKernelParams(self.gp.variance, self.gp.lengthscale)

    def schedule(self):
        try:
            return DiffusionSchedule(self.sde.beta0, self.sde.beta1, self.sde.eps)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def train_config(self, which):
        sec = getattr(self.train, which)
        return TrainConfig(sec.steps, sec.batch_size, sec.lr, self.stage_seed(which), sec.log_every,
                           tuple(sec.hidden), sec.time_embed_len)

    def sampler_config(self):
        s = self.sampler
        return SamplerConfig(s.steps, s.snr, s.n_samples, self.stage_seed("sampler"),
                             s.correctors_per_step, s.corrector_norm)

    def mcmc_config(self):
        m = self.mcmc
        if m.burn_in >= m.iters:
            raise ConfigError("mcmc.burn_in must be smaller than mcmc.iters")
        return McmcConfig(m.chains, m.iters, m.burn_in, m.target_accept, self.stage_seed("mcmc"), m.thin)

    def dps_variants(self):
        return [DpsVariant(v.kind, v.sigma2, v.rho, v.zero_offset) for v in self.dps]


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(raw)


def parse_config(raw) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def schema_json():
    return json.dumps(RunConfig.model_json_schema(), indent=2, sort_keys=True)
