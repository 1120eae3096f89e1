"""Synthetic data generation and CSV serialization of truths and sample sets."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .. import gp
from ..errors import ConfigError, ExpDiffError
from ..expfam import ObservationSet, parse_family, read_observations, write_observations
from ..link import inv_link, parse_link
from ..sampler import SampleSet


@dataclass(frozen=True)
class SyntheticData:
    x0_true: np.ndarray
    theta_true: np.ndarray
    obs: ObservationSet
    jitter: float


def simulate_observations(family, theta, n, rng, exposure=None):
    """N i.i.d. observation rows given per-dimension parameters."""
    family = parse_family(family)
    theta = np.asarray(theta, dtype=float)
    family.check_theta(theta)
    c = 1.0 if exposure is None else np.asarray(exposure, dtype=float)
    rows = np.array([family.simulate(theta, rng, c) for _ in range(n)]).reshape(n, theta.size)
    return ObservationSet.full(rows, family, exposure) if n else ObservationSet(
        np.zeros((1, theta.size)), np.zeros((1, theta.size), dtype=bool), family, exposure)


def gen_synthetic(cfg, rng) -> SyntheticData:
    """x0 ~ GP(0, K), theta = g^-1(x0), then cfg.N observations per dimension."""
    factor = gp.gp_factor(cfg.d, cfg.kernel())
    x0 = gp.sample(factor, rng)
    theta = inv_link(cfg.link_obj, x0)
    try:
        obs = simulate_observations(cfg.family_obj, theta, cfg.N, rng, cfg.exposure_vec)
    except ValueError as exc:
        raise ExpDiffError(f"internal error: simulated parameter outside the support ({exc})") from exc
    return SyntheticData(x0, theta, obs, factor.jitter)


def write_truth(path, x0, theta):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dim", "x0", "theta"])
        for j, (a, b) in enumerate(zip(x0, theta)):
            w.writerow([j, f"{a:.17g}", f"{b:.17g}"])


def read_truth(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["dim", "x0", "theta"]:
            raise ConfigError(f"{path}: expected header dim,x0,theta")
        rows = sorted((int(r["dim"]), float(r["x0"]), float(r["theta"])) for r in reader)
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ConfigError(f"{path}: dims must be 0..d-1 without gaps")
    return np.array([r[1] for r in rows]), np.array([r[2] for r in rows])


def write_samples(path, samples: SampleSet):
    theta = samples.theta
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "dim", "x0", "theta"])
        for i in range(samples.n):
            for j in range(samples.d):
                w.writerow([i, j, f"{samples.x0[i, j]:.17g}", f"{theta[i, j]:.17g}"])


def read_samples(path, link="identity") -> SampleSet:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["sample", "dim", "x0", "theta"]:
            raise ConfigError(f"{path}: expected header sample,dim,x0,theta")
        rows = [(int(r["sample"]), int(r["dim"]), float(r["x0"])) for r in reader]
    if not rows:
        return SampleSet(np.empty((0, 0)), link)
    n = max(r[0] for r in rows) + 1
    d = max(r[1] for r in rows) + 1
    if len(rows) != n * d:
        raise ConfigError(f"{path}: expected {n * d} rows for a full {n}x{d} table, got {len(rows)}")
    x = np.full((n, d), np.nan)
    for i, j, v in rows:
        x[i, j] = v
    return SampleSet(x, parse_link(link))


def write_data(cfg, data: SyntheticData):
    os.makedirs(cfg.paths.out_dir, exist_ok=True)
    write_observations(data.obs, cfg.paths.resolve("observations"))
    write_truth(cfg.paths.resolve("truth"), data.x0_true, data.theta_true)


def read_data_obs(cfg) -> ObservationSet:
    return read_observations(cfg.paths.resolve("observations"), cfg.family_obj, cfg.d)
