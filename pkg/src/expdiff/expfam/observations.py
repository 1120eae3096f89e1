"""Observation tables with missingness and exposure, and their sufficient-statistic summary."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError
from .families import LikelihoodFamily, parse_family


@dataclass(frozen=True)
class SuffStatsAgg:
    """Aggregated sufficient statistics of an observation set.

    ``count`` is the effective number of observations per dimension; for a
    Poisson family with exposure c it is (number observed) * c.
    """

    t_sum: np.ndarray
    count: np.ndarray
    log_h: float

    @property
    def d(self):
        return self.t_sum.shape[0]

    @classmethod
    def empty(cls, d):
        return cls(np.zeros(d), np.zeros(d), 0.0)


@dataclass(frozen=True)
class ObservationSet:
    values: np.ndarray
    mask: np.ndarray
    family: LikelihoodFamily
    exposure: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != values.shape:
            raise ConfigError(f"mask shape {mask.shape} does not match values shape {values.shape}")
        d = values.shape[1]
        exposure = np.ones(d) if self.exposure is None else np.asarray(self.exposure, dtype=float)
        if exposure.shape != (d,):
            raise ConfigError(f"exposure must have length {d}, got shape {exposure.shape}")
        if not np.all(np.isfinite(exposure) & (exposure > 0)):
            raise DomainError("exposure must be positive and finite")
        if not self.family.supports_exposure and np.any(exposure != 1.0):
            raise DomainError(f"{self.family} does not accept non-unit exposure")
        observed = values[mask]
        if observed.size:
            values = values.copy()
            values[mask] = self.family.check_support(observed)
        values = np.where(mask, values, 0.0)
        values.setflags(write=False)
        mask.setflags(write=False)
        exposure.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "exposure", exposure)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    @classmethod
    def full(cls, values, family, exposure=None):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(values, np.ones(values.shape, dtype=bool), family, exposure)


def aggregate(obs: ObservationSet) -> SuffStatsAgg:
    """Sum sufficient statistics, counts and log base measures over observed cells."""
    fam = obs.family
    mask = obs.mask
    if not mask.any():
        return SuffStatsAgg.empty(obs.d)
    # masked cells hold 0.0, which may be outside the support; substitute a valid value
    filler = obs.values[mask][0]
    vals = np.where(mask, obs.values, filler)
    t = np.where(mask, fam._suff_stat(vals), 0.0)
    log_h = np.where(mask, fam._log_h(vals), 0.0)
    n_obs = mask.sum(axis=0).astype(float)
    if fam.supports_exposure:
        log_h = log_h + np.where(mask, vals * np.log(obs.exposure), 0.0)
        count = n_obs * obs.exposure
    else:
        count = n_obs
    return SuffStatsAgg(t.sum(axis=0), count, float(log_h.sum()))


def concat(a: ObservationSet, b: ObservationSet) -> ObservationSet:
    if a.d != b.d or a.family != b.family or not np.array_equal(a.exposure, b.exposure):
        raise ConfigError("observation sets are not compatible for concatenation")
    return ObservationSet(
        np.vstack([a.values, b.values]), np.vstack([a.mask, b.mask]), a.family, a.exposure
    )


# -- CSV ----------------------------------------------------------------------


def read_observations(path, family, d=None) -> ObservationSet:
    """Read ``sample,dim,value[,exposure]`` rows; absent (sample, dim) cells are masked."""
    family = parse_family(family)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if fields[:3] != ["sample", "dim", "value"] or len(fields) > 4 or (
            len(fields) == 4 and fields[3] != "exposure"
        ):
            raise ConfigError(f"{path}: expected header sample,dim,value[,exposure], got {fields}")
        has_exposure = len(fields) == 4
        for row in reader:
            rows.append(
                (
                    int(row["sample"]),
                    int(row["dim"]),
                    float(row["value"]),
                    float(row["exposure"]) if has_exposure and row["exposure"] != "" else None,
                )
            )
    n = max((r[0] for r in rows), default=-1) + 1
    d_seen = max((r[1] for r in rows), default=-1) + 1
    if d is None:
        d = d_seen
    elif d_seen > d:
        raise ConfigError(f"{path}: dim index {d_seen - 1} exceeds d={d}")
    values = np.zeros((max(n, 1), d))
    mask = np.zeros((max(n, 1), d), dtype=bool)
    exposure = np.ones(d)
    seen_exposure = {}
    for i, j, y, c in rows:
        if i < 0 or j < 0:
            raise ConfigError(f"{path}: negative index in row ({i}, {j})")
        if mask[i, j]:
            raise ConfigError(f"{path}: duplicate cell ({i}, {j})")
        values[i, j] = y
        mask[i, j] = True
        if c is not None:
            if j in seen_exposure and seen_exposure[j] != c:
                raise ConfigError(f"{path}: inconsistent exposure for dim {j}")
            seen_exposure[j] = c
            exposure[j] = c
    return ObservationSet(values, mask, family, exposure)


def write_observations(obs: ObservationSet, path):
    with_exposure = obs.family.supports_exposure and np.any(obs.exposure != 1.0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "dim", "value"] + (["exposure"] if with_exposure else []))
        for i in range(obs.n_samples):
            for j in range(obs.d):
                if obs.mask[i, j]:
                    row = [i, j, f"{obs.values[i, j]:.17g}"]
                    if with_exposure:
                        row.append(f"{obs.exposure[j]:.17g}")
                    w.writerow(row)
