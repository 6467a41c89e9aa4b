"""CSV ingestion: column selection, missing-value handling and standardization.

Every used covariate is centered by its sample mean and divided by its sample
standard deviation (``ddof=1``) when ``standardize`` is on. Smooth covariates
are then mapped to [0, 1] by their sample range; the range on the standardized
scale is kept as the spline domain, so evaluation points for smooth foci are
given in standardized units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError
from .families import get_family
from .model_space import CovariatePartition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetConfig:
    path: str
    response: str
    smooth: tuple[str, ...]
    linear_certain: tuple[str, ...]
    linear_exploratory: tuple[str, ...] = ()
    family: str = "bernoulli-logit"
    standardize: bool = True
    zero_missing: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("smooth", "linear_certain", "linear_exploratory", "zero_missing"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        get_family(self.family)
        used = (self.response,) + self.smooth + self.linear_certain + self.linear_exploratory
        dup = sorted({c for c in used if used.count(c) > 1})
        if dup:
            raise ConfigError(f"columns used in more than one role: {dup}")
        if not self.linear_certain + self.linear_exploratory:
            raise ConfigError("at least one linear covariate is required")

    @property
    def partition(self) -> CovariatePartition:
        return CovariatePartition(self.linear_certain, self.linear_exploratory)

    @property
    def columns(self) -> tuple[str, ...]:
        return (self.response,) + self.smooth + self.linear_certain + self.linear_exploratory


@dataclass(frozen=True)
class Dataset:
    config: DatasetConfig
    y: np.ndarray
    X: np.ndarray
    X01: np.ndarray
    Z: np.ndarray
    domains: list[tuple[float, float]]
    scaling: dict[str, tuple[float, float]] = field(default_factory=dict)
    n_dropped: int = 0

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return Dataset(self.config, self.y[rows], self.X[rows], self.X01[rows], self.Z[rows],
                       self.domains, self.scaling, self.n_dropped)


def read_frame(config: DatasetConfig) -> pd.DataFrame:
    try:
        frame = pd.read_csv(config.path, encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"cannot read {config.path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{config.path} is empty") from exc
    missing = [c for c in config.columns + config.zero_missing if c not in frame.columns]
    if missing:
        raise ConfigError(f"unknown columns {missing}; available: {list(frame.columns)}")
    return frame


def load_csv(config: DatasetConfig) -> Dataset:
    frame = read_frame(config)
    used = frame[list(config.columns)].apply(pd.to_numeric, errors="coerce")
    keep = used.notna().all(axis=1) & np.isfinite(used).all(axis=1)
    for col in config.zero_missing:
        keep &= pd.to_numeric(frame[col], errors="coerce") != 0
    dropped = int((~keep).sum())
    if dropped:
        logger.info("dropped %d of %d rows with missing or non-numeric values", dropped, len(used))
    used = used[keep]
    if used.empty:
        raise DataError("no usable rows after dropping missing values")

    family = get_family(config.family)
    y = family.validate_response(used[config.response].to_numpy(dtype=float))
    scaling = {}
    cols = {}
    for c in config.smooth + config.linear_certain + config.linear_exploratory:
        v = used[c].to_numpy(dtype=float)
        sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
        if not sd > 0:
            raise DataError(f"column {c!r} is constant; cannot standardize or use it as a covariate")
        if config.standardize:
            mean = float(v.mean())
            scaling[c] = (mean, sd)
            v = (v - mean) / sd
        cols[c] = v
    n = used.shape[0]
    X = np.column_stack([cols[c] for c in config.smooth]) if config.smooth else np.zeros((n, 0))
    domains = [(float(X[:, a].min()), float(X[:, a].max())) for a in range(X.shape[1])]
    X01 = np.column_stack([(X[:, a] - lo) / (hi - lo) for a, (lo, hi) in enumerate(domains)]) \
        if config.smooth else np.zeros((n, 0))
    Z = np.column_stack([cols[c] for c in config.linear_certain + config.linear_exploratory])
    return Dataset(config, y, X, X01, Z, domains, scaling, dropped)
