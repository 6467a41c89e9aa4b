"""Certain/exploratory split of the linear coefficients and submodel projections.

A submodel keeps every certain coefficient plus a subset (``mask``) of the
exploratory ones. ``Pi_s = diag(I_dc, pi_s)`` selects the kept coordinates
of the full ``d``-vector ``beta = (beta_c, beta_u)``.

Labels use the digit convention of the diabetes analysis: the 1-based
positions (in the full ``beta``) of the included exploratory coefficients,
concatenated, with ``"0"`` for the certain-only model. With ``d > 9`` the
positions are joined by ``"-"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError

MAX_EXPLORATORY = 20


@dataclass(frozen=True)
class CovariatePartition:
    certain: tuple[str, ...]
    exploratory: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "certain", tuple(self.certain))
        object.__setattr__(self, "exploratory", tuple(self.exploratory))
        names = self.certain + self.exploratory
        if len(set(names)) != len(names):
            raise ConfigError(f"certain and exploratory names must be distinct: {names}")

    @property
    def d_c(self) -> int:
        return len(self.certain)

    @property
    def d_u(self) -> int:
        return len(self.exploratory)

    @property
    def d(self) -> int:
        return self.d_c + self.d_u

    @property
    def names(self) -> tuple[str, ...]:
        return self.certain + self.exploratory

    @classmethod
    def anonymous(cls, d_c: int, d_u: int) -> CovariatePartition:
        return cls(tuple(f"z{j + 1}" for j in range(d_c)),
                   tuple(f"z{j + 1}" for j in range(d_c, d_c + d_u)))


@dataclass(frozen=True)
class SubmodelSpec:
    """One submodel: the sorted exploratory indices (0-based within beta_u) it keeps."""

    mask: tuple[int, ...]
    d_c: int
    d_u: int

    def __post_init__(self):
        mask = tuple(sorted(int(j) for j in self.mask))
        if len(set(mask)) != len(mask) or any(j < 0 or j >= self.d_u for j in mask):
            raise ConfigError(f"invalid exploratory mask {self.mask} for d_u={self.d_u}")
        object.__setattr__(self, "mask", mask)

    @property
    def d(self) -> int:
        return self.d_c + self.d_u

    @property
    def indices(self) -> np.ndarray:
        """Coordinates of the full beta kept by this submodel."""
        return np.concatenate([np.arange(self.d_c), self.d_c + np.asarray(self.mask, dtype=int)]).astype(int)

    @property
    def is_full(self) -> bool:
        return len(self.mask) == self.d_u

    @property
    def label(self) -> str:
        if not self.mask:
            return "0"
        pos = [str(self.d_c + j + 1) for j in self.mask]
        return "".join(pos) if self.d <= 9 else "-".join(pos)

    @property
    def bits(self) -> str:
        return "".join("1" if j in self.mask else "0" for j in range(self.d_u))

    def pi(self) -> np.ndarray:
        """``pi_s``: rows of I_du for the kept exploratory coordinates."""
        return np.eye(self.d_u)[list(self.mask)].reshape(len(self.mask), self.d_u)

    def pi_bar(self) -> np.ndarray:
        """Complement selector: rows of I_du for the dropped exploratory coordinates."""
        dropped = [j for j in range(self.d_u) if j not in self.mask]
        return np.eye(self.d_u)[dropped].reshape(len(dropped), self.d_u)

    def Pi(self) -> np.ndarray:
        """``Pi_s = diag(I_dc, pi_s)``, shape (d_c + |mask|, d)."""
        return np.eye(self.d)[self.indices].reshape(self.indices.size, self.d)


def parse_label(label: str, d_c: int, d_u: int) -> SubmodelSpec:
    """Inverse of ``SubmodelSpec.label``; also accepts the bitstring form ``"b:101"``."""
    label = label.strip()
    if label.startswith("b:"):
        bits = label[2:]
        if len(bits) != d_u or set(bits) - {"0", "1"}:
            raise ConfigError(f"bitstring label {label!r} does not match d_u={d_u}")
        return SubmodelSpec(tuple(j for j, b in enumerate(bits) if b == "1"), d_c, d_u)
    if label == "0":
        return SubmodelSpec((), d_c, d_u)
    parts = label.split("-") if "-" in label else list(label)
    try:
        pos = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"cannot parse submodel label {label!r}") from exc
    if any(p <= d_c or p > d_c + d_u for p in pos):
        raise ConfigError(f"label {label!r} refers to non-exploratory positions")
    return SubmodelSpec(tuple(p - d_c - 1 for p in pos), d_c, d_u)


def enumerate_submodels(partition: CovariatePartition, subset=None) -> list[SubmodelSpec]:
    """All 2^d_u submodels (by size, then lexicographically) or an explicit subset.

    ``subset`` may hold SubmodelSpec objects or label strings and is returned in
    the given order.
    """
    d_c, d_u = partition.d_c, partition.d_u
    if subset is not None:
        specs = [s if isinstance(s, SubmodelSpec) else parse_label(str(s), d_c, d_u) for s in subset]
        masks = [s.mask for s in specs]
        if len(set(masks)) != len(masks):
            raise ConfigError("duplicate submodels in the requested subset")
        if not specs:
            raise ConfigError("empty submodel subset")
        return specs
    if d_u > MAX_EXPLORATORY:
        raise ConfigError(f"{d_u} exploratory covariates would give 2^{d_u} submodels (limit {MAX_EXPLORATORY})")
    return [SubmodelSpec(mask, d_c, d_u)
            for size in range(d_u + 1)
            for mask in combinations(range(d_u), size)]


def full_model(partition: CovariatePartition) -> SubmodelSpec:
    return SubmodelSpec(tuple(range(partition.d_u)), partition.d_c, partition.d_u)


def project(spec: SubmodelSpec, v) -> np.ndarray:
    """``Pi_s v``."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != spec.d:
        raise ValueError(f"vector of length {v.shape[0]} for d={spec.d}")
    return v[spec.indices]


def embed(spec: SubmodelSpec, w) -> np.ndarray:
    """``Pi_s^T w``: place submodel coefficients in the full vector, zeros elsewhere."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != spec.indices.size:
        raise ValueError(f"vector of length {w.shape[0]} for a submodel with {spec.indices.size} coefficients")
    out = np.zeros(spec.d)
    out[spec.indices] = w
    return out


def complement_projection(spec: SubmodelSpec) -> np.ndarray:
    return spec.pi_bar()
