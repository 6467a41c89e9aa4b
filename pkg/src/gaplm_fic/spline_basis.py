"""Clamped, equally spaced B-spline bases on [0, 1].

The nonparametric part of the model is represented with the raw B-spline
basis of each smooth covariate. Identifiability of the additive
components is restored after fitting by empirical centering: every fitted
component has mean zero over the training sample, and the level is carried
by an explicit intercept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError

logger = logging.getLogger(__name__)


def make_knots(degree: int, interior: int) -> np.ndarray:
    """Clamped knot vector with ``interior`` equally spaced interior knots.

    The vector has ``interior + 2 * (degree + 1)`` entries; the first and last
    ``degree + 1`` knots coincide with 0 and 1 and the interior knots are
    spaced ``h = 1 / (interior + 1)`` apart.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    if interior < 0:
        raise ValueError(f"interior knot count must be >= 0, got {interior}")
    inner = np.arange(1, interior + 1, dtype=float) / (interior + 1)
    return np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])


@dataclass(frozen=True)
class SplineSpec:
    """Degree, interior knot count and original covariate range of one smooth term.

    ``domain`` is the (min, max) pair used to map raw covariate values onto
    [0, 1] before the basis is evaluated.
    """

    degree: int = 3
    interior_knots: int = 0
    domain: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.interior_knots < 0:
            raise ValueError(f"interior_knots must be >= 0, got {self.interior_knots}")
        lo, hi = self.domain
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise ValueError(f"invalid domain {self.domain}")

    @property
    def knots(self) -> np.ndarray:
        return make_knots(self.degree, self.interior_knots)

    @property
    def n_basis(self) -> int:
        return self.interior_knots + self.degree + 1

    def rescale(self, x, clamp: bool = False) -> np.ndarray:
        """Map raw values onto [0, 1] using ``domain``.

        With ``clamp=True`` values falling outside the domain are clipped and a
        warning is logged; otherwise they are returned as is and the basis
        evaluation will reject them.
        """
        lo, hi = self.domain
        u = (np.asarray(x, dtype=float) - lo) / (hi - lo)
        if clamp:
            # tiny overshoot from floating point is not worth a warning
            outside = (u < -1e-12) | (u > 1 + 1e-12)
            if np.any(outside):
                logger.warning(
                    "%d point(s) outside the training range %s clamped to the boundary",
                    int(np.sum(outside)), self.domain,
                )
            u = np.clip(u, 0.0, 1.0)
        return u

    @classmethod
    def from_sample(cls, x, degree: int = 3, interior_knots: int = 0) -> SplineSpec:
        x = np.asarray(x, dtype=float)
        return cls(degree, interior_knots, (float(np.min(x)), float(np.max(x))))


def eval_basis(x, spec: SplineSpec) -> np.ndarray:
    """Evaluate all ``J + degree + 1`` B-splines at ``x`` (already on [0, 1]).

    Uses the triangular Cox-de Boor recursion on the knot span containing each
    point; the right endpoint belongs to the last span. A scalar ``x`` gives a
    vector, an array gives a ``(len(x), n_basis)`` matrix.
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("basis evaluation point is not finite")
    if np.any((x < 0.0) | (x > 1.0)):
        bad = x[(x < 0.0) | (x > 1.0)][0]
        raise DomainError(f"basis evaluation point {bad!r} outside [0, 1]; rescale first")

    p = spec.degree
    t = spec.knots
    last_span = p + spec.interior_knots
    span = np.clip(np.searchsorted(t, x, side="right") - 1, p, last_span)

    m = x.size
    vals = np.zeros((m, p + 1))
    vals[:, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        saved = np.zeros(m)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    out = np.zeros((m, spec.n_basis))
    rows = np.arange(m)[:, None]
    cols = span[:, None] - p + np.arange(p + 1)[None, :]
    out[rows, cols] = vals
    return out[0] if scalar else out


@dataclass(frozen=True)
class BasisExpansion:
    """Evaluated B-spline columns for all smooth covariates of a sample.

    ``columns`` stacks the per-covariate blocks side by side; ``blocks[a]`` is
    the column slice belonging to covariate ``a``. ``column_means`` are the
    training-sample means used to center fitted components.
    """

    columns: np.ndarray
    column_means: np.ndarray
    blocks: tuple[slice, ...]
    specs: tuple[SplineSpec, ...]
    names: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def p(self) -> int:
        return len(self.specs)

    def block(self, alpha: int) -> np.ndarray:
        return self.columns[:, self.blocks[alpha]]

    def evaluate(self, alpha: int, x01) -> np.ndarray:
        """Raw basis of covariate ``alpha`` at new points on [0, 1]."""
        return eval_basis(x01, self.specs[alpha])


def expand_design(X01, specs, names=None) -> BasisExpansion:
    """Build the spline design block from covariates already rescaled to [0, 1].

    ``specs`` is one SplineSpec per column of ``X01`` (a single spec is
    broadcast to every column).
    """
    X01 = np.asarray(X01, dtype=float)
    if X01.ndim == 1:
        X01 = X01[:, None]
    n, p = X01.shape
    if isinstance(specs, SplineSpec):
        specs = (specs,) * p
    specs = tuple(specs)
    if len(specs) != p:
        raise ValueError(f"{len(specs)} spline specs for {p} smooth covariates")
    bad = np.argwhere(~np.isfinite(X01))
    if bad.size:
        i, j = bad[0]
        raise DataError(f"non-finite smooth covariate value at row {i}, column {j}")

    pieces, blocks, start = [], [], 0
    for a in range(p):
        pieces.append(eval_basis(X01[:, a], specs[a]))
        blocks.append(slice(start, start + specs[a].n_basis))
        start += specs[a].n_basis
    columns = np.hstack(pieces) if pieces else np.zeros((n, 0))
    names = tuple(names) if names is not None else tuple(f"x{a + 1}" for a in range(p))
    return BasisExpansion(
        columns=columns,
        column_means=columns.mean(axis=0),
        blocks=tuple(blocks),
        specs=specs,
        names=names,
    )


def center_component(gamma_block, expansion: BasisExpansion, alpha: int, x01=None) -> np.ndarray:
    """Centered fitted component for covariate ``alpha``.

    Returns ``B(x) @ gamma - mean_i B(X_i) @ gamma`` at the training points, or
    at ``x01`` when given. Over the training sample the result averages to 0.
    """
    gamma_block = np.asarray(gamma_block, dtype=float)
    offset = expansion.column_means[expansion.blocks[alpha]] @ gamma_block
    if x01 is None:
        raw = expansion.block(alpha) @ gamma_block
    else:
        raw = expansion.evaluate(alpha, x01) @ gamma_block
    return raw - offset
