"""Number of interior knots by BIC under the full model.

Candidates are the integers in ``[2/3 N_r, 4/3 N_r]`` with
``N_r = ceil(n ** (1/5.5))``; the ``over`` and ``under`` modes replace the
exponent by 1/3 and 1/10. Endpoints are rounded inward.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GaplmError
from .quasi_glm import irls_fit
from .spline_basis import SplineSpec, expand_design

logger = logging.getLogger(__name__)

KNOT_EXPONENTS = {"auto": 1 / 5.5, "over": 1 / 3, "under": 1 / 10}


def reference_count(n: int, mode: str = "auto") -> int:
    if mode not in KNOT_EXPONENTS:
        raise ConfigError(f"knot mode must be one of {sorted(KNOT_EXPONENTS)}, got {mode!r}")
    # guard against n ** (1/3) landing a hair above an exact integer
    return math.ceil(n ** KNOT_EXPONENTS[mode] - 1e-12)


def candidate_counts(n: int, mode: str = "auto") -> list[int]:
    nr = reference_count(n, mode)
    lo = max(math.ceil(2 * nr / 3 - 1e-12), 0)
    hi = math.floor(4 * nr / 3 + 1e-12)
    return list(range(lo, hi + 1))


@dataclass(frozen=True)
class KnotSearch:
    n: int
    mode: str
    reference: int
    candidates: list[int]
    bic_trace: list[float | None]
    chosen: int
    errors: dict[int, str] = field(default_factory=dict)


def select_knots(y, X01, Z, family, degree: int = 3, mode: str = "auto",
                 domains=None, names=None, separation: str = "raise") -> KnotSearch:
    """Fit the full model for each candidate knot count and keep the BIC minimizer.

    The same count is used for every smooth covariate. ``X01`` holds the smooth
    covariates already mapped to [0, 1]; ``domains`` (original ranges) are only
    carried into the specs. Ties go to the smaller count; failed candidates
    (including separated fits unless ``separation="warn"``) are skipped.
    """
    X01 = np.asarray(X01, dtype=float)
    if X01.ndim == 1:
        X01 = X01[:, None]
    n, p = X01.shape
    domains = domains or [(0.0, 1.0)] * p
    cands = candidate_counts(n, mode)
    trace, errors = [], {}
    for J in cands:
        specs = [SplineSpec(degree, J, tuple(dom)) for dom in domains]
        try:
            fit = irls_fit(y, expand_design(X01, specs, names), Z, family, separation=separation)
        except GaplmError as exc:
            logger.warning("knot count %d failed: %s", J, exc)
            errors[J] = str(exc)
            trace.append(None)
            continue
        trace.append(-2.0 * fit.qloglik + fit.n_params * math.log(n))
    finite = [(b, J) for b, J in zip(trace, cands) if b is not None]
    if not finite:
        raise GaplmError(f"every candidate knot count {cands} failed to fit")
    chosen = min(finite)[1]
    return KnotSearch(n, mode, reference_count(n, mode), cands, trace, chosen, errors)


def parse_knots(value: str) -> tuple[str, int | None]:
    """``--knots`` value -> (mode, fixed count): auto | auto-over | auto-under | <int>."""
    value = str(value).strip()
    if value in ("auto", "auto-over", "auto-under"):
        return ("auto" if value == "auto" else value.split("-")[1]), None
    try:
        J = int(value)
    except ValueError as exc:
        raise ConfigError(f"--knots must be auto, auto-over, auto-under or an integer, got {value!r}") from exc
    if J < 0:
        raise ConfigError("--knots must be non-negative")
    return "fixed", J
