"""Focused information criterion, smoothed-FIC weights and model-averaged intervals.

Plug-in ingredients come from the full model:

* ``psi_i = Z_i - Gamma(X_i)``: residual of each linear covariate after a
  weighted projection on ``[1 | spline basis]`` (weights ``rho_1(m_i)``).
* ``D = mean_i rho_1(m_i) psi_i psi_i^T``.
* ``Sigma = D (n Cov(beta_full)) D``, so ``D^{-1} Sigma D^{-1}`` is ``n`` times the
  full-model covariance of ``beta``.
* ``delta = sqrt(n) beta_u,full``.

With ``R_s = Pi_s^T (Pi_s D Pi_s^T)^{-1} Pi_s`` and ``A_s = R_s D - I``::

    FIC_s = mu^T [ R_s Sigma R_s + A_s d0 d0^T A_s^T - A_s P Omega P A_s^T ] mu

where ``d0 = (0, delta)``, ``P = diag(0, I_du)`` and ``Omega = D^{-1} Sigma D^{-1}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.stats import norm

from .errors import ConfigError, GaplmError, RankDeficiencyError, SingularityError
from .focus import FocusSpec, eta_points01, focus_estimate, focus_gradient
from .model_space import CovariatePartition, SubmodelSpec, embed, enumerate_submodels, full_model
from .quasi_glm import GaplmFit, irls_fit, kept_basis_columns

logger = logging.getLogger(__name__)

PD_RATIO = 1e-10
SUBMODEL_COND = 1e12


def estimate_psi(full_fit: GaplmFit, Z, weight: str = "rho1") -> np.ndarray:
    """Residuals of Z after weighted least squares on ``[1 | basis]``.

    The weights are ``rho_1(m_i)`` (``weight="rho2"`` uses the Fisher weights
    instead). At the solution the weighted cross-moment of every basis column
    with psi vanishes.
    """
    Z = np.asarray(Z, dtype=float)
    basis = full_fit.expansion
    H = np.hstack([np.ones((basis.n, 1)), basis.columns[:, kept_basis_columns(basis)]])
    w = _weights(full_fit, weight)
    gram = H.T @ (w[:, None] * H)
    try:
        coef = linalg.cho_solve(linalg.cho_factor(gram), H.T @ (w[:, None] * Z))
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError("weighted Gram matrix of the spline projection is singular") from exc
    return Z - H @ coef


def _weights(fit: GaplmFit, weight: str) -> np.ndarray:
    if weight == "rho1":
        return fit.family.rho1(fit.linear_predictor)
    if weight == "rho2":
        return fit.family.rho2(fit.linear_predictor)
    raise ConfigError(f"weight must be 'rho1' or 'rho2', got {weight!r}")


def estimate_D_Sigma(full_fit: GaplmFit, psi_hat, weight: str = "rho1") -> tuple[np.ndarray, np.ndarray]:
    psi_hat = np.asarray(psi_hat, dtype=float)
    n = psi_hat.shape[0]
    w = _weights(full_fit, weight)
    D = (psi_hat * w[:, None]).T @ psi_hat / n
    D = 0.5 * (D + D.T)
    eig = np.linalg.eigvalsh(D)
    if eig[0] < PD_RATIO * eig[-1] or eig[-1] <= 0:
        raise SingularityError(
            f"efficient information D is not positive definite (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g}); "
            "the linear covariates are (nearly) explained by the smooth terms"
        )
    Sigma = D @ (n * full_fit.beta_cov) @ D
    return D, 0.5 * (Sigma + Sigma.T)


@dataclass(frozen=True)
class FicInputs:
    D_hat: np.ndarray
    Sigma_hat: np.ndarray
    delta_hat: np.ndarray
    n: int
    d_c: int
    mu_beta: np.ndarray | None = None
    psi_hat: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.D_hat.shape[0]

    @property
    def d_u(self) -> int:
        return self.d - self.d_c

    @property
    def omega(self) -> np.ndarray:
        """``D^{-1} Sigma D^{-1}``."""
        Dinv = np.linalg.inv(self.D_hat)
        return Dinv @ self.Sigma_hat @ Dinv

    @property
    def delta0(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.d_c), self.delta_hat])

    @property
    def kappa2_hat(self) -> float:
        mu = self._mu()
        return float(mu @ self.omega @ mu)

    def _mu(self) -> np.ndarray:
        if self.mu_beta is None:
            raise ConfigError("FicInputs has no focus gradient; use with_focus()")
        return self.mu_beta

    def with_focus(self, mu_beta) -> FicInputs:
        mu_beta = np.asarray(mu_beta, dtype=float)
        if mu_beta.shape != (self.d,):
            raise ConfigError(f"focus gradient of shape {mu_beta.shape}, expected ({self.d},)")
        return replace(self, mu_beta=mu_beta)


def build_fic_inputs(full_fit: GaplmFit, Z, d_c: int, mu_beta=None, weight: str = "rho1") -> FicInputs:
    psi = estimate_psi(full_fit, Z, weight)
    D, Sigma = estimate_D_Sigma(full_fit, psi, weight)
    n = full_fit.n
    inputs = FicInputs(D, Sigma, math.sqrt(n) * full_fit.beta_hat[d_c:], n, d_c, psi_hat=psi)
    return inputs if mu_beta is None else inputs.with_focus(mu_beta)


def r_matrix(spec: SubmodelSpec, D) -> np.ndarray:
    """``R_s = Pi_s^T (Pi_s D Pi_s^T)^{-1} Pi_s``."""
    idx = spec.indices
    sub = D[np.ix_(idx, idx)]
    if idx.size and np.linalg.cond(sub) > SUBMODEL_COND:
        raise SingularityError(f"submodel {spec.label}: Pi_s D Pi_s^T is numerically singular")
    R = np.zeros_like(D)
    if idx.size:
        R[np.ix_(idx, idx)] = np.linalg.inv(sub)
    return R


def fic_score(spec: SubmodelSpec, inputs: FicInputs) -> float:
    """FIC of one submodel; unbiased for the limiting MSE, so it can be negative."""
    mu = inputs._mu()
    D, Sigma = inputs.D_hat, inputs.Sigma_hat
    R = r_matrix(spec, D)
    A = R @ D - np.eye(inputs.d)
    P = np.diag(np.r_[np.zeros(inputs.d_c), np.ones(inputs.d_u)])
    a_mu = A.T @ mu
    variance = mu @ R @ Sigma @ R @ mu
    bias2 = float(a_mu @ inputs.delta0) ** 2
    bias_correction = a_mu @ P @ inputs.omega @ P @ a_mu
    return float(variance + bias2 - bias_correction)


def ic_scores(fits) -> tuple[np.ndarray, np.ndarray]:
    """AIC and BIC for each fit; ``None`` fits give NaN."""
    aic, bic = [], []
    for f in fits:
        if f is None:
            aic.append(np.nan)
            bic.append(np.nan)
            continue
        dev = -2.0 * f.qloglik
        aic.append(dev + 2.0 * f.n_params)
        bic.append(dev + f.n_params * math.log(f.n))
    return np.asarray(aic), np.asarray(bic)


def sfic_weights(fic_values, kappa2: float) -> np.ndarray:
    """Softmax of ``-FIC_s / kappa2``; NaN (excluded) submodels get weight 0."""
    fic = np.asarray(fic_values, dtype=float)
    if not kappa2 > 0:
        raise ValueError(f"kappa2 must be positive, got {kappa2}")
    ok = np.isfinite(fic)
    if not ok.any():
        raise SingularityError("every submodel was excluded; no weights can be formed")
    logits = np.full(fic.shape, -np.inf)
    logits[ok] = -fic[ok] / kappa2
    logits -= logits[ok].max()
    w = np.where(ok, np.exp(logits), 0.0)
    return w / w.sum()


def degenerate_weights(scores) -> np.ndarray:
    """Indicator of the smallest finite score (first on ties)."""
    scores = np.asarray(scores, dtype=float)
    if not np.isfinite(scores).any():
        raise SingularityError("every submodel was excluded; nothing to select")
    w = np.zeros(scores.shape)
    w[int(np.nanargmin(np.where(np.isfinite(scores), scores, np.nan)))] = 1.0
    return w


def normal_quantile(level: float) -> float:
    if not 0 < level < 1:
        raise ConfigError(f"confidence level must lie in (0, 1), got {level}")
    return float(norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class FmaResult:
    mu_hat: float
    low: float
    up: float
    level: float
    correction_term: float
    method: str = "sfic"
    weights: tuple[float, ...] = ()
    note: str = ""


def fma_estimate(weights, mu_hats, specs, inputs: FicInputs, level: float = 0.95,
                 method: str = "sfic", note: str = "") -> FmaResult:
    """Model-average estimate and its bias-corrected interval.

    ``Q = sum_s w_s R_s D``; the interval is centred at
    ``mu_hat - mu^T (Q - I) d0 / sqrt(n)`` with half-width ``z kappa / sqrt(n)``.
    """
    w = np.asarray(weights, dtype=float)
    mu_hats = np.asarray(mu_hats, dtype=float)
    if w.shape != mu_hats.shape or w.shape[0] != len(specs):
        raise ValueError("weights, estimates and submodels differ in length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
        raise ValueError("weights must be non-negative and sum to one")
    mu = inputs._mu()
    used = w > 0
    mu_hat = float(w[used] @ mu_hats[used])
    Q = np.zeros_like(inputs.D_hat)
    for ws, spec in zip(w, specs):
        if ws > 0:
            Q += ws * r_matrix(spec, inputs.D_hat) @ inputs.D_hat
    d0 = inputs.delta0
    root_n = math.sqrt(inputs.n)
    correction = float(mu @ (Q @ d0 - d0)) / root_n
    half = normal_quantile(level) * math.sqrt(max(inputs.kappa2_hat, 0.0)) / root_n
    centre = mu_hat - correction
    return FmaResult(mu_hat, centre - half, centre + half, level, correction, method,
                     tuple(float(x) for x in w), note)


# ---------------------------------------------------------------------------
# submodel sweep on one dataset


@dataclass(frozen=True)
class SubmodelScore:
    label: str
    bits: str
    n_params: int | None
    qloglik: float | None
    aic: float | None
    bic: float | None
    fic: float | None
    mu_hat: float | None
    weight: float
    error: str | None = None


@dataclass(frozen=True)
class FicReport:
    focus: str
    kappa2: float
    rows: list[SubmodelScore]
    chosen: dict[str, str]

    def row(self, label: str) -> SubmodelScore:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


@dataclass(frozen=True)
class SubmodelSweep:
    """Fits of every requested submodel on one dataset plus the shared FIC inputs."""

    partition: CovariatePartition
    specs: list[SubmodelSpec]
    fits: list[GaplmFit | None]
    errors: list[str | None]
    full_fit: GaplmFit
    inputs: FicInputs
    Z: np.ndarray = field(repr=False)

    def aic_bic(self):
        return ic_scores(self.fits)


def fit_submodels(y, expansion, Z, partition: CovariatePartition, family, specs=None,
                  weight: str = "rho1", covariance: str = "model", full_fit: GaplmFit | None = None,
                  tol: float = 1e-8, max_iter: int = 100, separation: str = "raise") -> SubmodelSweep:
    """Fit the full model and every submodel on the same spline block.

    A submodel whose fit fails is recorded with its error and excluded later;
    failure of the full model propagates.
    """
    Z = np.asarray(Z, dtype=float).reshape(expansion.n, -1)
    if Z.shape[1] != partition.d:
        raise ConfigError(f"Z has {Z.shape[1]} columns, partition declares {partition.d}")
    specs = enumerate_submodels(partition) if specs is None else list(specs)
    full = full_model(partition)
    if full_fit is None:
        full_fit = irls_fit(y, expansion, Z, family, tol=tol, max_iter=max_iter,
                            covariance=covariance, z_names=partition.names, separation=separation)
    fits, errors = [], []
    for spec in specs:
        if spec.mask == full.mask:
            fits.append(full_fit)
            errors.append(None)
            continue
        try:
            fit = irls_fit(y, expansion, Z[:, spec.indices], family, tol=tol, max_iter=max_iter,
                           covariance=covariance, z_names=[partition.names[j] for j in spec.indices],
                           separation=separation)
        except GaplmError as exc:
            logger.warning("submodel %s failed: %s", spec.label, exc)
            fits.append(None)
            errors.append(str(exc))
            continue
        fits.append(fit)
        errors.append(None)
    inputs = build_fic_inputs(full_fit, Z, partition.d_c, weight=weight)
    return SubmodelSweep(partition, specs, fits, errors, full_fit, inputs, Z)


def submodel_estimates(sweep: SubmodelSweep, focus: FocusSpec) -> np.ndarray:
    """Focus estimate of every submodel: its own beta (zeros elsewhere) and smooth fit."""
    out = np.full(len(sweep.specs), np.nan)
    for k, (spec, fit) in enumerate(zip(sweep.specs, sweep.fits)):
        if fit is not None:
            out[k] = focus_estimate(focus, fit, embed(spec, fit.beta_hat))
    return out


def fic_values(sweep: SubmodelSweep, inputs: FicInputs) -> tuple[np.ndarray, list[str | None]]:
    fic = np.full(len(sweep.specs), np.nan)
    errors = list(sweep.errors)
    for k, spec in enumerate(sweep.specs):
        if sweep.fits[k] is None:
            continue
        try:
            fic[k] = fic_score(spec, inputs)
        except SingularityError as exc:
            logger.warning("submodel %s excluded from averaging: %s", spec.label, exc)
            errors[k] = str(exc)
    return fic, errors


WEIGHT_METHODS = ("sfic", "fic", "aic", "bic", "full")


def evaluate_focus(sweep: SubmodelSweep, focus: FocusSpec, level: float = 0.95,
                   method: str = "sfic") -> tuple[FicReport, FmaResult]:
    """Score every submodel for ``focus`` and form the requested estimate and interval.

    ``sfic`` and ``fic`` use the bias-corrected averaging interval. ``aic`` and
    ``bic`` report the naive Wald interval of the selected submodel, and
    ``full`` the Wald interval of the full model.
    """
    if method not in WEIGHT_METHODS:
        raise ConfigError(f"unknown weighting {method!r}; choose from {WEIGHT_METHODS}")
    mu_beta, _ = focus_gradient(focus, sweep.full_fit)
    inputs = sweep.inputs.with_focus(mu_beta)
    kappa2 = inputs.kappa2_hat
    fic, errors = fic_values(sweep, inputs)
    aic, bic = sweep.aic_bic()
    mu_hats = submodel_estimates(sweep, focus)

    if kappa2 > 0:
        sw = sfic_weights(fic, kappa2)
    else:
        # zero focus gradient: every FIC is zero, fall back to the full model
        sw = np.array([1.0 if s.is_full else 0.0 for s in sweep.specs])
    if method == "sfic":
        w = sw
    elif method == "fic":
        w = degenerate_weights(fic)
    elif method == "aic":
        w = degenerate_weights(aic)
    elif method == "bic":
        w = degenerate_weights(bic)
    else:
        w = np.array([1.0 if s.is_full else 0.0 for s in sweep.specs])
        if w.sum() == 0:
            raise ConfigError("the full model is not among the requested submodels")

    rows = []
    for k, spec in enumerate(sweep.specs):
        fit = sweep.fits[k]
        rows.append(SubmodelScore(
            label=spec.label, bits=spec.bits,
            n_params=None if fit is None else fit.n_params,
            qloglik=None if fit is None else fit.qloglik,
            aic=_opt(aic[k]), bic=_opt(bic[k]), fic=_opt(fic[k]), mu_hat=_opt(mu_hats[k]),
            weight=float(w[k]), error=errors[k],
        ))
    chosen = {}
    for crit, vals in (("AIC", aic), ("BIC", bic), ("FIC", fic)):
        if np.isfinite(vals).any():
            chosen[crit] = sweep.specs[int(np.nanargmin(np.where(np.isfinite(vals), vals, np.nan)))].label
    report = FicReport(focus.name, kappa2, rows, chosen)

    note = "plug-in: coverage not guaranteed" if focus.kind == "general" else ""
    if method in ("aic", "bic", "full"):
        # Wald interval of a single fit; for foci linear in beta and the full
        # model this coincides with the averaging interval (kappa^2 / n = c^T Cov c)
        k = int(np.argmax(w))
        fit, spec = sweep.fits[k], sweep.specs[k]
        se = fit.linear_form_se(focus.coef[spec.indices], eta_points01(focus, fit))
        half = normal_quantile(level) * se
        label = "full-model Wald interval" if method == "full" else \
            "naive Wald interval of the selected submodel"
        result = FmaResult(float(mu_hats[k]), float(mu_hats[k]) - half, float(mu_hats[k]) + half,
                           level, 0.0, method, tuple(float(x) for x in w), label)
    else:
        ok = w > 0
        result = fma_estimate(w[ok], mu_hats[ok], [s for s, o in zip(sweep.specs, ok) if o],
                              inputs, level, method, note)
        result = replace(result, weights=tuple(float(x) for x in w))
    return report, result


def _opt(x) -> float | None:
    return float(x) if np.isfinite(x) else None
