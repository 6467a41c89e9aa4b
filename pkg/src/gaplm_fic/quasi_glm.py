"""Quasi-likelihood IRLS fit of a generalized additive partial linear model.

The working design is ``[1 | spline basis | Z_s]``. Because every per-covariate
B-spline block sums to one, the first column of each block is dropped (its
coefficient is pinned at zero) so that the design has full column rank;
this is a reparametrization and leaves fitted values unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DataError, NonConvergenceError, RankDeficiencyError
from .families import QuasiFamily, get_family
from .spline_basis import BasisExpansion, center_component

logger = logging.getLogger(__name__)

MAX_HALVINGS = 30
# consecutive iterations with a flat objective but a non-vanishing step that signal divergence
STALL_ITERATIONS = 5
# logit predictors beyond this give fitted probabilities within 10 eps of 0 or 1
SATURATED_PREDICTOR = float(-np.log(10 * np.finfo(float).eps))


def kept_basis_columns(expansion: BasisExpansion) -> np.ndarray:
    """Indices of the basis columns that enter the working design."""
    keep = []
    for blk in expansion.blocks:
        keep.extend(range(blk.start + 1, blk.stop))
    return np.asarray(keep, dtype=int)


def working_design(expansion: BasisExpansion, Z_s, z_names=None) -> tuple[np.ndarray, list[str]]:
    n = expansion.n
    Z_s = np.asarray(Z_s, dtype=float).reshape(n, -1)
    keep = kept_basis_columns(expansion)
    X = np.hstack([np.ones((n, 1)), expansion.columns[:, keep], Z_s])
    names = ["intercept"]
    for a, blk in enumerate(expansion.blocks):
        names.extend(f"s({expansion.names[a]})[{j}]" for j in range(1, blk.stop - blk.start))
    names.extend(z_names if z_names is not None else (f"z{j + 1}" for j in range(Z_s.shape[1])))
    return X, names


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    scale = np.sqrt(np.sum(X**2, axis=0))
    if np.any(scale == 0):
        j = int(np.argmax(scale == 0))
        raise RankDeficiencyError(f"column {names[j]!r} is identically zero", names[j])
    r = np.linalg.qr(X / scale, mode="r")
    diag = np.abs(np.diag(r))
    bad = np.flatnonzero(diag < 1e-10 * diag.max())
    if bad.size:
        j = int(bad[0])
        raise RankDeficiencyError(
            f"working design is rank deficient; column {names[j]!r} is collinear with earlier columns",
            names[j],
        )


def _inverse_information(fisher: np.ndarray) -> np.ndarray:
    # equilibrate first: a coefficient sitting in a separated region has a tiny diagonal
    s = 1.0 / np.sqrt(np.diag(fisher))
    try:
        inv = linalg.cho_solve(linalg.cho_factor(fisher * np.outer(s, s)), np.eye(fisher.shape[0]))
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError("Fisher information is singular at the solution") from exc
    return inv * np.outer(s, s)


@dataclass(frozen=True)
class GaplmFit:
    """Converged quasi-likelihood fit of one submodel.

    ``gamma_hat`` has one entry per basis column (the pinned first column of each
    block is zero); ``fisher`` and ``param_cov`` are expressed in working-design
    coordinates ``[intercept | kept spline columns | beta]``.
    """

    family: QuasiFamily
    expansion: BasisExpansion
    intercept: float
    gamma_hat: np.ndarray
    beta_hat: np.ndarray
    linear_predictor: np.ndarray
    qloglik: float
    fisher: np.ndarray
    param_cov: np.ndarray
    beta_cov: np.ndarray
    iterations: int
    converged: bool
    column_names: tuple[str, ...] = field(default=())
    covariance: str = "model"
    saturated: bool = False
    dispersion: float = 1.0

    @property
    def n(self) -> int:
        return self.linear_predictor.shape[0]

    @property
    def n_params(self) -> int:
        """Number of free coefficients (intercept + identifiable spline + linear)."""
        return self.fisher.shape[0]

    @property
    def n_spline(self) -> int:
        return self.n_params - 1 - self.beta_hat.shape[0]

    def gamma_block(self, alpha: int) -> np.ndarray:
        return self.gamma_hat[self.expansion.blocks[alpha]]

    def component(self, alpha: int, x01=None) -> np.ndarray:
        """Centered estimate of the ``alpha``-th additive function."""
        return center_component(self.gamma_block(alpha), self.expansion, alpha, x01)

    @property
    def centered_intercept(self) -> float:
        """Intercept once every component is centered to mean zero."""
        return float(self.intercept + self.expansion.column_means @ self.gamma_hat)

    def component_contrast(self, alpha: int, x01) -> np.ndarray:
        """Gradient of the centered component at ``x01`` w.r.t. working coefficients."""
        grad = np.zeros(self.n_params)
        blk = self.expansion.blocks[alpha]
        raw = self.expansion.evaluate(alpha, float(x01)) - self.expansion.column_means[blk]
        start = 1 + sum(b.stop - b.start - 1 for b in self.expansion.blocks[:alpha])
        grad[start:start + blk.stop - blk.start - 1] = raw[1:]
        return grad

    def linear_form_se(self, beta_coef, eta_points=()) -> float:
        """Standard error of ``beta_coef @ beta + sum eta_a(x_a)`` (centered components)."""
        grad = np.zeros(self.n_params)
        grad[1 + self.n_spline:] = np.asarray(beta_coef, dtype=float)
        for alpha, x01 in eta_points:
            grad += self.component_contrast(alpha, x01)
        return float(np.sqrt(max(grad @ self.param_cov @ grad, 0.0)))

    def predict_linear(self, x01_new, z_new) -> np.ndarray:
        """Linear predictor at new points (smooth covariates already on [0, 1])."""
        x01_new = np.atleast_2d(np.asarray(x01_new, dtype=float))
        z_new = np.atleast_2d(np.asarray(z_new, dtype=float))
        p = self.expansion.p
        if p == 0:
            x01_new = x01_new.reshape(z_new.shape[0], 0)
        if x01_new.shape[1] != p:
            raise ValueError(f"expected {p} smooth covariates, got {x01_new.shape[1]}")
        if z_new.shape[1] != self.beta_hat.shape[0]:
            raise ValueError(f"expected {self.beta_hat.shape[0]} linear covariates, got {z_new.shape[1]}")
        if x01_new.shape[0] != z_new.shape[0]:
            raise ValueError("x_new and z_new have different numbers of rows")
        m = self.centered_intercept + z_new @ self.beta_hat
        for a in range(p):
            m = m + self.component(a, x01_new[:, a])
        return m

    def predict_response(self, x01_new, z_new) -> np.ndarray:
        return self.family.inverse_link(self.predict_linear(x01_new, z_new))


def irls_fit(
    y,
    basis: BasisExpansion,
    Z_s,
    family="bernoulli-logit",
    tol: float = 1e-8,
    max_iter: int = 100,
    covariance: str = "model",
    z_names=None,
    separation: str = "raise",
) -> GaplmFit:
    """Maximize the quasi-likelihood over (intercept, gamma, beta_s) by IRLS.

    Fisher scoring with step halving; a step is accepted only if it does not
    decrease the quasi-log-likelihood. Convergence requires a small score
    (max-norm below ``tol * (1 + |qloglik|)``) together with either a small
    Newton step or a stalled objective. The second case, like fitted
    probabilities within ``10 eps`` of 0 or 1 under the logit link, signals
    quasi-separation confined to a few coefficients. With ``separation="raise"`` (default)
    that case is an error; with ``"warn"`` the boundary fit is returned with
    ``saturated=True`` and a logged warning. Fits that never settle raise.

    ``covariance="sandwich"`` replaces the inverse Fisher information with the
    robust ``F^{-1} (sum q_1^2 x x^T) F^{-1}`` form.
    """
    family = get_family(family)
    if separation not in ("raise", "warn"):
        raise ValueError(f"separation must be 'raise' or 'warn', got {separation!r}")
    y = family.validate_response(y)
    X, names = working_design(basis, Z_s, z_names)
    n, k = X.shape
    if y.shape[0] != n:
        raise DataError(f"response has {y.shape[0]} rows, design has {n}")
    if n <= k:
        raise DataError(f"need more observations ({n}) than coefficients ({k})")
    _check_rank(X, names)
    if family.name == "bernoulli-logit" and np.all(y == y[0]):
        raise NonConvergenceError("all responses are equal; the maximum is at infinity (separation)")

    theta = np.zeros(k)
    theta[0] = family.start_predictor(y)
    m = X @ theta
    ql = float(np.sum(family.quasi_loglik(m, y)))
    converged = False
    saturated = False
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        score = X.T @ family.q1(m, y)
        w = family.rho2(m)
        fisher = X.T @ (w[:, None] * X)
        try:
            step = linalg.cho_solve(linalg.cho_factor(fisher), score)
        except linalg.LinAlgError:
            step = np.linalg.lstsq(fisher, score, rcond=None)[0]

        small_score = np.max(np.abs(score)) < tol * (1.0 + abs(ql))
        if small_score and np.max(np.abs(step)) < np.sqrt(tol) * (1.0 + np.max(np.abs(theta))):
            converged = True
            break

        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + t * step
            m_cand = X @ cand
            ql_cand = float(np.sum(family.quasi_loglik(m_cand, y)))
            if np.isfinite(ql_cand) and ql_cand >= ql - 1e-12 * (1.0 + abs(ql)):
                break
            t *= 0.5
        else:
            if small_score:
                converged = True
                break
            raise NonConvergenceError(f"step halving exhausted at iteration {it}")

        rel_change = abs(ql_cand - ql) / (1.0 + abs(ql))
        theta, m, ql = cand, m_cand, ql_cand
        if rel_change < 1e-10:
            if np.max(np.abs(t * step)) < np.sqrt(tol) * (1.0 + np.max(np.abs(theta))):
                converged = True
                break
            score = X.T @ family.q1(m, y)
            stalled = stalled + 1 if np.max(np.abs(score)) < tol * (1.0 + abs(ql)) else 0
            if stalled >= STALL_ITERATIONS:
                # objective has converged while some coefficients drift to infinity
                converged = saturated = True
                j = int(np.argmax(np.abs(step)))
                break
        else:
            stalled = 0

    if not converged:
        raise NonConvergenceError(f"IRLS did not converge in {max_iter} iterations")
    if not saturated and family.name == "bernoulli-logit" and np.max(np.abs(m)) > SATURATED_PREDICTOR:
        saturated = True
        msg = "quasi-separation: fitted probabilities numerically 0 or 1"
    elif saturated:
        msg = f"quasi-separation: coefficient of {names[j]!r} diverges while the fit stalls"
    if saturated:
        if separation == "raise":
            raise NonConvergenceError(msg)
        logger.warning("%s; returning the boundary fit", msg)

    w = family.rho2(m)
    fisher = X.T @ (w[:, None] * X)
    fisher = 0.5 * (fisher + fisher.T)
    param_cov = _inverse_information(fisher)
    dispersion = 1.0
    if family.name == "gaussian-identity":
        # Pearson estimate; binary and count responses keep their nominal dispersion of 1
        dispersion = float(np.sum((y - m) ** 2) / (n - k))
    if covariance == "sandwich":
        q = family.q1(m, y)
        meat = X.T @ ((q**2)[:, None] * X)
        param_cov = param_cov @ meat @ param_cov
    elif covariance == "model":
        param_cov = dispersion * param_cov
    else:
        raise ValueError(f"covariance must be 'model' or 'sandwich', got {covariance!r}")
    param_cov = 0.5 * (param_cov + param_cov.T)

    keep = kept_basis_columns(basis)
    gamma = np.zeros(basis.columns.shape[1])
    gamma[keep] = theta[1:1 + keep.size]
    return GaplmFit(
        family=family,
        expansion=basis,
        intercept=float(theta[0]),
        gamma_hat=gamma,
        beta_hat=theta[1 + keep.size:].copy(),
        linear_predictor=m,
        qloglik=ql,
        fisher=fisher,
        param_cov=param_cov,
        beta_cov=param_cov[1 + keep.size:, 1 + keep.size:].copy(),
        iterations=it,
        converged=True,
        saturated=saturated,
        dispersion=dispersion,
        column_names=tuple(names),
        covariance=covariance,
    )
