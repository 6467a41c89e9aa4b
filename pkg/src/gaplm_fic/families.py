"""Quasi-likelihood families: link, variance and the derived rho weights.

For a linear predictor ``m`` with mean ``mu = g^{-1}(m)``::

    rho_l(m) = (d mu / dm) ** l / V(mu),      l = 1, 2
    q_1(m, y) = (y - mu) * rho_1(m)

``q_1`` is the derivative of the quasi-likelihood with respect to ``m``;
``rho_2`` is the Fisher-scoring working weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DataError

# Bernoulli probabilities used inside the working weights are kept this far from 0/1.
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class QuasiFamily:
    name: str

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ConfigError(f"unknown family {self.name!r}; choose from {sorted(FAMILIES)}")

    def inverse_link(self, m):
        m = np.asarray(m, dtype=float)
        if self.name == "bernoulli-logit":
            return expit(m)
        if self.name == "poisson-log":
            return np.exp(m)
        return m

    def link(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.name == "bernoulli-logit":
            return np.log(mu) - np.log1p(-mu)
        if self.name == "poisson-log":
            return np.log(mu)
        return mu

    def variance(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.name == "bernoulli-logit":
            return mu * (1.0 - mu)
        if self.name == "poisson-log":
            return mu
        return np.ones_like(mu)

    def rho1(self, m):
        # canonical links: d mu/dm equals V(mu), so rho_1 is identically 1
        return np.ones_like(np.asarray(m, dtype=float))

    def rho2(self, m):
        m = np.asarray(m, dtype=float)
        if self.name == "bernoulli-logit":
            # expit(m) * expit(-m) stays accurate in both tails
            w = expit(m) * expit(-m)
            return np.maximum(w, PROB_CLAMP * (1.0 - PROB_CLAMP))
        if self.name == "poisson-log":
            return np.exp(m)
        return np.ones_like(m)

    def q1(self, m, y):
        return (np.asarray(y, dtype=float) - self.inverse_link(m)) * self.rho1(m)

    def quasi_loglik(self, m, y) -> np.ndarray:
        """Per-observation quasi-likelihood Q(g^{-1}(m), y), up to a y-only constant."""
        m = np.asarray(m, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.name == "bernoulli-logit":
            return y * m - np.logaddexp(0.0, m)
        if self.name == "poisson-log":
            return y * m - np.exp(m)
        return -0.5 * (y - m) ** 2

    def start_predictor(self, y) -> float:
        """Linear predictor of the intercept-only fit, used to start IRLS."""
        ybar = float(np.mean(y))
        if self.name == "bernoulli-logit":
            ybar = min(max(ybar, 0.01), 0.99)
        elif self.name == "poisson-log":
            ybar = max(ybar, 0.1)
        return float(self.link(ybar))

    def validate_response(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim != 1:
            raise DataError("response must be one-dimensional")
        if not np.all(np.isfinite(y)):
            raise DataError(f"non-finite response at row {int(np.argmax(~np.isfinite(y)))}")
        if self.name == "bernoulli-logit" and not np.all((y == 0) | (y == 1)):
            raise DataError("bernoulli-logit response must be coded 0/1")
        if self.name == "poisson-log" and (np.any(y < 0) or np.any(y != np.round(y))):
            raise DataError("poisson-log response must be non-negative integers")
        return y


FAMILIES = ("bernoulli-logit", "gaussian-identity", "poisson-log")


def get_family(family) -> QuasiFamily:
    return family if isinstance(family, QuasiFamily) else QuasiFamily(str(family))


def rho_eval(family, m, order: int):
    """rho_1 or rho_2 of ``family`` at linear predictor ``m``."""
    family = get_family(family)
    if order == 1:
        out = family.rho1(m)
    elif order == 2:
        out = family.rho2(m)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return float(out) if np.ndim(m) == 0 else out
