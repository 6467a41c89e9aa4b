"""Focus parameters: linear combinations of beta, optionally plus smooth-function values.

A focus is ``constant + coef @ beta + sum_a eta_a(x_a)``. Terms involving
the smooth functions are plug-in quantities: only the ``coef`` part drives
the focused criterion.

Text grammar (used by the CLI); terms are separated by ``,`` or by ``+``
directly before a term keyword::

    beta:PGC
    lincomb:0.028*PGC-0.899*DPF+0.5
    eta:BMI@-1.501
    eta:BMI@-1.501+eta:AGE@0.585+lincomb:0.028*PGC-0.899*DPF
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FocusSpec:
    """``coef`` has one entry per linear coefficient (full model order).

    ``eta_terms`` holds ``(smooth covariate index, evaluation point)`` pairs; the
    point is on the covariate's modelling scale, before rescaling to [0, 1].
    """

    coef: np.ndarray
    constant: float = 0.0
    eta_terms: tuple[tuple[int, float], ...] = ()
    name: str = "mu"

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float).ravel())
        object.__setattr__(self, "eta_terms", tuple((int(a), float(x)) for a, x in self.eta_terms))

    @property
    def kind(self) -> str:
        return "general" if self.eta_terms else "linear"

    @classmethod
    def coefficient(cls, j: int, d: int, name: str | None = None) -> FocusSpec:
        coef = np.zeros(d)
        coef[j] = 1.0
        return cls(coef, name=name or f"beta{j + 1}")


def focus_gradient(focus: FocusSpec, full_fit) -> tuple[np.ndarray, float]:
    """(mu_beta, offset) for a focus at the full-model estimate.

    The focus is linear in beta, so ``mu_beta`` is ``coef`` itself. The offset is
    the constant plus the plug-in value of the smooth terms from the full fit.
    """
    if focus.coef.shape[0] != full_fit.beta_hat.shape[0]:
        raise ConfigError(
            f"focus has {focus.coef.shape[0]} coefficients, model has {full_fit.beta_hat.shape[0]}"
        )
    return focus.coef.copy(), focus.constant + eta_offset(focus, full_fit)


def eta_points01(focus: FocusSpec, fit) -> list[tuple[int, float]]:
    specs = fit.expansion.specs
    out = []
    for alpha, x in focus.eta_terms:
        if alpha >= len(specs):
            raise ConfigError(f"focus refers to smooth covariate {alpha}, model has {len(specs)}")
        out.append((alpha, float(specs[alpha].rescale(x, clamp=True))))
    return out


def eta_offset(focus: FocusSpec, fit) -> float:
    """Sum of the fitted centered components of ``fit`` at the focus points."""
    return float(sum(fit.component(a, x01)[()] for a, x01 in eta_points01(focus, fit)))


def focus_estimate(focus: FocusSpec, fit, beta_full) -> float:
    """Focus evaluated with ``beta_full`` (zeros for dropped coefficients) and ``fit``'s components."""
    return float(focus.constant + focus.coef @ beta_full + eta_offset(focus, fit))


_TERM_SPLIT = re.compile(r"\s*(?:,|\+(?=\s*(?:beta|lincomb|eta):))\s*")
_LIN_TERM = re.compile(
    r"\s*([+-])?\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)\s*(?:\*\s*([A-Za-z_][\w.]*))?"
    r"|([A-Za-z_][\w.]*))\s*"
)


def _lincomb_terms(body: str):
    """Yield (sign, number or None, name or None) for ``c1*name1 - c2*name2 + c0``."""
    pos = 0
    first = True
    while pos < len(body):
        m = _LIN_TERM.match(body, pos)
        if not m or m.end() == pos or (not first and m.group(1) is None):
            raise ConfigError(f"cannot parse linear combination {body!r} at position {pos}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        if m.group(4):
            yield sign, None, m.group(4)
        else:
            yield sign, float(m.group(2)), m.group(3)
        pos = m.end()
        first = False


def _parse_number(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse number {text!r} in {where!r}") from exc


def parse_focus(text: str, linear_names, smooth_names=(), name: str | None = None) -> FocusSpec:
    linear_names = list(linear_names)
    smooth_names = list(smooth_names)
    coef = np.zeros(len(linear_names))
    constant = 0.0
    eta_terms = []

    def lin_index(nm):
        if nm not in linear_names:
            raise ConfigError(f"unknown linear covariate {nm!r} in focus {text!r}")
        return linear_names.index(nm)

    terms = [t for t in _TERM_SPLIT.split(text.strip()) if t]
    if not terms:
        raise ConfigError("empty focus")
    for term in terms:
        kind, sep, body = term.partition(":")
        if not sep:
            raise ConfigError(f"focus term {term!r} lacks a 'beta:', 'lincomb:' or 'eta:' prefix")
        body = body.strip()
        if kind == "beta":
            coef[lin_index(body)] += 1.0
        elif kind == "eta":
            nm, at, value = body.partition("@")
            if not at or nm not in smooth_names:
                raise ConfigError(f"bad smooth focus term {term!r}; expected eta:<smooth name>@<value>")
            eta_terms.append((smooth_names.index(nm), _parse_number(value, term)))
        elif kind == "lincomb":
            for sign, number, nm in _lincomb_terms(body):
                if nm:
                    coef[lin_index(nm)] += sign * (number if number is not None else 1.0)
                else:
                    constant += sign * number
        else:
            raise ConfigError(f"unknown focus term kind {kind!r}")
    return FocusSpec(coef, constant, tuple(eta_terms), name or text)
