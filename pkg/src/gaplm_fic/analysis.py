"""End-to-end analysis of one dataset: knots, full fit, FIC sweep, averaging, LOOCV.

Reports are plain dataclasses; ``report_to_json`` / ``report_from_json``
round-trip them through pydantic's dataclass support.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import TypeAdapter
from scipy.stats import norm

from .data import Dataset, DatasetConfig, load_csv
from .errors import ConfigError, GaplmError
from .fic import (FicReport, FmaResult, WEIGHT_METHODS, degenerate_weights, evaluate_focus,
                  fic_values, fit_submodels, sfic_weights)
from .focus import FocusSpec, parse_focus
from .knot_select import KnotSearch, parse_knots, select_knots
from .model_space import enumerate_submodels
from .spline_basis import SplineSpec, expand_design

logger = logging.getLogger(__name__)

CURVE_POINTS = 101
LOOCV_METHODS = ("AIC", "BIC", "FIC", "S-FIC")


@dataclass(frozen=True)
class AnalysisOptions:
    degree: int = 3
    knots: str = "auto"
    level: float = 0.95
    weights: str = "sfic"
    d_weight: str = "rho1"
    covariance: str = "model"
    submodels: tuple[str, ...] | None = None
    separation: str = "raise"
    loocv: bool = False
    loocv_mode: str = "average"

    def __post_init__(self):
        if self.weights not in WEIGHT_METHODS:
            raise ConfigError(f"--weights must be one of {WEIGHT_METHODS}, got {self.weights!r}")
        if self.loocv_mode not in ("average", "select"):
            raise ConfigError(f"loocv mode must be 'average' or 'select', got {self.loocv_mode!r}")
        parse_knots(self.knots)


@dataclass(frozen=True)
class CoefficientRow:
    name: str
    estimate: float
    se: float
    z: float
    p_value: float


@dataclass(frozen=True)
class Curve:
    name: str
    grid: list[float]
    grid01: list[float]
    estimate: list[float]
    se: list[float]


@dataclass(frozen=True)
class FocusResult:
    focus: str
    kind: str
    report: FicReport
    estimate: FmaResult


@dataclass(frozen=True)
class LoocvResult:
    ratios: dict[str, float]
    n: int
    fold_failures: dict[str, int]
    knots: int
    mode: str


@dataclass(frozen=True)
class AnalysisReport:
    data_path: str
    response: str
    family: str
    n: int
    n_dropped: int
    scaling: dict[str, tuple[float, float]]
    knots: KnotSearch
    coefficients: list[CoefficientRow]
    foci: list[FocusResult] = field(default_factory=list)
    curves: list[Curve] = field(default_factory=list)
    loocv: LoocvResult | None = None
    notes: list[str] = field(default_factory=list)


_REPORT = TypeAdapter(AnalysisReport)


def report_to_json(report: AnalysisReport) -> str:
    return _REPORT.dump_json(report, indent=2).decode()


def report_from_json(text: str) -> AnalysisReport:
    return _REPORT.validate_json(text)


def choose_knots(data: Dataset, options: AnalysisOptions) -> KnotSearch:
    mode, fixed = parse_knots(options.knots)
    if fixed is not None:
        return KnotSearch(data.n, "fixed", fixed, [fixed], [None], fixed)
    if data.X01.shape[1] == 0:
        return KnotSearch(data.n, mode, 0, [0], [None], 0)
    return select_knots(data.y, data.X01, data.Z, data.config.family, options.degree, mode,
                        data.domains, list(data.config.smooth), separation=options.separation)


def build_expansion(data: Dataset, degree: int, J: int, rows=None):
    specs = [SplineSpec(degree, J, dom) for dom in data.domains]
    X01 = data.X01 if rows is None else data.X01[rows]
    return expand_design(X01, specs, list(data.config.smooth))


def coefficient_table(fit, names) -> list[CoefficientRow]:
    se = np.sqrt(np.diag(fit.beta_cov))
    z = fit.beta_hat / se
    p = 2.0 * norm.sf(np.abs(z))
    return [CoefficientRow(nm, float(b), float(s), float(t), float(q))
            for nm, b, s, t, q in zip(names, fit.beta_hat, se, z, p)]


def component_curves(fit, data: Dataset, points: int = CURVE_POINTS) -> list[Curve]:
    grid01 = np.linspace(0.0, 1.0, points)
    curves = []
    for a, name in enumerate(data.config.smooth):
        lo, hi = data.domains[a]
        est = fit.component(a, grid01)
        se = [float(np.sqrt(max(g @ fit.param_cov @ g, 0.0)))
              for g in (fit.component_contrast(a, x) for x in grid01)]
        curves.append(Curve(name, [float(lo + (hi - lo) * x) for x in grid01],
                            [float(x) for x in grid01], [float(v) for v in est], se))
    return curves


def parse_foci(texts, config: DatasetConfig) -> list[FocusSpec]:
    linear = config.linear_certain + config.linear_exploratory
    return [parse_focus(t, linear, config.smooth, name=t) for t in texts]


def analyze(config: DatasetConfig, foci=(), options: AnalysisOptions = AnalysisOptions(),
            data: Dataset | None = None) -> AnalysisReport:
    """Knot search, full fit, coefficient table, per-focus FIC sweep and averaging.

    A focus that cannot be evaluated is reported in ``notes`` and skipped.
    """
    data = load_csv(config) if data is None else data
    focus_specs = parse_foci(foci, config)
    search = choose_knots(data, options)
    expansion = build_expansion(data, options.degree, search.chosen)
    partition = config.partition
    specs = enumerate_submodels(partition, options.submodels)
    sweep = fit_submodels(data.y, expansion, data.Z, partition, config.family, specs,
                          weight=options.d_weight, covariance=options.covariance,
                          separation=options.separation)
    notes = []
    if data.n_dropped:
        notes.append(f"{data.n_dropped} rows dropped as missing")
    for spec, err in zip(sweep.specs, sweep.errors):
        if err:
            notes.append(f"submodel {spec.label} failed: {err}")
    results = []
    for text, focus in zip(foci, focus_specs):
        try:
            report, est = evaluate_focus(sweep, focus, options.level, options.weights)
        except GaplmError as exc:
            notes.append(f"focus {text!r} failed: {exc}")
            continue
        results.append(FocusResult(text, focus.kind, report, est))
    loo = loocv(data, options, search.chosen) if options.loocv else None
    return AnalysisReport(
        data_path=str(config.path), response=config.response, family=config.family,
        n=data.n, n_dropped=data.n_dropped, scaling=dict(data.scaling), knots=search,
        coefficients=coefficient_table(sweep.full_fit, partition.names),
        foci=results, curves=component_curves(sweep.full_fit, data), loocv=loo, notes=notes,
    )


def loocv(data: Dataset, options: AnalysisOptions, knots: int,
          methods=LOOCV_METHODS) -> LoocvResult:
    """Leave-one-out misclassification ratio per selection or averaging method.

    Every fold refits all submodels on the remaining rows with the knot count
    chosen on the full data. The FIC focus of a fold is the left-out subject's
    linear predictor, so its gradient in ``beta`` is that subject's ``z``.
    Under ``mode="average"`` S-FIC averages the submodel linear predictors with
    its weights; under ``"select"`` it uses the highest-weight submodel. A fold
    that cannot be fitted counts as a misclassification for every method.
    """
    family = data.config.family
    if family != "bernoulli-logit":
        raise ConfigError("LOOCV misclassification needs a binary response (bernoulli-logit)")
    unknown = set(methods) - set(LOOCV_METHODS)
    if unknown:
        raise ConfigError(f"unknown LOOCV methods {sorted(unknown)}")
    partition = data.config.partition
    specs = enumerate_submodels(partition, options.submodels)
    n = data.n
    wrong = dict.fromkeys(methods, 0)
    failures = dict.fromkeys(methods, 0)
    for i in range(n):
        train = np.delete(np.arange(n), i)
        try:
            expansion = build_expansion(data, options.degree, knots, train)
            sweep = fit_submodels(data.y[train], expansion, data.Z[train], partition, family, specs,
                                  weight=options.d_weight, covariance=options.covariance,
                                  separation="warn")
            preds = _fold_predictions(sweep, data, i, methods, options.loocv_mode)
        except GaplmError as exc:
            logger.warning("LOOCV fold %d failed: %s", i, exc)
            for m in methods:
                wrong[m] += 1
                failures[m] += 1
            continue
        for m, prob in preds.items():
            if prob is None:
                wrong[m] += 1
                failures[m] += 1
            elif (prob > 0.5) != (data.y[i] > 0.5):
                wrong[m] += 1
    return LoocvResult({m: wrong[m] / n for m in methods}, n, failures, knots, options.loocv_mode)


def _fold_predictions(sweep, data: Dataset, i: int, methods, mode: str) -> dict[str, float | None]:
    x_new, z_new = data.X01[i:i + 1], data.Z[i:i + 1]
    m_hat = np.full(len(sweep.specs), np.nan)
    for k, (spec, fit) in enumerate(zip(sweep.specs, sweep.fits)):
        if fit is not None:
            m_hat[k] = fit.predict_linear(x_new, z_new[:, spec.indices])[0]
    aic, bic = sweep.aic_bic()
    inputs = sweep.inputs.with_focus(z_new[0])
    fic, _ = fic_values(sweep, inputs)
    kappa2 = inputs.kappa2_hat
    out = {}
    for method in methods:
        if method == "AIC":
            w = degenerate_weights(aic)
        elif method == "BIC":
            w = degenerate_weights(bic)
        elif method == "FIC":
            w = degenerate_weights(fic)
        else:
            w = sfic_weights(fic, kappa2) if kappa2 > 0 else degenerate_weights(fic)
            if mode == "select":
                w = (np.arange(w.size) == int(np.argmax(w))).astype(float)
        used = w > 0
        if not used.any() or not np.all(np.isfinite(m_hat[used])):
            out[method] = None
            continue
        out[method] = float(sweep.full_fit.family.inverse_link(w[used] @ m_hat[used]))
    return out


# ---------------------------------------------------------------------------
# tabular output

SWEEP_COLUMNS = ("focus", "label", "bits", "n_params", "qloglik", "aic", "bic", "fic", "mu_hat",
                 "weight", "error")


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: "" if row.get(k) is None else row.get(k) for k in columns})
    return buf.getvalue()


def coefficients_csv(report: AnalysisReport) -> str:
    return _csv([vars(r) for r in report.coefficients], ("name", "estimate", "se", "z", "p_value"))


def sweep_csv(report: AnalysisReport) -> str:
    rows = []
    for fr in report.foci:
        for r in fr.report.rows:
            rows.append({"focus": fr.focus, **vars(r)})
    return _csv(rows, SWEEP_COLUMNS)


def average_csv(report: AnalysisReport) -> str:
    rows = [{"focus": fr.focus, "method": fr.estimate.method, "mu_hat": fr.estimate.mu_hat,
             "low": fr.estimate.low, "up": fr.estimate.up, "level": fr.estimate.level,
             "correction": fr.estimate.correction_term, "note": fr.estimate.note}
            for fr in report.foci]
    return _csv(rows, ("focus", "method", "mu_hat", "low", "up", "level", "correction", "note"))


def curves_csv(report: AnalysisReport) -> str:
    rows = []
    for c in report.curves:
        for g, g01, e, s in zip(c.grid, c.grid01, c.estimate, c.se):
            rows.append({"covariate": c.name, "x": g, "x01": g01, "eta": e, "se": s})
    return _csv(rows, ("covariate", "x", "x01", "eta", "se"))


def loocv_csv(result: LoocvResult) -> str:
    rows = [{"method": m, "error_ratio": r, "failed_folds": result.fold_failures[m], "n": result.n}
            for m, r in result.ratios.items()]
    return _csv(rows, ("method", "error_ratio", "failed_folds", "n"))
