"""Command-line interface: fit, select, average, simulate, cv."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict

from .analysis import (AnalysisOptions, analyze, average_csv, coefficients_csv, curves_csv, loocv,
                       loocv_csv, report_to_json, sweep_csv)
from .data import DatasetConfig, load_csv
from .errors import GaplmError
from .families import FAMILIES
from .fic import WEIGHT_METHODS
from .knot_select import KNOT_EXPONENTS
from .simulation import SimDesign, run_study

logger = logging.getLogger("gaplm_fic")


def _names(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _data_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("data and model")
    g.add_argument("--data", required=True, help="CSV file with a header row")
    g.add_argument("--response", required=True)
    g.add_argument("--smooth", type=_names, default=(), help="comma-separated smooth covariates")
    g.add_argument("--certain", type=_names, default=(), help="linear covariates kept in every submodel")
    g.add_argument("--exploratory", type=_names, default=(), help="linear covariates that may be dropped")
    g.add_argument("--family", choices=FAMILIES, default="bernoulli-logit")
    g.add_argument("--degree", type=int, default=3)
    g.add_argument("--knots", default="auto", help="auto | auto-over | auto-under | <integer>")
    g.add_argument("--zero-missing", type=_names, default=(),
                   help="columns whose zeros mean 'missing'; such rows are dropped")
    g.add_argument("--no-standardize", action="store_true")
    g.add_argument("--covariance", choices=("model", "sandwich"), default="model")
    g.add_argument("--d-weight", choices=("rho1", "rho2"), default="rho1",
                   help="weight in the plug-in information matrix D")
    g.add_argument("--separation", choices=("raise", "warn"), default="raise",
                   help="treat quasi-separated fits as failures or keep the boundary fit")
    g.add_argument("--submodels", type=_names, default=None,
                   help="comma-separated submodel labels (default: all)")
    g.add_argument("--focus", action="append", default=[],
                   help="beta:<name> | lincomb:<c1*name1+...> | eta:<name>@<value>; repeatable")
    g.add_argument("--level", type=float, default=0.95)
    g.add_argument("--weights", choices=WEIGHT_METHODS, default="sfic")
    return p


def _output_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=2012, help="base seed (only simulate draws random numbers)")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    data, out = _data_parent(), _output_parent()
    parser = argparse.ArgumentParser(
        prog="gaplm-fic",
        description="Spline GAPLM fitting with focused model selection and model averaging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[data, out], help="knot search, full fit, coefficient table")
    p.add_argument("--curves", help="also write component curves (CSV) to this path")
    sub.add_parser("select", parents=[data, out], help="AIC/BIC/FIC table over submodels per focus")
    sub.add_parser("average", parents=[data, out], help="model-averaged estimate and interval per focus")
    p = sub.add_parser("cv", parents=[data, out], help="leave-one-out misclassification ratios")
    p.add_argument("--cv-mode", choices=("average", "select"), default="average",
                   help="S-FIC prediction: weighted average or highest-weight submodel")

    p = sub.add_parser("simulate", parents=[out], help="Monte-Carlo coverage study")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--r0", type=float, default=7.0)
    p.add_argument("--rho", type=float, default=0.0, help="correlation parameter of the linear covariates")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--knot-mode", choices=sorted(KNOT_EXPONENTS), default="auto")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _config(args) -> DatasetConfig:
    return DatasetConfig(
        path=args.data, response=args.response, smooth=args.smooth,
        linear_certain=args.certain, linear_exploratory=args.exploratory, family=args.family,
        standardize=not args.no_standardize, zero_missing=args.zero_missing,
    )


def _options(args, **extra) -> AnalysisOptions:
    return AnalysisOptions(
        degree=args.degree, knots=args.knots, level=args.level, weights=args.weights,
        d_weight=args.d_weight, covariance=args.covariance, separation=args.separation,
        submodels=args.submodels, **extra,
    )


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run(args) -> int:
    if args.command == "simulate":
        design = SimDesign(n=args.n, r0=args.r0, varpi=args.rho, replications=args.reps,
                           base_seed=args.seed, knot_mode=args.knot_mode, level=args.level)
        summary = run_study(design, workers=args.workers)
        if args.format == "csv":
            _emit(summary.to_csv(), args.out)
        else:
            payload = {"design": asdict(design), "completed": summary.completed,
                       "failures": summary.failures, "knot_counts": summary.knot_counts,
                       "cells": [asdict(c) for c in summary.cells]}
            _emit(json.dumps(payload, indent=2), args.out)
        logger.info("%d replications completed, %d failed", summary.completed, summary.failures)
        return 0

    config = _config(args)
    if args.command == "cv":
        data = load_csv(config)
        options = _options(args, loocv_mode=args.cv_mode)
        report = analyze(config, (), options, data)
        result = loocv(data, options, report.knots.chosen)
        text = loocv_csv(result) if args.format == "csv" else json.dumps(asdict(result), indent=2)
        _emit(text, args.out)
        return 0

    if args.command in ("select", "average") and not args.focus:
        raise SystemExit(f"error: '{args.command}' needs at least one --focus")
    report = analyze(config, args.focus if args.command != "fit" else (), _options(args))
    for note in report.notes:
        logger.warning(note)
    if args.format == "json":
        text = report_to_json(report)
    elif args.command == "fit":
        text = coefficients_csv(report)
    elif args.command == "select":
        text = sweep_csv(report)
    else:
        text = average_csv(report)
    _emit(text, args.out)
    if args.command == "fit" and args.curves:
        _emit(curves_csv(report), args.curves)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return run(args)
    except GaplmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
