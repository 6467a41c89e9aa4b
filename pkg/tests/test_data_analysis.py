import numpy as np
import pandas as pd
import pytest

from gaplm_fic.analysis import (AnalysisOptions, analyze, average_csv, coefficients_csv, curves_csv,
                                loocv, report_from_json, report_to_json, sweep_csv)
from gaplm_fic.data import DatasetConfig, load_csv
from gaplm_fic.errors import ConfigError, DataError

from conftest import PIMA, pima_config


def _toy(tmp_path, rng, n=120, separate=False):
    x = rng.uniform(size=n)
    z1, z2, z3 = rng.normal(size=(3, n))
    if separate:
        # leave a margin around zero so a left-out point never sits on the boundary
        z1 = np.sign(z1) * (1.5 + np.abs(z1))
    m = np.sin(2 * np.pi * x) + 1.2 * z1 + 0.3 * z2
    y = (z1 > 0) if separate else rng.uniform(size=n) < 1 / (1 + np.exp(-m))
    frame = pd.DataFrame({"y": y.astype(int), "x": x, "z1": z1, "z2": z2, "z3": z3})
    path = tmp_path / "toy.csv"
    frame.to_csv(path, index=False)
    return path, frame


def _toy_config(path, **kw):
    args = dict(path=str(path), response="y", smooth=("x",), linear_certain=("z1",),
                linear_exploratory=("z2", "z3"))
    args.update(kw)
    return DatasetConfig(**args)


def test_pima_file_parses():
    frame = pd.read_csv(PIMA)
    assert frame.shape == (768, 9)
    data = load_csv(pima_config())
    assert data.n == 757 and data.n_dropped == 11
    assert data.Z.shape == (757, 6) and data.X01.shape == (757, 2)
    np.testing.assert_allclose(data.Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(data.Z.std(axis=0, ddof=1), 1, atol=1e-12)
    assert data.X01.min() == 0 and data.X01.max() == 1


def test_standardized_column_is_unchanged(tmp_path, rng):
    path, frame = _toy(tmp_path, rng)
    frame["z2"] = (frame.z2 - frame.z2.mean()) / frame.z2.std(ddof=1)
    frame.to_csv(path, index=False)
    data = load_csv(_toy_config(path))
    np.testing.assert_allclose(data.Z[:, 1], frame.z2, atol=1e-12)


def test_missing_and_bad_columns(tmp_path, rng):
    path, frame = _toy(tmp_path, rng)
    frame.loc[3, "z2"] = np.nan
    frame = frame.astype({"z3": object})
    frame.loc[5, "z3"] = "n/a"
    frame.to_csv(path, index=False)
    assert load_csv(_toy_config(path)).n_dropped == 2
    frame["z3"] = 1.0
    frame.to_csv(path, index=False)
    with pytest.raises(DataError, match="constant"):
        load_csv(_toy_config(path))
    with pytest.raises(ConfigError, match="unknown columns"):
        load_csv(_toy_config(path, linear_exploratory=("nope",)))
    with pytest.raises(ConfigError):
        _toy_config(path, linear_exploratory=("z1",))
    with pytest.raises(DataError):
        load_csv(_toy_config(tmp_path / "missing.csv"))


def test_analysis_report_round_trip(tmp_path, rng):
    path, _ = _toy(tmp_path, rng)
    report = analyze(_toy_config(path), ["beta:z1", "eta:x@0.2+lincomb:z1-z3"],
                     AnalysisOptions(knots="2"))
    assert report.knots.chosen == 2
    assert [c.name for c in report.coefficients] == ["z1", "z2", "z3"]
    assert len(report.foci) == 2 and len(report.foci[0].report.rows) == 4
    assert report.foci[1].estimate.note.startswith("plug-in")
    assert report_from_json(report_to_json(report)) == report
    assert len(report.curves) == 1 and len(report.curves[0].grid) == 101
    for text in (coefficients_csv(report), sweep_csv(report), average_csv(report), curves_csv(report)):
        assert text.count("\n") >= 2


def test_single_submodel_when_nothing_is_exploratory(tmp_path, rng):
    path, _ = _toy(tmp_path, rng)
    config = _toy_config(path, linear_certain=("z1", "z2", "z3"), linear_exploratory=())
    report = analyze(config, ["beta:z2"], AnalysisOptions(knots="2"))
    rows = report.foci[0].report.rows
    assert len(rows) == 1
    assert report.foci[0].estimate.weights == (1.0,)


def test_loocv_on_a_perfect_separator(tmp_path, rng):
    path, _ = _toy(tmp_path, rng, n=60, separate=True)
    data = load_csv(_toy_config(path))
    result = loocv(data, AnalysisOptions(), 1)
    assert result.ratios == {"AIC": 0.0, "BIC": 0.0, "FIC": 0.0, "S-FIC": 0.0}


def test_loocv_ratios_and_prediction_invariance(tmp_path, rng):
    path, frame = _toy(tmp_path, rng, n=80)
    data = load_csv(_toy_config(path))
    result = loocv(data, AnalysisOptions(), 1)
    assert all(0.0 <= r <= 1.0 for r in result.ratios.values())
    # affine rescaling of a linear covariate is undone by standardization
    frame["z2"] = 3.0 * frame.z2 + 11.0
    frame.to_csv(path, index=False)
    again = loocv(load_csv(_toy_config(path)), AnalysisOptions(), 1)
    assert again.ratios == result.ratios


def test_loocv_needs_binary_response(tmp_path, rng):
    path, _ = _toy(tmp_path, rng)
    data = load_csv(_toy_config(path, family="gaussian-identity"))
    with pytest.raises(ConfigError):
        loocv(data, AnalysisOptions(), 1)


def test_options_validation():
    with pytest.raises(ConfigError):
        AnalysisOptions(weights="mallows")
    with pytest.raises(ConfigError):
        AnalysisOptions(knots="lots")
