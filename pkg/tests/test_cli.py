import csv
import io
import json
import subprocess
import sys

import pytest

from gaplm_fic.analysis import report_from_json
from gaplm_fic.cli import build_parser, main

from conftest import PIMA

DATA = ["--data", str(PIMA), "--response", "Outcome", "--smooth", "BMI,Age",
        "--certain", "Glucose,DiabetesPedigreeFunction",
        "--exploratory", "BloodPressure,Pregnancies", "--zero-missing", "BMI", "--knots", "3"]


def test_fit_json_and_curves(tmp_path, capsys):
    curves = tmp_path / "curves.csv"
    assert main(["fit", *DATA, "--curves", str(curves)]) == 0
    report = report_from_json(capsys.readouterr().out)
    assert report.n == 757 and report.knots.chosen == 3
    assert [c.name for c in report.coefficients][:2] == ["Glucose", "DiabetesPedigreeFunction"]
    rows = list(csv.DictReader(curves.open()))
    assert len(rows) == 2 * 101 and rows[0]["covariate"] == "BMI"


def test_select_and_average_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["select", *DATA, "--focus", "beta:Glucose", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["label"] for r in rows] == ["0", "3", "4", "34"]
    assert main(["average", *DATA, "--focus", "beta:Glucose", "--focus", "eta:Age@0.5",
                 "--weights", "bic", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["method"] for r in rows] == ["bic", "bic"]
    assert float(rows[0]["low"]) < float(rows[0]["mu_hat"]) < float(rows[0]["up"])


def test_simulate_csv(capsys):
    assert main(["simulate", "--reps", "2", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["method"] for r in rows] == ["Full", "AIC", "BIC", "FIC", "S-FIC"]
    assert rows[3]["mu4_CP"] == ""


def test_simulate_json_seed_changes_output(capsys):
    main(["simulate", "--reps", "2", "--seed", "1"])
    a = json.loads(capsys.readouterr().out)
    main(["simulate", "--reps", "2", "--seed", "2"])
    b = json.loads(capsys.readouterr().out)
    assert a["design"]["base_seed"] == 1 and a["cells"] != b["cells"]


def test_errors_exit_nonzero(capsys):
    assert main(["fit", *DATA[:-2], "--knots", "3", "--certain", "Nope"]) == 2
    assert "unknown columns" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["select", *DATA])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["fit", "--data", "x.csv"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gaplm_fic", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("fit", "select", "average", "cv", "simulate"):
        assert cmd in proc.stdout
