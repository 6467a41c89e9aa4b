from pathlib import Path

import numpy as np
import pytest

from gaplm_fic.data import DatasetConfig

ROOT = Path(__file__).resolve().parents[1]
PIMA = ROOT / "data" / "pima-indians-diabetes.csv"


def pima_config(**overrides) -> DatasetConfig:
    kwargs = dict(
        path=str(PIMA),
        response="Outcome",
        smooth=("BMI", "Age"),
        linear_certain=("Glucose", "DiabetesPedigreeFunction"),
        linear_exploratory=("BloodPressure", "Pregnancies", "Insulin", "SkinThickness"),
        zero_missing=("BMI",),
    )
    kwargs.update(overrides)
    return DatasetConfig(**kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
