"""Spline-based generalized additive partial linear models with focused model selection."""

from .analysis import AnalysisOptions, AnalysisReport, analyze, loocv, report_from_json, report_to_json
from .data import Dataset, DatasetConfig, load_csv
from .errors import (ConfigError, DataError, DomainError, GaplmError, NonConvergenceError,
                     RankDeficiencyError, SingularityError)
from .families import FAMILIES, QuasiFamily, get_family
from .fic import (FicInputs, FicReport, FmaResult, build_fic_inputs, estimate_D_Sigma, estimate_psi,
                  evaluate_focus, fic_score, fit_submodels, fma_estimate, ic_scores, r_matrix,
                  sfic_weights)
from .focus import FocusSpec, focus_gradient, parse_focus
from .knot_select import KnotSearch, candidate_counts, select_knots
from .model_space import CovariatePartition, SubmodelSpec, enumerate_submodels, parse_label
from .quasi_glm import GaplmFit, irls_fit
from .simulation import SimDesign, SimSummary, generate_dataset, run_study, true_focus_values
from .spline_basis import BasisExpansion, SplineSpec, eval_basis, expand_design, make_knots

__version__ = "0.1.0"
