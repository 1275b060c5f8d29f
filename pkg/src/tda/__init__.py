"""Transformation discriminant analysis for case-control biomarker data."""

from .data import CaseControlData, read_csv, write_csv
from .errors import TdaError
from .gchisq import GChiSqParams, gchisq_cdf, gchisq_quantile
from .model import CorrelationScope, FitOptions, FittedTda, MarginalFamily, ModelSpec, fit, log_likelihood
from .scoring import log_lr, model_auc, model_roc, quadratic_form, score_distribution, subset_model
from .inference import parametric_bootstrap
from .assess import rosenblatt
from .subset import ResourceProblem, optimize_subset

__all__ = [
    "CaseControlData", "read_csv", "write_csv", "TdaError", "GChiSqParams", "gchisq_cdf",
    "gchisq_quantile", "CorrelationScope", "FitOptions", "FittedTda", "MarginalFamily", "ModelSpec",
    "fit", "log_likelihood", "log_lr", "model_auc", "model_roc", "quadratic_form",
    "score_distribution", "subset_model", "parametric_bootstrap", "rosenblatt", "ResourceProblem",
    "optimize_subset",
]
__version__ = "0.1.0"
