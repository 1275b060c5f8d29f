"""Simulation scenarios, baseline classifiers and holdout evaluation."""

from .baselines import lda_fit, lda_score, logistic_fit, logistic_score, qda_fit, qda_score
from .holdout import HoldoutResult, holdout_eval, make_method, scenario_eval
from .scenarios import Scenario, generate, true_log_lr, true_optimal_auc

__all__ = [
    "Scenario", "generate", "true_log_lr", "true_optimal_auc",
    "lda_fit", "lda_score", "qda_fit", "qda_score", "logistic_fit", "logistic_score",
    "HoldoutResult", "holdout_eval", "make_method", "scenario_eval",
]
