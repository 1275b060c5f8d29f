"""Simulation scenarios with known class densities."""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy import stats
from scipy.special import expit, ndtr, ndtri

from ..data import CaseControlData
from ..scoring import empirical_auc
from . import copulas

MARKERS = ("y1", "y2", "y3", "y4")

MU1 = np.array([-0.2, 0.3, 0.7, -0.1])
SIGMA_A = np.array([
    [1.00, 0.17, 0.36, 0.32],
    [0.17, 1.00, 0.41, 0.45],
    [0.36, 0.41, 1.00, 0.82],
    [0.32, 0.45, 0.82, 1.00],
])
SIGMA_C0 = np.array([
    [1.00, 0.05, 0.24, 0.10],
    [0.05, 1.00, 0.23, 0.35],
    [0.24, 0.23, 1.00, 0.62],
    [0.10, 0.35, 0.62, 1.00],
])
SIGMA_C1 = np.array([
    [1.00, 0.17, 0.33, 0.31],
    [0.17, 1.00, 0.41, 0.40],
    [0.33, 0.41, 1.00, 0.92],
    [0.31, 0.40, 0.92, 1.00],
])
CLAYTON_THETA = 0.4146
GUMBEL_THETA = 1.3170
LOGIT_INTERCEPT = 0.5
LOGIT_COEF = np.array([0.5, -0.6, 1.1, 0.4])

# skewed marginals: (class 0, class 1) per marker
SKEWED_MARGINALS = (
    (stats.norm(0.6, 1.0), stats.norm(1.1, 1.0)),
    (stats.chi2(2.5), stats.chi2(3.0)),
    (stats.expon(scale=1.0), stats.expon(scale=1.0 / 1.7)),
    (stats.gamma(1.2, scale=1.0), stats.gamma(2.0, scale=1.0)),
)


class Scenario(str, Enum):
    A = "A"
    B1 = "B1"
    B2 = "B2"
    C_NORMAL = "C_normal"
    C_SKEWED = "C_skewed"
    D_CLAYTON = "D_clayton"
    D_GUMBEL = "D_gumbel"
    E_LINEAR = "E_linear"
    E_INTERACTION = "E_interaction"


def scenario_from_name(name: str) -> Scenario:
    for s in Scenario:
        if s.value.lower() == str(name).lower():
            return s
    raise ValueError(f"unknown scenario {name!r}; choose from {[s.value for s in Scenario]}")


def _copula_corr(scenario: Scenario, d: int) -> np.ndarray:
    if scenario in (Scenario.C_NORMAL, Scenario.C_SKEWED):
        return SIGMA_C1 if d else SIGMA_C0
    return SIGMA_A


def _probit_of_cdf(dist, y):
    """``Phi^-1(F(y))`` computed from whichever tail keeps precision."""
    lower = dist.cdf(y)
    return np.where(lower < 0.5, ndtri(lower), -ndtri(dist.sf(y)))


def _skewed_quantile(dist, z):
    return np.where(z < 0, dist.ppf(ndtr(z)), dist.isf(ndtr(-z)))


def _interaction_predictor(y):
    y1, y2, y3, y4 = y.T
    return -0.5 + 1.2 * y1 - 0.8 * y2 + 0.6 * y3**2 - 0.4 * y4**2 + 0.7 * y1 * y2 - 0.5 * y3 * y4


def linear_predictor(scenario: Scenario, y) -> np.ndarray:
    y = np.atleast_2d(y)
    if scenario is Scenario.E_LINEAR:
        return LOGIT_INTERCEPT + y @ LOGIT_COEF
    if scenario is Scenario.E_INTERACTION:
        return _interaction_predictor(y)
    raise ValueError(f"scenario {scenario.value} is not a logistic model")


def sample_class(scenario: Scenario, n: int, d: int, rng) -> np.ndarray:
    """``n`` draws from class ``d`` of a two-sample scenario."""
    mu = MU1 * d
    if scenario in (Scenario.A, Scenario.B1, Scenario.C_NORMAL):
        y = rng.multivariate_normal(mu, _copula_corr(scenario, d), size=n, method="cholesky")
        return np.exp(y) if scenario is Scenario.B1 else y
    if scenario in (Scenario.B2, Scenario.C_SKEWED):
        z = rng.multivariate_normal(np.zeros(4), _copula_corr(scenario, d), size=n, method="cholesky")
        return np.column_stack([_skewed_quantile(SKEWED_MARGINALS[j][d], z[:, j]) for j in range(4)])
    if scenario is Scenario.D_CLAYTON:
        u = copulas.clayton_sample(n, 4, CLAYTON_THETA, rng)
    elif scenario is Scenario.D_GUMBEL:
        u = copulas.gumbel_sample(n, 4, GUMBEL_THETA, rng)
    else:
        raise ValueError(f"scenario {scenario.value} has no class-conditional sampler")
    return mu + ndtri(u)


def generate(scenario, n0: int, n1: int, seed) -> CaseControlData:
    """Simulated data set.  Logistic scenarios draw ``n0 + n1`` rows and label them at random."""
    scenario = scenario_from_name(scenario) if not isinstance(scenario, Scenario) else scenario
    if n0 < 1 or n1 < 1:
        raise ValueError("class sizes must be positive")
    rng = np.random.default_rng(seed)
    if scenario in (Scenario.E_LINEAR, Scenario.E_INTERACTION):
        y = rng.standard_normal((n0 + n1, 4))
        d = (rng.random(n0 + n1) < expit(linear_predictor(scenario, y))).astype(int)
        if d.min() == d.max():
            raise ValueError("all simulated labels are equal; increase the sample size")
        return CaseControlData.from_arrays(y, d, MARKERS)
    y = np.vstack([sample_class(scenario, n0, 0, rng), sample_class(scenario, n1, 1, rng)])
    return CaseControlData.from_arrays(y, np.r_[np.zeros(n0, int), np.ones(n1, int)], MARKERS)


def _gauss_logpdf(y, mu, sigma):
    return stats.multivariate_normal(mu, sigma).logpdf(y)


def true_log_lr(scenario, y) -> np.ndarray:
    """Log-likelihood ratio under the generating model.

    For the logistic scenarios the linear predictor is returned; it differs
    from the log-LR by the log prior odds, which leaves rankings unchanged.
    """
    scenario = scenario_from_name(scenario) if not isinstance(scenario, Scenario) else scenario
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if scenario in (Scenario.E_LINEAR, Scenario.E_INTERACTION):
        return linear_predictor(scenario, y)
    if scenario in (Scenario.A, Scenario.C_NORMAL):
        return (_gauss_logpdf(y, MU1, _copula_corr(scenario, 1))
                - _gauss_logpdf(y, np.zeros(4), _copula_corr(scenario, 0)))
    if scenario is Scenario.B1:
        # the Jacobian of the log map is common to both classes
        return true_log_lr(Scenario.A, np.log(y))
    if scenario in (Scenario.B2, Scenario.C_SKEWED):
        out = np.zeros(y.shape[0])
        for d, sign in ((1, 1.0), (0, -1.0)):
            z = np.column_stack([_probit_of_cdf(SKEWED_MARGINALS[j][d], y[:, j]) for j in range(4)])
            marg = sum(SKEWED_MARGINALS[j][d].logpdf(y[:, j]) for j in range(4))
            cop = _gauss_logpdf(z, np.zeros(4), _copula_corr(scenario, d)) - stats.norm.logpdf(z).sum(axis=1)
            out += sign * (cop + marg)
        return out
    logc = (lambda u: copulas.clayton_logpdf(u, CLAYTON_THETA)) if scenario is Scenario.D_CLAYTON \
        else (lambda u: copulas.gumbel_logpdf(u, GUMBEL_THETA))
    out = np.zeros(y.shape[0])
    for d, sign in ((1, 1.0), (0, -1.0)):
        x = y - MU1 * d
        out += sign * (logc(ndtr(x)) + stats.norm.logpdf(x).sum(axis=1))
    return out


def true_optimal_auc(scenario, n: int = 1_000_000, seed: int = 20240101) -> float:
    """AUC of the true likelihood-ratio score, by simulation with ``n`` draws per class."""
    scenario = scenario_from_name(scenario) if not isinstance(scenario, Scenario) else scenario
    if scenario in (Scenario.E_LINEAR, Scenario.E_INTERACTION):
        data = generate(scenario, n, n, seed)
        s = true_log_lr(scenario, data.values)
        return empirical_auc(s[data.disease == 0], s[data.disease == 1])
    rng = np.random.default_rng(seed)
    s0 = true_log_lr(scenario, sample_class(scenario, n, 0, rng))
    s1 = true_log_lr(scenario, sample_class(scenario, n, 1, rng))
    return empirical_auc(s0, s1)


def closed_form_auc_a() -> float:
    """Binormal AUC of the shared-covariance Gaussian scenario."""
    q = float(MU1 @ np.linalg.solve(SIGMA_A, MU1))
    return float(ndtr(np.sqrt(q / 2.0)))
