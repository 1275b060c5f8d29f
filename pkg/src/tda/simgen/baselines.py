"""Classical comparison classifiers, implemented directly in numpy."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import SingularCovarianceError


def _split(values, disease):
    y = np.asarray(values, dtype=float)
    d = np.asarray(disease).astype(int)
    if np.isnan(y).any():
        raise ValueError("baseline classifiers need complete data")
    y0, y1 = y[d == 0], y[d == 1]
    if len(y0) == 0 or len(y1) == 0:
        raise ValueError("each class needs at least one row")
    return y0, y1


def _checked_inv(S):
    try:
        c = np.linalg.cond(S)
    except np.linalg.LinAlgError:
        c = np.inf
    if not np.isfinite(c) or c > 1e12:
        raise SingularCovarianceError("covariance estimate is singular")
    return np.linalg.inv(S)


@dataclass(frozen=True, eq=False)
class LinearScore:
    coef: np.ndarray
    intercept: float = 0.0

    def __call__(self, y) -> np.ndarray:
        return np.atleast_2d(y) @ self.coef + self.intercept


def lda_fit(values, disease) -> LinearScore:
    """Fisher direction with the pooled within-class covariance."""
    y0, y1 = _split(values, disease)
    n0, n1 = len(y0), len(y1)
    m0, m1 = y0.mean(axis=0), y1.mean(axis=0)
    r = np.vstack([y0 - m0, y1 - m1])
    S = r.T @ r / max(n0 + n1 - 2, 1)
    coef = _checked_inv(np.atleast_2d(S)) @ (m1 - m0)
    return LinearScore(coef, -0.5 * float(coef @ (m0 + m1)))


def lda_score(fitted: LinearScore, values) -> np.ndarray:
    return fitted(values)


@dataclass(frozen=True, eq=False)
class QuadraticScore:
    means: tuple
    precisions: tuple
    logdets: tuple

    def __call__(self, y) -> np.ndarray:
        y = np.atleast_2d(y)
        out = []
        for m, P, ld in zip(self.means, self.precisions, self.logdets):
            r = y - m
            out.append(-0.5 * np.einsum("ij,jk,ik->i", r, P, r) - 0.5 * ld)
        return out[1] - out[0]


def qda_fit(values, disease, pooled: bool = False) -> QuadraticScore:
    """Gaussian log-LR with class covariances (or a pooled one when ``pooled``)."""
    y0, y1 = _split(values, disease)
    means = (y0.mean(axis=0), y1.mean(axis=0))
    covs = [np.atleast_2d(np.cov(y, rowvar=False)) for y in (y0, y1)]
    if pooled:
        n0, n1 = len(y0), len(y1)
        S = ((n0 - 1) * covs[0] + (n1 - 1) * covs[1]) / (n0 + n1 - 2)
        covs = [S, S]
    precisions = tuple(_checked_inv(S) for S in covs)
    logdets = tuple(float(np.linalg.slogdet(S)[1]) for S in covs)
    return QuadraticScore(means, precisions, logdets)


def qda_score(fitted: QuadraticScore, values) -> np.ndarray:
    return fitted(values)


@dataclass(frozen=True, eq=False)
class LogisticFit:
    coef: np.ndarray
    intercept: float
    converged: bool
    n_iter: int

    def __call__(self, y) -> np.ndarray:
        return np.atleast_2d(y) @ self.coef + self.intercept


def logistic_fit(values, disease, max_iter: int = 100, tol: float = 1e-10) -> LogisticFit:
    """Maximum likelihood by iteratively reweighted least squares.

    Under separation the weights collapse; iteration stops with
    ``converged=False`` and the last linear predictor is kept.
    """
    y = np.asarray(values, dtype=float)
    d = np.asarray(disease, dtype=float)
    if np.isnan(y).any():
        raise ValueError("baseline classifiers need complete data")
    X = np.column_stack([np.ones(len(y)), y])
    b = np.zeros(X.shape[1])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(X @ b)
        w = p * (1.0 - p)
        H = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(H, X.T @ (d - p))
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        b = b + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    if not converged:
        warnings.warn("logistic regression did not converge (possible separation)", RuntimeWarning)
    return LogisticFit(b[1:], float(b[0]), converged, it)


def logistic_score(fitted: LogisticFit, values) -> np.ndarray:
    return fitted(values)
