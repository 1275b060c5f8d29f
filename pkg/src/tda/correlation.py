"""Correlation matrices through standardized Cholesky factors of the precision.

``lam`` fills the strict lower triangle (row-major) of a unit lower-triangular
``L``.  Rescaling its columns by ``sqrt(diag(L^-1 L^-T))``
gives ``whitener`` with ``Sigma^-1 = whitener.T @ whitener`` and a
unit diagonal ``Sigma`` for every finite ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


def n_markers_from_lambda(n: int) -> int:
    J = int(round((1 + math.sqrt(1 + 8 * n)) / 2))
    if J * (J - 1) // 2 != n:
        raise ValueError(f"{n} is not a triangular number")
    return J


@dataclass(frozen=True, eq=False)
class CorrelationParam:
    lam: np.ndarray
    Lambda: np.ndarray
    whitener: np.ndarray
    sigma: np.ndarray
    precision: np.ndarray
    logdet: float

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]


def unit_lower(lam, J: int) -> np.ndarray:
    L = np.eye(J)
    L[np.tril_indices(J, -1)] = lam
    return L


def corr_from_lambda(lam, J: int | None = None) -> CorrelationParam:
    lam = np.asarray(lam, dtype=float).ravel()
    if J is None:
        J = n_markers_from_lambda(lam.size)
    L = unit_lower(lam, J)
    Linv = solve_triangular(L, np.eye(J), lower=True, unit_diagonal=True)
    C = Linv @ Linv.T
    d = np.sqrt(np.diag(C))
    Lt = L * d[None, :]
    sigma = C / np.outer(d, d)
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    precision = Lt.T @ Lt
    logdet = -2.0 * float(np.sum(np.log(d)))
    for a in (lam, L, Lt, sigma, precision):
        a.setflags(write=False)
    return CorrelationParam(lam, L, Lt, sigma, precision, logdet)


def lower_from_precision(precision) -> np.ndarray:
    """Lower-triangular ``T`` with positive diagonal and ``T.T @ T = precision``."""
    P = np.asarray(precision, dtype=float)
    R = P[::-1, ::-1]
    K = np.linalg.cholesky(R)
    return K.T[::-1, ::-1]


def lambda_from_corr(sigma) -> np.ndarray:
    """Recover ``lam`` whose standardized factor reproduces ``sigma``."""
    sigma = np.asarray(sigma, dtype=float)
    J = sigma.shape[0]
    T = lower_from_precision(np.linalg.inv(sigma))
    L = T / np.diag(T)[None, :]
    return L[np.tril_indices(J, -1)].copy()


def lambda_gradient(lam, J: int, grad_sigma) -> np.ndarray:
    """Chain a gradient w.r.t. the (symmetric) correlation matrix back to ``lam``.

    ``grad_sigma`` is ``G`` with ``d loglik = tr(G dSigma)``.
    """
    L = unit_lower(lam, J)
    Linv = solve_triangular(L, np.eye(J), lower=True, unit_diagonal=True)
    C = Linv @ Linv.T
    D2 = np.diag(C)
    D = np.sqrt(D2)
    sigma = C / np.outer(D, D)
    G = np.asarray(grad_sigma, dtype=float)
    K = G / np.outer(D, D)
    K[np.diag_indices(J)] -= np.diag(G @ sigma) / D2
    grad_L = -2.0 * Linv.T @ K @ C
    return grad_L[np.tril_indices(J, -1)]
