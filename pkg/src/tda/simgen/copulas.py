"""Archimedean copulas sampled through their frailty representation."""

from __future__ import annotations

import math

import numpy as np


def clayton_sample(n: int, dim: int, theta: float, rng) -> np.ndarray:
    """Gamma frailty: ``U = (1 + E / V)^(-1/theta)`` with ``V ~ Gamma(1/theta)``."""
    if theta <= 0:
        raise ValueError("Clayton parameter must be positive")
    v = rng.gamma(1.0 / theta, 1.0, size=(n, 1))
    e = rng.standard_exponential((n, dim))
    return np.exp(-np.log1p(e / v) / theta)


def positive_stable(n: int, alpha: float, rng) -> np.ndarray:
    """Draws with Laplace transform ``exp(-s^alpha)``, ``0 < alpha <= 1`` (Kanter's representation)."""
    if not 0 < alpha <= 1:
        raise ValueError("stable index must lie in (0, 1]")
    if alpha == 1.0:
        return np.ones(n)
    w = rng.uniform(0.0, math.pi, n)
    e = rng.standard_exponential(n)
    return (np.sin(alpha * w) / np.sin(w) ** (1.0 / alpha)
            * (np.sin((1.0 - alpha) * w) / e) ** ((1.0 - alpha) / alpha))


def gumbel_sample(n: int, dim: int, theta: float, rng) -> np.ndarray:
    """Positive-stable frailty: ``U = exp(-(E / V)^(1/theta))``."""
    if theta < 1:
        raise ValueError("Gumbel parameter must be at least 1")
    alpha = 1.0 / theta
    v = positive_stable(n, alpha, rng)[:, None]
    e = rng.standard_exponential((n, dim))
    return np.exp(-((e / v) ** alpha))


def clayton_logpdf(u, theta: float) -> np.ndarray:
    u = np.atleast_2d(u)
    d = u.shape[1]
    s = np.sum(u ** (-theta), axis=1) - d + 1.0
    return (float(np.sum(np.log1p(theta * np.arange(d))))
            - (1.0 + theta) * np.sum(np.log(u), axis=1)
            - (1.0 / theta + d) * np.log(s))


def _stable_derivative_terms(d: int, alpha: float):
    """Coefficients ``a_k`` with ``d^n/ds^n exp(-s^alpha) = exp(-s^alpha) sum_k a_k s^(k alpha - n)``."""
    a = np.zeros(d + 1)
    a[0] = 1.0
    for n in range(d):
        nxt = np.zeros(d + 1)
        for k in range(n + 1):
            nxt[k] += a[k] * (k * alpha - n)
            nxt[k + 1] += -alpha * a[k]
        a = nxt
    return a


def gumbel_logpdf(u, theta: float) -> np.ndarray:
    u = np.atleast_2d(u)
    d = u.shape[1]
    alpha = 1.0 / theta
    x = -np.log(u)
    t = np.sum(x**theta, axis=1)
    a = _stable_derivative_terms(d, alpha)
    k = np.arange(d + 1)
    poly = np.sum(a[None, :] * t[:, None] ** (k * alpha - d)[None, :], axis=1)
    # the d-th derivative has sign (-1)^d, matching the product of the d negative generator slopes
    log_deriv = -(t**alpha) + np.log(np.abs(poly))
    log_gen = np.sum(math.log(theta) + (theta - 1.0) * np.log(x) + x, axis=1)
    return log_deriv + log_gen


def clayton_lower_tail(theta: float) -> float:
    return 2.0 ** (-1.0 / theta)


def gumbel_upper_tail(theta: float) -> float:
    return 2.0 - 2.0 ** (1.0 / theta)


def clayton_diagonal(q, theta: float):
    """Bivariate ``C(q, q)``."""
    return (2.0 * np.asarray(q, dtype=float) ** (-theta) - 1.0) ** (-1.0 / theta)


def gumbel_diagonal(q, theta: float):
    return np.asarray(q, dtype=float) ** (2.0 ** (1.0 / theta))


def clayton_tau(theta: float) -> float:
    return theta / (theta + 2.0)


def gumbel_tau(theta: float) -> float:
    return 1.0 - 1.0 / theta


__all__ = [
    "clayton_sample", "gumbel_sample", "positive_stable", "clayton_logpdf", "gumbel_logpdf",
    "clayton_lower_tail", "gumbel_upper_tail", "clayton_diagonal", "gumbel_diagonal",
    "clayton_tau", "gumbel_tau",
]
