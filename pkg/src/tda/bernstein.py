"""Bernstein polynomial bases and monotone marginal transformations.

A marginal transformation is ``h(y) = b(y) @ theta`` on ``[lower, upper]``,
with nondecreasing coefficients ``theta``.  Outside the support ``h`` is
continued linearly with the boundary slope, so the implied density stays
positive for new subjects scored outside the training range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import comb, expit

MAX_ORDER = 20


@dataclass(frozen=True)
class BernsteinBasis:
    order: int
    lower: float
    upper: float
    index: int = 0

    def __post_init__(self):
        if not 1 <= self.order <= MAX_ORDER:
            raise ValueError(f"Bernstein order must be in [1, {MAX_ORDER}], got {self.order}")
        if not self.upper > self.lower:
            raise ValueError(f"empty support [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def design(self, y):
        """Basis rows and derivative rows, linear beyond the support.

        Returns ``(B, dB)`` of shape ``(n, order + 1)`` such that
        ``B @ theta`` is ``h(y)`` and ``dB @ theta`` is ``h'(y)``.
        """
        y = np.ascontiguousarray(np.atleast_1d(np.asarray(y, dtype=float)).ravel())
        M = self.order
        return _design_rows(y, M, self.lower, self.upper, comb(M, np.arange(M + 1)), comb(M - 1, np.arange(M)))


@numba.njit(cache=True)
def _design_rows(y, M, lower, upper, binom, binom_low):
    n = y.size
    width = upper - lower
    B = np.zeros((n, M + 1))
    dB = np.zeros((n, M + 1))
    low = np.empty(M)
    for i in range(n):
        t = min(max((y[i] - lower) / width, 0.0), 1.0)
        s = 1.0 - t
        p = 1.0
        for k in range(M + 1):
            B[i, k] = binom[k] * p
            p *= t
        p = 1.0
        for k in range(M, -1, -1):
            B[i, k] *= p
            p *= s
        p = 1.0
        for k in range(M):
            low[k] = binom_low[k] * p * (M / width)
            p *= t
        p = 1.0
        for k in range(M - 1, -1, -1):
            low[k] *= p
            p *= s
        for k in range(M):
            dB[i, k + 1] += low[k]
            dB[i, k] -= low[k]
        # linear continuation beyond the support
        if y[i] < lower:
            for k in range(M + 1):
                B[i, k] += (y[i] - lower) * dB[i, k]
        elif y[i] > upper:
            for k in range(M + 1):
                B[i, k] += (y[i] - upper) * dB[i, k]
    return B, dB


@numba.njit(cache=True)
def _bernstein_rows(t, M, binom):
    n = t.size
    out = np.empty((n, M + 1))
    for i in range(n):
        x = t[i]
        s = 1.0 - x
        p = 1.0
        for k in range(M + 1):
            out[i, k] = binom[k] * p
            p *= x
        p = 1.0
        for k in range(M, -1, -1):
            out[i, k] *= p
            p *= s
    return out


def _bernstein(t, M):
    return _bernstein_rows(np.ascontiguousarray(t, dtype=float), M, comb(M, np.arange(M + 1)))


def bernstein_basis(y: float, basis: BernsteinBasis) -> np.ndarray:
    """Basis vector ``(b_0(y), ..., b_M(y))`` at ``y`` clamped to the support."""
    t = np.clip((float(y) - basis.lower) / basis.width, 0.0, 1.0)
    return _bernstein(np.array([t]), basis.order)[0]


def transform_eval(y, coeffs, basis: BernsteinBasis):
    """Evaluate ``h`` and ``h'`` at ``y`` (scalar or array)."""
    B, dB = basis.design(y)
    coeffs = np.asarray(coeffs, dtype=float)
    h, hp = B @ coeffs, dB @ coeffs
    if np.ndim(y) == 0:
        return float(h[0]), float(hp[0])
    return h, hp


def softplus(x):
    return np.logaddexp(0.0, x)


def inverse_softplus(y):
    y = np.asarray(y, dtype=float)
    return y + np.log(-np.expm1(-y))


def monotone_reparam(raw) -> np.ndarray:
    """Map unconstrained reals to strictly increasing coefficients.

    ``theta[0] = raw[0]`` and each later coefficient adds ``softplus(raw[m])``.
    Works along the last axis.
    """
    raw = np.asarray(raw, dtype=float)
    steps = softplus(raw[..., 1:])
    out = np.empty_like(raw)
    out[..., 0] = raw[..., 0]
    out[..., 1:] = raw[..., :1] + np.cumsum(steps, axis=-1)
    return out


def inverse_reparam(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    steps = np.diff(theta, axis=-1)
    if np.any(steps <= 0):
        raise ValueError("coefficients must be strictly increasing")
    out = np.empty_like(theta)
    out[..., 0] = theta[..., 0]
    out[..., 1:] = inverse_softplus(steps)
    return out


def reparam_jacobian_t(raw, grad_theta) -> np.ndarray:
    """Pull a gradient w.r.t. ``theta`` back to ``raw`` (last axis)."""
    raw = np.asarray(raw, dtype=float)
    g = np.asarray(grad_theta, dtype=float)
    tail = np.cumsum(g[..., ::-1], axis=-1)[..., ::-1]
    out = np.empty_like(g)
    out[..., 0] = tail[..., 0]
    out[..., 1:] = expit(raw[..., 1:]) * tail[..., 1:]
    return out


def support_bounds(values, extend: float = 0.1):
    """Observed range widened by ``extend`` times its width on each side."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    lo, hi = float(v.min()), float(v.max())
    pad = extend * (hi - lo)
    return lo - pad, hi + pad


def invert_transform(target, coeffs, basis: BernsteinBasis, tol: float = 1e-12, max_iter: int = 100):
    """Solve ``h(y) = target`` elementwise for a strictly increasing ``h``.

    Linear tails are inverted in closed form; inside the support a Newton
    step is taken whenever it stays inside the current bracket, otherwise
    the bracket is bisected.
    """
    target = np.asarray(target, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    shape = target.shape
    tgt = target.ravel()
    M, l, u = basis.order, basis.lower, basis.upper
    h_lo, h_hi = coeffs[0], coeffs[-1]
    slope_lo = M * (coeffs[1] - coeffs[0]) / basis.width
    slope_hi = M * (coeffs[-1] - coeffs[-2]) / basis.width

    y = np.empty_like(tgt)
    below = tgt <= h_lo
    above = tgt >= h_hi
    y[below] = l + (tgt[below] - h_lo) / slope_lo
    y[above] = u + (tgt[above] - h_hi) / slope_hi

    inner = ~(below | above)
    if inner.any():
        y[inner] = _invert_rows(np.ascontiguousarray(tgt[inner]), coeffs, l, u,
                                comb(M, np.arange(M + 1)), comb(M - 1, np.arange(M)), tol, max_iter)
    return y.reshape(shape)


@numba.njit(cache=True)
def _invert_rows(tgt, coeffs, lower, upper, binom, binom_low, tol, max_iter):
    M = coeffs.size - 1
    width = upper - lower
    h_lo, h_hi = coeffs[0], coeffs[M]
    out = np.empty(tgt.size)
    for i in range(tgt.size):
        target = tgt[i]
        a, b = lower, upper
        # start from the linear interpolant between the end coefficients
        x = lower + (target - h_lo) / (h_hi - h_lo) * width
        for _ in range(max_iter):
            t = (x - lower) / width
            s = 1.0 - t
            h = 0.0
            for k in range(M + 1):
                h += binom[k] * t ** k * s ** (M - k) * coeffs[k]
            hp = 0.0
            for k in range(M):
                hp += binom_low[k] * t ** k * s ** (M - 1 - k) * (coeffs[k + 1] - coeffs[k])
            hp *= M / width
            f = h - target
            if abs(f) <= tol:
                break
            if f < 0:
                a = x
            else:
                b = x
            xn = x - f / hp if hp > 0 else 0.5 * (a + b)
            if not (a < xn < b):
                xn = 0.5 * (a + b)
            if xn == x:
                break
            x = xn
        out[i] = x
    return out
