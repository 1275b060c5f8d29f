"""Log-likelihood-ratio scores, their model-implied laws, and ROC/AUC."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import optimize
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .correlation import lambda_from_corr
from .errors import AllMissingError, EmptySubsetError, NumericalFailureError, UnsupportedFamilyError
from .gchisq import GChiSqParams, _cdf_scalar, gchisq_cdf
from .model import FittedTda, MarginalFamily

SINGULAR_EIG = 1e-10
ROC_GRID = 2001
MC_DRAWS = 1_000_000


def log_lr(model: FittedTda, y) -> np.ndarray | float:
    """``log f1(y) - log f0(y)`` over the observed (non-NaN) entries of each row."""
    arr = np.array(y, dtype=float, ndmin=2)
    if arr.shape[1] != model.n_markers:
        raise ValueError(f"expected {model.n_markers} markers, got {arr.shape[1]}")
    obs = ~np.isnan(arr)
    if not obs.any(axis=1).all():
        raise AllMissingError("a row has no observed marker")
    if model.spec.family is MarginalFamily.FREE:
        out = model.logpdf(arr, 1) - model.logpdf(arr, 0)
    else:
        # with a shared transformation the Jacobian terms cancel exactly
        h, _ = model.transform(arr, 0)
        out = np.empty(arr.shape[0])
        if obs.all():
            out = quadratic_form(model)(h)
        else:
            keys, inv = np.unique(obs, axis=0, return_inverse=True)
            for g, key in enumerate(keys):
                rows = np.flatnonzero(inv.ravel() == g)
                cols = np.flatnonzero(key)
                qf = quadratic_form(subset_model(model, cols))
                out[rows] = qf(h[np.ix_(rows, cols)])
    return float(out[0]) if np.ndim(y) == 1 else out


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``log LR(y) = -1/2 h'Ah + coef'h + intercept`` with ``h`` the class-0 transform.

    When ``A`` is invertible the same score is ``-1/2 (h-beta)'A(h-beta) + const``.
    ``linear`` flags the case where every eigenvalue of ``A`` is negligible.
    """

    A: np.ndarray
    coef: np.ndarray
    intercept: float
    beta: Optional[np.ndarray]
    const: Optional[float]
    linear: bool

    def __call__(self, h) -> np.ndarray:
        h = np.array(h, dtype=float, ndmin=2)
        return -0.5 * np.einsum("ij,jk,ik->i", h, self.A, h) + h @ self.coef + self.intercept


def _require_shared(model: FittedTda) -> None:
    if model.spec.family is MarginalFamily.FREE:
        raise UnsupportedFamilyError("class-specific transformations have no shared quadratic form")


def quadratic_form(model: FittedTda) -> QuadraticForm:
    _require_shared(model)
    c0, c1 = model.corr(0), model.corr(1)
    g = np.exp(-model.gamma)
    GPG = c1.precision * np.outer(g, g)
    A = GPG - c0.precision
    A = 0.5 * (A + A.T)
    delta = model.delta
    coef = GPG @ delta
    intercept = -0.5 * float(delta @ coef) - 0.5 * (c1.logdet - c0.logdet) - float(np.sum(model.gamma))
    eig = np.linalg.eigvalsh(A)
    linear = bool(np.all(np.abs(eig) < SINGULAR_EIG))
    beta = const = None
    if np.min(np.abs(eig)) >= SINGULAR_EIG:
        beta = delta + np.linalg.solve(A, c0.precision @ delta)
        const = intercept + 0.5 * float(beta @ A @ beta)
    return QuadraticForm(A, coef, intercept, beta, const, linear)


def _class_moments(model: FittedTda, d: int):
    """Mean and covariance of the class-0 transform ``h(Y)`` under class ``d``."""
    if d == 0:
        return np.zeros(model.n_markers), np.array(model.corr(0).sigma)
    s = np.exp(model.gamma)
    return model.delta.copy(), model.corr(1).sigma * np.outer(s, s)


def score_distribution(model: FittedTda, d: int) -> GChiSqParams:
    """Law of the log-LR score under class ``d``.

    Directions where the quadratic part vanishes contribute a Gaussian
    component, carried in ``normal_sd``.
    """
    if d not in (0, 1):
        raise ValueError("class must be 0 or 1")
    qf = quadratic_form(model)
    m, S = _class_moments(model, d)
    try:
        ev, U = np.linalg.eigh(S)
        R = (U * np.sqrt(np.clip(ev, 0.0, None))) @ U.T
        w, P = np.linalg.eigh(-0.5 * R @ qf.A @ R)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from None
    g = P.T @ R @ (qf.coef - qf.A @ m)
    offset = -0.5 * float(m @ qf.A @ m) + float(qf.coef @ m) + qf.intercept
    # a term w x^2 + g x whose quadratic part is negligible against its linear part is Gaussian
    gaussian = (np.abs(w) < SINGULAR_EIG) | (np.abs(w) < 1e-7 * np.abs(g))
    sd2 = float(np.sum(g[gaussian] ** 2))
    offset += float(np.sum(w[gaussian]))
    wq, gq = w[~gaussian], g[~gaussian]
    nu = (gq / (2.0 * wq)) ** 2
    offset -= float(np.sum(gq**2 / (4.0 * wq)))
    return GChiSqParams(wq, nu, offset, math.sqrt(sd2))


def _is_normal(p: GChiSqParams) -> bool:
    return p.weights.size == 0


def _difference_law(g1: GChiSqParams, g0: GChiSqParams) -> GChiSqParams:
    """Law of ``L1 - L0`` for independent ``L1 ~ g1`` and ``L0 ~ g0``."""
    return GChiSqParams(np.r_[g1.weights, -g0.weights], np.r_[g1.noncentrality, g0.noncentrality],
                        g1.offset - g0.offset, math.hypot(g1.normal_sd, g0.normal_sd))


def empirical_auc(scores0, scores1) -> float:
    """Mann-Whitney estimate of ``P(S1 > S0)`` with ties counted one half."""
    s0 = np.asarray(scores0, dtype=float).ravel()
    s1 = np.asarray(scores1, dtype=float).ravel()
    if s0.size == 0 or s1.size == 0:
        raise ValueError("both score vectors must be nonempty")
    r = rankdata(np.r_[s0, s1])
    n0, n1 = s0.size, s1.size
    return float((r[n0:].sum() - n1 * (n1 + 1) / 2.0) / (n0 * n1))


def _mc_scores(model: FittedTda, seed: int, n: int):
    rng = np.random.default_rng(seed)
    y0 = model.sample_class(n, 0, rng)
    y1 = model.sample_class(n, 1, rng)
    return log_lr(model, y0), log_lr(model, y1)


def model_auc(model: FittedTda, tol: float = 1e-9, seed: int = 0, n_mc: int = MC_DRAWS) -> float:
    """Model-implied AUC.

    Shared-transformation models use the score laws directly; the free family
    falls back to a seeded Monte-Carlo estimate.
    """
    if model.spec.family is MarginalFamily.FREE:
        s0, s1 = _mc_scores(model, seed, n_mc)
        return empirical_auc(s0, s1)
    g0, g1 = score_distribution(model, 0), score_distribution(model, 1)
    diff = _difference_law(g1, g0)
    if _is_normal(diff):
        if diff.normal_sd == 0.0:
            return 0.5 + 0.5 * float(np.sign(diff.offset))
        return float(ndtr(diff.offset / diff.normal_sd))
    return 1.0 - float(gchisq_cdf(diff, 0.0, tol))


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray

    def __post_init__(self):
        fpr = np.asarray(self.fpr, dtype=float)
        tpr = np.asarray(self.tpr, dtype=float)
        if fpr.shape != tpr.shape or fpr.ndim != 1:
            raise ValueError("fpr and tpr must be 1-D arrays of equal length")
        if np.any(np.diff(fpr) < 0) or np.any(np.diff(tpr) < 0):
            raise ValueError("ROC coordinates must be nondecreasing")
        for a in (fpr, tpr):
            a.setflags(write=False)
        object.__setattr__(self, "fpr", fpr)
        object.__setattr__(self, "tpr", tpr)

    @property
    def auc(self) -> float:
        return float(np.trapezoid(self.tpr, self.fpr))

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fpr", "tpr"])
            for f, t in zip(self.fpr, self.tpr):
                w.writerow([repr(float(f)), repr(float(t))])


def default_grid(n: int = ROC_GRID) -> np.ndarray:
    if n < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(0.0, 1.0, n)


def _upper_quantiles(law: GChiSqParams, probs: np.ndarray, tol: float) -> np.ndarray:
    """Thresholds ``t`` with ``1 - G(t) = p`` for each ``p`` in (0, 1)."""
    law = law.reduced()
    targets = 1.0 - probs
    if _is_normal(law):
        return law.offset + law.normal_sd * ndtri(targets)
    # a CDF table gives tight brackets so each root needs only a few evaluations
    mu, sd = law.mean, math.sqrt(law.variance)
    lo, hi = mu - 8.0 * sd, mu + 8.0 * sd
    while _cdf_scalar(law, lo, tol) > targets.min():
        lo -= 4.0 * sd
    while _cdf_scalar(law, hi, tol) < targets.max():
        hi += 4.0 * sd
    xs = np.linspace(lo, hi, 401)
    Fs = np.maximum.accumulate(np.array([_cdf_scalar(law, x, tol) for x in xs]))
    out = np.empty_like(targets)
    for i, q in enumerate(targets):
        k = int(np.searchsorted(Fs, q))
        a, b = xs[max(k - 1, 0)], xs[min(k, xs.size - 1)]
        fa = _cdf_scalar(law, a, tol) - q
        fb = _cdf_scalar(law, b, tol) - q
        while fa > 0:
            a -= sd
            fa = _cdf_scalar(law, a, tol) - q
        while fb < 0:
            b += sd
            fb = _cdf_scalar(law, b, tol) - q
        if fa == 0:
            out[i] = a
        elif fb == 0:
            out[i] = b
        else:
            out[i] = optimize.brentq(lambda x: _cdf_scalar(law, x, tol) - q, a, b, xtol=1e-13, rtol=1e-15)
    return out


def model_roc(model: FittedTda, grid=None, tol: float = 1e-11, seed: int = 0,
              n_mc: int = MC_DRAWS) -> RocCurve:
    """ROC curve ``p -> 1 - G1(G0^-1(1 - p))`` on a grid of false-positive rates."""
    p = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    if p.size < 2 or p[0] < 0 or p[-1] > 1:
        raise ValueError("grid must hold at least two probabilities in [0, 1]")
    inner = (p > 0) & (p < 1)
    tpr = np.where(p >= 1, 1.0, 0.0)
    if model.spec.family is MarginalFamily.FREE:
        s0, s1 = _mc_scores(model, seed, n_mc)
        t = np.quantile(s0, 1.0 - p[inner])
        s1 = np.sort(s1)
        tpr[inner] = 1.0 - np.searchsorted(s1, t, side="right") / s1.size
    else:
        g0, g1 = score_distribution(model, 0), score_distribution(model, 1)
        t = _upper_quantiles(g0, p[inner], tol)
        if _is_normal(g1):
            tpr[inner] = 1.0 - ndtr((t - g1.offset) / g1.normal_sd) if g1.normal_sd > 0 else (t < g1.offset)
        else:
            tpr[inner] = 1.0 - gchisq_cdf(g1, t, tol)
    return RocCurve(p, np.maximum.accumulate(np.clip(tpr, 0.0, 1.0)))


def subset_model(model: FittedTda, markers) -> FittedTda:
    """Marginal model of the listed markers, in the listed order."""
    idx = [int(j) for j in markers]
    if not idx:
        raise EmptySubsetError("marker subset is empty")
    if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= model.n_markers:
        raise ValueError(f"invalid marker subset {idx}")
    if idx == list(range(model.n_markers)):
        return model
    lams = np.array([lambda_from_corr(c.sigma[np.ix_(idx, idx)])
                     for c in model._corrs]).reshape(model.spec.n_scope, -1)
    spec = replace(model.spec, bounds=tuple(model.spec.bounds[j] for j in idx))
    return FittedTda(spec, model.coeffs[:, idx], model.delta[idx], model.gamma[idx], lams,
                     tuple(model.marker_names[j] for j in idx), loglik=None, n_params=0,
                     converged=model.converged, n_iter=model.n_iter, grad_norm=model.grad_norm)


def resolve_markers(model: FittedTda, names_or_indices) -> list[int]:
    """Accept marker names or zero-based indices."""
    out = []
    for item in names_or_indices:
        if isinstance(item, str) and item in model.marker_names:
            out.append(model.marker_names.index(item))
        else:
            try:
                out.append(int(item))
            except ValueError:
                raise ValueError(f"unknown marker {item!r}") from None
    return out
