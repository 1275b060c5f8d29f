"""Gaussian-copula transformation models for two-class biomarker data.

Every marker ``j`` has a monotone transformation per class so that the
transformed vector is multivariate normal with a correlation matrix.  Three
marginal families tie the class-1 transformation to the class-0 one:

* ``FREE``: each class has its own coefficients.
* ``LOCATION``: class 1 uses ``h_j(y) - delta_j``.
* ``LOCATION_SCALE``: class 1 uses ``(h_j(y) - delta_j) / exp(gamma_j)``.

The correlation matrix is either shared (``GLOBAL``) or class specific
(``PER_DISEASE``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional

import numba
import numpy as np
from scipy import optimize
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from .bernstein import (
    BernsteinBasis,
    MAX_ORDER,
    inverse_reparam,
    monotone_reparam,
    reparam_jacobian_t,
    support_bounds,
    invert_transform,
)
from .correlation import CorrelationParam, corr_from_lambda
from .data import CaseControlData
from .errors import DegenerateDataError, NonConvergenceError

LOG_2PI = math.log(2.0 * math.pi)
FORMAT_NAME = "tda-model"
FORMAT_VERSION = 1
# smallest coefficient increment used when mapping back to the unconstrained scale
MIN_STEP = 1e-10
TINY = np.finfo(float).tiny


class MarginalFamily(str, Enum):
    FREE = "free"
    LOCATION = "loc"
    LOCATION_SCALE = "locscale"


class CorrelationScope(str, Enum):
    GLOBAL = "global"
    PER_DISEASE = "per-disease"


_LABELS = {
    MarginalFamily.FREE: "sTDA",
    MarginalFamily.LOCATION: "TDA",
    MarginalFamily.LOCATION_SCALE: "lsTDA",
}


@dataclass(frozen=True)
class ModelSpec:
    family: MarginalFamily = MarginalFamily.LOCATION
    scope: CorrelationScope = CorrelationScope.GLOBAL
    order: int = 6
    bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "family", MarginalFamily(self.family))
        object.__setattr__(self, "scope", CorrelationScope(self.scope))
        if not 1 <= int(self.order) <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {self.order}")
        object.__setattr__(self, "order", int(self.order))
        if self.bounds is not None:
            b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            for lo, hi in b:
                if not hi > lo:
                    raise ValueError(f"empty support [{lo}, {hi}]")
            object.__setattr__(self, "bounds", b)

    @property
    def label(self) -> str:
        suffix = "_d" if self.scope is CorrelationScope.PER_DISEASE else ""
        return _LABELS[self.family] + suffix

    @property
    def n_sets(self) -> int:
        return 2 if self.family is MarginalFamily.FREE else 1

    @property
    def n_scope(self) -> int:
        return 2 if self.scope is CorrelationScope.PER_DISEASE else 1

    def with_bounds(self, data: CaseControlData) -> "ModelSpec":
        if self.bounds is not None:
            if len(self.bounds) != data.n_markers:
                raise ValueError("bounds must list one (lower, upper) pair per marker")
            return self
        b = []
        for j in range(data.n_markers):
            col = data.values[data.observed[:, j], j]
            lo, hi = support_bounds(col)
            if not hi > lo:
                raise DegenerateDataError(f"marker {data.marker_names[j]!r} is constant")
            b.append((lo, hi))
        return replace(self, bounds=tuple(b))

    def bases(self) -> list[BernsteinBasis]:
        if self.bounds is None:
            raise ValueError("spec has no support bounds yet")
        return [BernsteinBasis(self.order, lo, hi, j) for j, (lo, hi) in enumerate(self.bounds)]


class _Layout:
    """Slices of the flat unconstrained parameter vector."""

    def __init__(self, spec: ModelSpec, J: int):
        self.J = J
        self.K = J * (J - 1) // 2
        self.shape_coef = (spec.n_sets, J, spec.order + 1)
        pos = int(np.prod(self.shape_coef))
        self.coef = slice(0, pos)
        n_delta = J if spec.family is not MarginalFamily.FREE else 0
        self.delta = slice(pos, pos + n_delta)
        pos += n_delta
        n_gamma = J if spec.family is MarginalFamily.LOCATION_SCALE else 0
        self.gamma = slice(pos, pos + n_gamma)
        pos += n_gamma
        self.lam = slice(pos, pos + spec.n_scope * self.K)
        self.size = pos + spec.n_scope * self.K
        self.n_scope = spec.n_scope

    def unpack(self, x):
        raw = x[self.coef].reshape(self.shape_coef)
        delta = np.zeros(self.J)
        gamma = np.zeros(self.J)
        delta[: self.delta.stop - self.delta.start] = x[self.delta]
        gamma[: self.gamma.stop - self.gamma.start] = x[self.gamma]
        lams = x[self.lam].reshape(self.n_scope, self.K)
        return raw, delta, gamma, lams

    def pack(self, raw, delta, gamma, lams):
        x = np.empty(self.size)
        x[self.coef] = np.ravel(raw)
        x[self.delta] = np.ravel(delta)[: self.delta.stop - self.delta.start]
        x[self.gamma] = np.ravel(gamma)[: self.gamma.stop - self.gamma.start]
        x[self.lam] = np.ravel(lams)
        return x


def _pattern_groups(observed: np.ndarray):
    """Group row indices by missingness pattern: list of (rows, columns)."""
    if observed.all():
        return [(np.arange(observed.shape[0]), np.arange(observed.shape[1]))]
    keys, inverse = np.unique(observed, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    return [(np.flatnonzero(inverse == g), np.flatnonzero(k)) for g, k in enumerate(keys)]


def _gauss_logpdf_rows(z: np.ndarray, observed: np.ndarray, corr: CorrelationParam) -> np.ndarray:
    """Row log-density of N(0, sigma) over each row's observed coordinates."""
    out = np.empty(z.shape[0])
    for rows, cols in _pattern_groups(observed):
        zo = z[np.ix_(rows, cols)]
        if cols.size == corr.dim:
            P, logdet = corr.precision, corr.logdet
        else:
            S = corr.sigma[np.ix_(cols, cols)]
            P = np.linalg.inv(S)
            logdet = np.linalg.slogdet(S)[1]
        out[rows] = -0.5 * np.einsum("ij,jk,ik->i", zo, P, zo) - 0.5 * logdet - 0.5 * cols.size * LOG_2PI
    return out


def _corr_parts(lam, J, tril):
    """Correlation pieces shared by the likelihood value and its gradient."""
    L = np.eye(J)
    L[tril] = lam
    Linv = np.linalg.inv(L)
    C = Linv @ Linv.T
    D2 = np.diag(C).copy()
    D = np.sqrt(D2)
    sigma = C / np.outer(D, D)
    Lt = L * D
    return dict(Linv=Linv, C=C, D=D, D2=D2, sigma=sigma, P=Lt.T @ Lt, logdet=-float(np.sum(np.log(D2))))


def _lam_chain(parts, G, tril):
    D = parts["D"]
    K = G / np.outer(D, D)
    K[np.diag_indices_from(K)] -= np.diag(G @ parts["sigma"]) / parts["D2"]
    return (-2.0 * parts["Linv"].T @ K @ parts["C"])[tril]


@numba.njit(cache=True)
def _complete_terms(B, dB, theta, shift, scale, P, want_grad):
    """Row loop for a fully observed class.

    Returns ``(value, g_theta, gz_sum, gzz_sum, zPzP, ok)`` where ``value``
    excludes the normalising constants, ``gz_sum[j]`` is the sum of
    ``d/dz_j`` over rows, ``gzz_sum[j]`` the sum of ``z_j d/dz_j`` and
    ``zPzP`` the sum of ``(Pz)(Pz)'``.
    """
    n = B.shape[0]
    J, m = theta.shape
    g_theta = np.zeros((J, m))
    gz_sum = np.zeros(J)
    gzz_sum = np.zeros(J)
    zPzP = np.zeros((J, J))
    z = np.empty(J)
    hp = np.empty(J)
    zP = np.empty(J)
    value = 0.0
    for i in range(n):
        for j in range(J):
            h = 0.0
            d1 = 0.0
            for k in range(m):
                h += B[i, j * m + k] * theta[j, k]
                d1 += dB[i, j * m + k] * theta[j, k]
            if d1 <= 0.0:
                return -np.inf, g_theta, gz_sum, gzz_sum, zPzP, False
            hp[j] = d1
            z[j] = (h - shift[j]) * scale[j]
            value += math.log(d1)
        q = 0.0
        for j in range(J):
            acc = 0.0
            for l in range(J):
                acc += P[j, l] * z[l]
            zP[j] = acc
            q += acc * z[j]
        value -= 0.5 * q
        if not want_grad:
            continue
        for j in range(J):
            gz = -zP[j]
            gz_sum[j] += gz
            gzz_sum[j] += gz * z[j]
            a = gz * scale[j]
            b = 1.0 / hp[j]
            for k in range(m):
                g_theta[j, k] += B[i, j * m + k] * a + dB[i, j * m + k] * b
            for l in range(J):
                zPzP[j, l] += zP[j] * zP[l]
    return value, g_theta, gz_sum, gzz_sum, zPzP, True


class _Objective:
    """Log-likelihood and its gradient in the unconstrained parameterization."""

    def __init__(self, data: CaseControlData, spec: ModelSpec):
        self.spec = spec
        J = self.J = data.n_markers
        self.N = data.n
        self.layout = _Layout(spec, J)
        self.tril = np.tril_indices(J, -1)
        m = spec.order + 1
        # block-diagonal scatter of per-marker coefficients into a (J*m, J) matrix
        self.blk = (np.arange(J * m), np.repeat(np.arange(J), m))
        bases = spec.bases()
        self.classes = []
        for d in (0, 1):
            sel = data.disease == d
            vals = data.values[sel]
            obs = data.observed[sel]
            B, dB = [], []
            for j, basis in enumerate(bases):
                b, db = basis.design(np.where(obs[:, j], vals[:, j], basis.lower))
                b[~obs[:, j]] = 0.0
                db[~obs[:, j]] = 0.0
                B.append(b)
                dB.append(db)
            complete = bool(obs.all())
            self.classes.append(dict(
                B=np.hstack(B), dB=np.hstack(dB), obs=obs, complete=complete,
                n=obs.shape[0], n_obs=obs.sum(axis=0).astype(float),
                groups=None if complete else _pattern_groups(obs),
            ))

    def _blockdiag(self, theta):
        T = np.zeros((self.blk[0].size, self.J))
        T[self.blk] = theta.ravel()
        return T

    def __call__(self, x, want_grad=True):
        lay, spec, J = self.layout, self.spec, self.J
        free = spec.family is MarginalFamily.FREE
        raw, delta, gamma, lams = lay.unpack(x)
        theta = monotone_reparam(raw)
        parts = [_corr_parts(lam, J, self.tril) for lam in lams]
        T = [self._blockdiag(theta[s]) for s in range(theta.shape[0])]
        g_theta = np.zeros_like(theta)
        g_delta = np.zeros(J)
        g_gamma = np.zeros(J)
        G = [np.zeros((J, J)) for _ in parts]
        total = 0.0
        for d, c in enumerate(self.classes):
            s = d if free else 0
            scale = np.exp(-gamma * d)
            k = d if spec.scope is CorrelationScope.PER_DISEASE else 0
            pk = parts[k]
            if c["complete"]:
                val, gt, gz_sum, gzz_sum, zPzP, ok = _complete_terms(
                    c["B"], c["dB"], theta[s], delta * d, scale, pk["P"], want_grad)
                if not ok:
                    return (-np.inf, None) if want_grad else -np.inf
                n = c["n"]
                total += val - 0.5 * n * (pk["logdet"] + J * LOG_2PI)
                if d:
                    total -= float(c["n_obs"] @ gamma)
                if want_grad:
                    G[k] += 0.5 * zPzP - 0.5 * n * pk["P"]
                    g_theta[s] += gt
                    if d == 1 and not free:
                        g_delta -= scale * gz_sum
                        g_gamma -= gzz_sum + c["n_obs"]
                continue
            h = c["B"] @ T[s]
            hp = c["dB"] @ T[s]
            obs = c["obs"]
            if np.any(hp[obs] <= 0):
                return (-np.inf, None) if want_grad else -np.inf
            z = np.where(obs, (h - delta * d) * scale, 0.0)
            total += float(np.sum(np.log(hp[obs])))
            if d:
                total -= float(c["n_obs"] @ gamma)
            gz = np.zeros_like(z)
            for rows, cols in c["groups"]:
                zo = z[np.ix_(rows, cols)]
                n = rows.size
                if cols.size == J:
                    P, logdet = pk["P"], pk["logdet"]
                else:
                    S = pk["sigma"][np.ix_(cols, cols)]
                    P = np.linalg.inv(S)
                    logdet = np.linalg.slogdet(S)[1]
                zP = zo @ P
                total += -0.5 * float(np.sum(zP * zo)) - 0.5 * n * (logdet + cols.size * LOG_2PI)
                if want_grad:
                    gz[np.ix_(rows, cols)] = -zP
                    G[k][np.ix_(cols, cols)] += 0.5 * zP.T @ zP - 0.5 * n * P
            if not want_grad:
                continue
            inv_hp = np.where(obs, 1.0 / np.where(obs, hp, 1.0), 0.0)
            gt = c["B"].T @ (gz * scale) + c["dB"].T @ inv_hp
            g_theta[s] += gt[self.blk].reshape(J, -1)
            if d == 1 and not free:
                g_delta -= scale * gz.sum(axis=0)
                g_gamma -= np.sum(gz * z, axis=0) + c["n_obs"]
        if not want_grad:
            return total
        g_lam = np.stack([_lam_chain(pk, Gk, self.tril) for pk, Gk in zip(parts, G)])
        grad = lay.pack(reparam_jacobian_t(raw, g_theta), g_delta, g_gamma, g_lam)
        return total, grad


def log_likelihood(params, data: CaseControlData, spec: ModelSpec) -> float:
    """Total log-likelihood at an unconstrained parameter vector."""
    obj = _Objective(data, spec.with_bounds(data))
    params = np.asarray(params, dtype=float)
    if params.size != obj.layout.size:
        raise ValueError(f"expected {obj.layout.size} parameters, got {params.size}")
    return obj(params, want_grad=False)


def log_likelihood_grad(params, data: CaseControlData, spec: ModelSpec):
    """Total log-likelihood and its gradient."""
    obj = _Objective(data, spec.with_bounds(data))
    return obj(np.asarray(params, dtype=float))


@dataclass(frozen=True)
class FitOptions:
    maxiter: int = 2000
    gtol: float = 1e-5
    ftol: float = 1e-8
    min_increment: float = 1e-2


@dataclass(frozen=True, eq=False)
class FittedTda:
    """Immutable fitted model.  ``coeffs`` has shape ``(n_sets, J, order + 1)``."""

    spec: ModelSpec
    coeffs: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    lambdas: np.ndarray
    marker_names: tuple
    loglik: Optional[float] = None
    n_params: int = 0
    converged: bool = True
    n_iter: int = 0
    grad_norm: float = field(default=math.nan)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float, ndmin=3)
        J = coeffs.shape[1]
        if coeffs.shape != (self.spec.n_sets, J, self.spec.order + 1):
            raise ValueError(f"coefficient array has shape {coeffs.shape}")
        if np.any(np.diff(coeffs, axis=-1) < 0):
            raise ValueError("coefficients must be nondecreasing")
        if self.spec.bounds is None or len(self.spec.bounds) != J:
            raise ValueError("spec must carry one support interval per marker")
        delta = np.array(self.delta, dtype=float).reshape(J)
        gamma = np.array(self.gamma, dtype=float).reshape(J)
        lambdas = np.array(self.lambdas, dtype=float).reshape(self.spec.n_scope, J * (J - 1) // 2)
        if self.spec.family is MarginalFamily.FREE and np.any(delta != 0):
            raise ValueError("free family has no location shift")
        if self.spec.family is not MarginalFamily.LOCATION_SCALE and np.any(gamma != 0):
            raise ValueError("only the location-scale family has scale shifts")
        for a in (coeffs, delta, gamma, lambdas):
            a.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "lambdas", lambdas)
        names = tuple(self.marker_names) if self.marker_names else tuple(f"y{j + 1}" for j in range(J))
        object.__setattr__(self, "marker_names", names)
        if not self.n_params:
            object.__setattr__(self, "n_params", _Layout(self.spec, J).size)

    @property
    def n_markers(self) -> int:
        return self.coeffs.shape[1]

    @cached_property
    def bases(self) -> list[BernsteinBasis]:
        return self.spec.bases()

    @cached_property
    def _corrs(self) -> list[CorrelationParam]:
        return [corr_from_lambda(lam, self.n_markers) for lam in self.lambdas]

    def corr(self, d: int) -> CorrelationParam:
        return self._corrs[d if self.spec.scope is CorrelationScope.PER_DISEASE else 0]

    def class_coeffs(self, d: int) -> np.ndarray:
        return self.coeffs[d if self.spec.family is MarginalFamily.FREE else 0]

    def flat_params(self) -> np.ndarray:
        """Unconstrained parameter vector, usable as a warm start."""
        lay = _Layout(self.spec, self.n_markers)
        steps = np.maximum(np.diff(self.coeffs, axis=-1), MIN_STEP)
        theta = np.concatenate([self.coeffs[..., :1], self.coeffs[..., :1] + np.cumsum(steps, axis=-1)], axis=-1)
        return lay.pack(inverse_reparam(theta), self.delta, self.gamma, self.lambdas)

    def transform(self, values, d: int):
        """Class-``d`` transformed values and log-derivatives (NaN where missing)."""
        y = np.array(values, dtype=float, ndmin=2)
        theta = self.class_coeffs(d)
        z = np.full(y.shape, np.nan)
        logd = np.full(y.shape, np.nan)
        for j, basis in enumerate(self.bases):
            ok = ~np.isnan(y[:, j])
            if not ok.any():
                continue
            B, dB = basis.design(y[ok, j])
            z[ok, j] = (B @ theta[j] - self.delta[j] * d) * math.exp(-self.gamma[j] * d)
            logd[ok, j] = np.log(np.maximum(dB @ theta[j], TINY)) - self.gamma[j] * d
        return z, logd

    def logpdf(self, values, d: int) -> np.ndarray:
        """Class-``d`` log-density over the observed (non-NaN) coordinates of each row."""
        z, logd = self.transform(values, d)
        obs = ~np.isnan(z)
        if not obs.any(axis=1).all():
            raise ValueError("every row needs at least one observed marker")
        return _gauss_logpdf_rows(np.where(obs, z, 0.0), obs, self.corr(d)) + np.nansum(logd, axis=1)

    def marginal_cdf(self, d: int, j: int, y):
        z, _ = self.transform(np.column_stack([np.full(np.size(y), np.nan)] * j
                                              + [np.ravel(y)]
                                              + [np.full(np.size(y), np.nan)] * (self.n_markers - j - 1)), d)
        p = ndtr(z[:, j])
        return float(p[0]) if np.ndim(y) == 0 else p.reshape(np.shape(y))

    def sample_class(self, n: int, d: int, rng) -> np.ndarray:
        """``n`` draws from class ``d``."""
        corr = self.corr(d)
        L = np.linalg.cholesky(corr.sigma)
        z = rng.standard_normal((n, self.n_markers)) @ L.T
        target = z * np.exp(self.gamma * d) + self.delta * d
        theta = self.class_coeffs(d)
        return np.column_stack([invert_transform(target[:, j], theta[j], basis)
                                for j, basis in enumerate(self.bases)])

    def simulate(self, n0: int, n1: int, rng) -> CaseControlData:
        y = np.vstack([self.sample_class(n0, 0, rng), self.sample_class(n1, 1, rng)])
        disease = np.r_[np.zeros(n0, int), np.ones(n1, int)]
        return CaseControlData.from_arrays(y, disease, self.marker_names)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "spec": {
                "family": self.spec.family.value,
                "scope": self.spec.scope.value,
                "order": self.spec.order,
                "bounds": [list(b) for b in self.spec.bounds],
            },
            "marker_names": list(self.marker_names),
            "coeffs": self.coeffs.tolist(),
            "delta": self.delta.tolist(),
            "gamma": self.gamma.tolist(),
            "lambdas": self.lambdas.tolist(),
            "loglik": self.loglik,
            "n_params": self.n_params,
            "converged": self.converged,
            "n_iter": self.n_iter,
            "grad_norm": None if math.isnan(self.grad_norm) else self.grad_norm,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedTda":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError("not a serialized model document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('version')}")
        s = doc["spec"]
        spec = ModelSpec(s["family"], s["scope"], s["order"], tuple(tuple(b) for b in s["bounds"]))
        gn = doc.get("grad_norm")
        return cls(spec, np.array(doc["coeffs"]), np.array(doc["delta"]), np.array(doc["gamma"]),
                   np.array(doc["lambdas"]), tuple(doc["marker_names"]), doc.get("loglik"),
                   int(doc.get("n_params", 0)), bool(doc.get("converged", True)),
                   int(doc.get("n_iter", 0)), math.nan if gn is None else float(gn))

    def to_json(self) -> str:
        # json writes floats with repr, the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FittedTda":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "FittedTda":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _check_data(data: CaseControlData, spec: ModelSpec) -> None:
    J = data.n_markers
    for d in (0, 1):
        vals = data.class_values(d)
        obs = data.observed[data.disease == d]
        if vals.shape[0] < J + 2:
            raise DegenerateDataError(f"class {d} has {vals.shape[0]} subjects; at least {J + 2} needed")
        for j in range(J):
            col = vals[obs[:, j], j]
            if col.size == 0:
                raise DegenerateDataError(f"marker {data.marker_names[j]!r} never observed in class {d}")
            if np.ptp(col) == 0:
                raise DegenerateDataError(f"marker {data.marker_names[j]!r} is constant in class {d}")


def _initial_coeffs(values: np.ndarray, basis: BernsteinBasis, min_inc: float) -> np.ndarray:
    """Monotone least-squares fit of the probit-transformed ECDF."""
    n = values.size
    u = rankdata(values) / (n + 1.0)
    target = ndtri(np.clip(u, 1.0 / (n + 1), n / (n + 1.0)))
    B, _ = basis.design(values)
    m = basis.order + 1
    T = np.tril(np.ones((m, m)))
    lb = np.full(m, min_inc)
    lb[0] = -np.inf
    res = optimize.lsq_linear(B @ T, target, bounds=(lb, np.inf), method="bvls")
    return T @ res.x


def initial_params(data: CaseControlData, spec: ModelSpec, opts: FitOptions = FitOptions()) -> np.ndarray:
    spec = spec.with_bounds(data)
    lay = _Layout(spec, data.n_markers)
    theta = np.empty(lay.shape_coef)
    for s in range(spec.n_sets):
        rows = data.disease == s if spec.family is MarginalFamily.FREE else np.ones(data.n, bool)
        for j, basis in enumerate(spec.bases()):
            col = data.values[rows & data.observed[:, j], j]
            theta[s, j] = _initial_coeffs(col, basis, opts.min_increment)
    zeros = np.zeros(data.n_markers)
    return lay.pack(inverse_reparam(theta), zeros, zeros, np.zeros((spec.n_scope, lay.K)))


STALL_GRAD_FACTOR = 100.0


def fit(data: CaseControlData, spec: ModelSpec = ModelSpec(), opts: FitOptions = FitOptions(),
        init=None) -> FittedTda:
    """Maximum-likelihood fit.

    ``init`` may be a fitted model with the same spec or a flat parameter
    vector; otherwise the ECDF-based start is used.  A fit that exhausts the
    iteration budget is returned with ``converged=False``.
    """
    _check_data(data, spec)
    spec = spec.with_bounds(data)
    obj = _Objective(data, spec)
    if init is None:
        x0 = initial_params(data, spec, opts)
    elif isinstance(init, FittedTda):
        x0 = init.flat_params()
    else:
        x0 = np.asarray(init, dtype=float).copy()
    if x0.size != obj.layout.size:
        raise ValueError(f"initial vector has {x0.size} entries, expected {obj.layout.size}")

    N = float(data.n)

    def f(x):
        val, grad = obj(x)
        if not np.isfinite(val):
            return np.inf, np.zeros_like(x)
        return -val / N, -grad / N

    x, n_iter, stalled = x0, 0, False
    f_prev = np.inf
    for _ in range(3):
        res = optimize.minimize(f, x, jac=True, method="L-BFGS-B",
                                options=dict(maxiter=opts.maxiter - n_iter, maxcor=20,
                                             ftol=opts.ftol * 1e-2, gtol=opts.gtol))
        n_iter += int(res.nit)
        x = res.x
        gmax = float(np.max(np.abs(res.jac))) if res.jac.size else 0.0
        if gmax < opts.gtol or n_iter >= opts.maxiter:
            break
        # a restart that no longer moves the objective means we sit on a flat ridge
        if f_prev - res.fun <= opts.ftol * max(1.0, abs(res.fun)):
            stalled = True
            break
        f_prev = res.fun
        # stopped on the function tolerance with a large gradient: restart with fresh curvature memory
    ok = gmax < opts.gtol or (stalled and gmax < STALL_GRAD_FACTOR * opts.gtol)
    converged = bool(ok and np.isfinite(res.fun))
    raw, delta, gamma, lams = obj.layout.unpack(x)
    return FittedTda(spec, monotone_reparam(raw), delta, gamma, lams, data.marker_names,
                     loglik=-res.fun * N, n_params=obj.layout.size, converged=converged,
                     n_iter=n_iter, grad_norm=gmax)


def fit_or_raise(data: CaseControlData, spec: ModelSpec = ModelSpec(), **kwargs) -> FittedTda:
    model = fit(data, spec, **kwargs)
    if not model.converged:
        raise NonConvergenceError(f"no convergence after {model.n_iter} iterations")
    return model
