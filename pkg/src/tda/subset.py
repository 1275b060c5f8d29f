"""Resource-constrained choice of a biomarker panel by exhaustive enumeration."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import TooManyMarkersError
from .model import CorrelationScope, FittedTda, MarginalFamily
from .scoring import model_auc, subset_model

MAX_MARKERS = 25
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ResourceProblem:
    """``usage[k, j]`` units of resource ``k`` per marker ``j``; ``budget[k]`` available."""

    delta: np.ndarray
    sigma: np.ndarray
    usage: np.ndarray
    budget: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float).ravel()
        J = delta.size
        sigma = np.asarray(self.sigma, dtype=float).reshape(J, J)
        usage = np.array(self.usage, dtype=float, ndmin=2)
        budget = np.asarray(self.budget, dtype=float).ravel()
        if usage.shape != (budget.size, J):
            raise ValueError(f"usage must have shape ({budget.size}, {J}), got {usage.shape}")
        if np.any(usage < 0) or np.any(budget < 0):
            raise ValueError("resource usage and budgets must be nonnegative")
        if not np.allclose(np.diag(sigma), 1.0) or not np.allclose(sigma, sigma.T):
            raise ValueError("sigma must be a symmetric matrix with unit diagonal")
        if np.linalg.eigvalsh(sigma).min() <= 0:
            raise ValueError("sigma must be positive definite")
        for name, a in (("delta", delta), ("sigma", sigma), ("usage", usage), ("budget", budget)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_markers(self) -> int:
        return self.delta.size

    def feasible(self, s) -> bool:
        return bool(np.all(self.usage @ np.asarray(s, dtype=float) <= self.budget))

    @classmethod
    def from_model(cls, model: FittedTda, usage, budget) -> "ResourceProblem":
        if model.spec.family is not MarginalFamily.LOCATION or model.spec.scope is not CorrelationScope.GLOBAL:
            raise ValueError("the closed-form objective needs a location model with a shared correlation")
        return cls(model.delta, model.corr(0).sigma, usage, budget)


def subset_auc(delta, sigma, s) -> float:
    """Binormal AUC of the markers flagged in ``s``, using the sub-matrix of ``sigma``."""
    idx = np.flatnonzero(np.asarray(s))
    if idx.size == 0:
        return 0.5
    d = np.asarray(delta)[idx]
    q = float(d @ np.linalg.solve(np.asarray(sigma)[np.ix_(idx, idx)], d))
    return float(ndtr(np.sqrt(max(q, 0.0) / 2.0)))


def _better(a, s, best_a, best_s) -> bool:
    if best_s is None:
        return True
    if a > best_a * (1 + TIE_RTOL) + TIE_RTOL:
        return True
    if abs(a - best_a) <= TIE_RTOL * max(1.0, abs(best_a)):
        ks, kb = int(s.sum()), int(best_s.sum())
        if ks != kb:
            return ks < kb
        # lexicographically smallest 0/1 vector
        return tuple(s) < tuple(best_s)
    return False


def optimize_subset(problem: ResourceProblem, objective=None):
    """Best feasible marker set.

    Returns ``(s, auc)`` with ``s`` a 0/1 vector.  Ties within a relative
    ``1e-12`` prefer fewer markers, then the lexicographically smallest
    vector.  ``objective`` maps a 0/1 vector to a value to maximise; the
    default is the binormal AUC of the selected markers.
    """
    J = problem.n_markers
    if J > MAX_MARKERS:
        raise TooManyMarkersError(f"{J} markers exceed the enumeration limit of {MAX_MARKERS}")
    if objective is None:
        objective = lambda s: subset_auc(problem.delta, problem.sigma, s)  # noqa: E731
    best_a, best_s = None, None
    for bits in itertools.product((0, 1), repeat=J):
        s = np.array(bits, dtype=int)
        if not problem.feasible(s):
            continue
        a = objective(s)
        if _better(a, s, best_a, best_s):
            best_a, best_s = a, s
    return best_s, float(best_a)


def model_objective(model: FittedTda, **kwargs):
    """Objective for any fitted model: the model AUC of the selected markers."""
    def f(s):
        idx = np.flatnonzero(s)
        return 0.5 if idx.size == 0 else model_auc(subset_model(model, idx), **kwargs)

    return f


def read_resources(resources_path, budgets_path, marker_names):
    """Resource matrix CSV (header = marker names, one row per resource) and budget CSV (one column)."""
    with open(resources_path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    label = None
    if header and header[0] not in marker_names:
        label, header = header[0], header[1:]
    missing = [m for m in marker_names if m not in header]
    if missing:
        raise ValueError(f"resource file lacks markers {missing}")
    order = [header.index(m) for m in marker_names]
    usage = []
    for r in rows[1:]:
        if not r or all(not c.strip() for c in r):
            continue
        vals = r[1:] if label is not None else r
        usage.append([float(vals[i]) for i in order])
    with open(budgets_path, newline="") as fh:
        brows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    budget = []
    for r in brows:
        try:
            budget.append(float(r[-1]))
        except ValueError:
            continue  # header row
    return np.array(usage), np.array(budget)
