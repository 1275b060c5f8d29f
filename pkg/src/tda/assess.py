"""Goodness of fit through the Rosenblatt transformation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .data import CaseControlData
from .errors import InsufficientDataError
from .model import FittedTda
from .scoring import resolve_markers, subset_model

MIN_ROWS = 10
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class RosenblattReport:
    """Sequential probability integral transforms of one class.

    ``u[:, j]`` conditions marker ``order[j]`` on the markers before it.
    """

    disease: int
    order: tuple
    u: np.ndarray
    ks_stat: np.ndarray
    ks_pvalue: np.ndarray
    n_skipped: int

    def to_csv(self, path) -> None:
        """Per-coordinate ECDF points, one row per observation."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["class", "marker", "u", "ecdf"])
            n = self.u.shape[0]
            for j, name in enumerate(self.order):
                for i, v in enumerate(np.sort(self.u[:, j]), start=1):
                    w.writerow([self.disease, name, repr(float(v)), repr(i / n)])


def rosenblatt(model: FittedTda, data: CaseControlData, d: int, order=None) -> RosenblattReport:
    """Rosenblatt transform of the complete class-``d`` rows plus KS uniformity tests.

    ``order`` lists marker names or indices in conditioning order; the
    data's column order is the default.
    """
    if d not in (0, 1):
        raise ValueError("class must be 0 or 1")
    idx = list(range(model.n_markers)) if order is None else resolve_markers(model, order)
    sub = subset_model(model, idx)
    rows = data.disease == d
    vals = data.values[rows][:, idx]
    complete = ~np.isnan(vals).any(axis=1)
    n_skipped = int((~complete).sum())
    vals = vals[complete]
    if vals.shape[0] < MIN_ROWS:
        raise InsufficientDataError(f"{vals.shape[0]} complete rows in class {d}; need {MIN_ROWS}")
    z, _ = sub.transform(vals, d)
    u = np.clip(ndtr(z @ np.asarray(sub.corr(d).whitener).T), _EPS, 1.0 - _EPS)
    ks = [stats.kstest(u[:, j], "uniform", method="asymp") for j in range(u.shape[1])]
    return RosenblattReport(d, sub.marker_names, u, np.array([k.statistic for k in ks]),
                            np.array([k.pvalue for k in ks]), n_skipped)
