"""Repeated stratified holdout evaluation of scoring methods."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..data import CaseControlData
from ..errors import TdaError
from ..model import CorrelationScope, MarginalFamily, ModelSpec, fit
from ..scoring import empirical_auc, log_lr
from .baselines import lda_fit, logistic_fit, qda_fit
from .scenarios import generate

Scorer = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Method:
    name: str
    train: Callable[[CaseControlData], Scorer]


def _tda_method(name: str, family: MarginalFamily, scope: CorrelationScope, order: int) -> Method:
    spec = ModelSpec(family, scope, order)

    def train(data: CaseControlData) -> Scorer:
        model = fit(data, spec)
        return lambda y: log_lr(model, y)

    return Method(name, train)


def _logistic(data: CaseControlData) -> Scorer:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return logistic_fit(data.values, data.disease)


_FAMILIES = {"s": MarginalFamily.FREE, "l": MarginalFamily.LOCATION, "": MarginalFamily.LOCATION,
             "ls": MarginalFamily.LOCATION_SCALE}


def make_method(name: str, order: int = 6) -> Method:
    """Method by name: ``lda``, ``qda``, ``logistic``, ``constant``, or a
    model label such as ``lTDA``, ``TDA_d``, ``lsTDA``, ``sTDA_d``."""
    key = name.strip()
    low = key.lower()
    if low == "lda":
        return Method(key, lambda data: lda_fit(data.values, data.disease))
    if low == "qda":
        return Method(key, lambda data: qda_fit(data.values, data.disease))
    if low in ("logistic", "lr"):
        return Method(key, _logistic)
    if low == "constant":
        return Method(key, lambda data: (lambda y: np.zeros(len(y))))
    base, per = (low[:-2], True) if low.endswith("_d") else (low, False)
    if base.endswith("tda") and base[:-3] in _FAMILIES:
        scope = CorrelationScope.PER_DISEASE if per else CorrelationScope.GLOBAL
        return _tda_method(key, _FAMILIES[base[:-3]], scope, order)
    raise ValueError(f"unknown method {name!r}")


def stratified_split(disease, rng):
    """Boolean training mask holding half of each class (rounded down)."""
    disease = np.asarray(disease)
    train = np.zeros(disease.size, bool)
    for d in (0, 1):
        idx = np.flatnonzero(disease == d)
        train[rng.permutation(idx)[: idx.size // 2]] = True
    return train


@dataclass(frozen=True, eq=False)
class HoldoutResult:
    methods: tuple
    auc: np.ndarray
    errors: dict = field(default_factory=dict)

    def column(self, method: str) -> np.ndarray:
        a = self.auc[:, self.methods.index(method)]
        return a[~np.isnan(a)]

    def summary(self) -> dict:
        """Quartiles of the out-of-sample AUC per method."""
        out = {}
        for m in self.methods:
            a = self.column(m)
            out[m] = tuple(np.quantile(a, [0.25, 0.5, 0.75]).tolist()) if a.size else (np.nan,) * 3
        return out

    def median(self, method: str) -> float:
        return float(np.median(self.column(method)))

    def tidy_rows(self, scenario: str = "", n: int | str = ""):
        for r in range(self.auc.shape[0]):
            for k, m in enumerate(self.methods):
                v = self.auc[r, k]
                yield [scenario, m, n, r, "NA" if np.isnan(v) else repr(float(v))]


TIDY_HEADER = ["scenario", "method", "N", "rep", "oos_auc"]


def write_tidy(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIDY_HEADER)
        w.writerows(rows)


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def holdout_eval(data: CaseControlData, methods, reps: int, seed: int) -> HoldoutResult:
    """Out-of-sample AUC of each method over ``reps`` random 50-50 stratified splits.

    A method that raises a package error on a split gets NaN for that
    replication; the count is kept in ``errors``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    methods = [make_method(m) if isinstance(m, str) else m for m in methods]
    auc = np.full((reps, len(methods)), np.nan)
    errors = {m.name: 0 for m in methods}
    for r in range(reps):
        train = stratified_split(data.disease, rep_rng(seed, r))
        tr, te = data.rows(np.flatnonzero(train)), data.rows(np.flatnonzero(~train))
        for k, m in enumerate(methods):
            try:
                s = np.asarray(m.train(tr)(te.values), dtype=float)
            except (TdaError, np.linalg.LinAlgError, ValueError):
                errors[m.name] += 1
                continue
            auc[r, k] = empirical_auc(s[te.disease == 0], s[te.disease == 1])
    return HoldoutResult(tuple(m.name for m in methods), auc, errors)


def scenario_eval(scenario, n: int, methods, reps: int, seed: int, test_n: int | None = None) -> HoldoutResult:
    """Fresh train/test data per replication: ``n`` training rows, ``test_n`` test rows.

    Training and test sets are balanced across classes (for logistic
    scenarios the totals are used and labels drawn at random).
    """
    methods = [make_method(m) if isinstance(m, str) else m for m in methods]
    test_n = n if test_n is None else test_n
    auc = np.full((reps, len(methods)), np.nan)
    errors = {m.name: 0 for m in methods}
    for r in range(reps):
        ss = np.random.SeedSequence(seed, spawn_key=(r,))
        s_train, s_test = ss.spawn(2)
        tr = generate(scenario, n // 2, n - n // 2, s_train)
        te = generate(scenario, test_n // 2, test_n - test_n // 2, s_test)
        for k, m in enumerate(methods):
            try:
                s = np.asarray(m.train(tr)(te.values), dtype=float)
            except (TdaError, np.linalg.LinAlgError, ValueError):
                errors[m.name] += 1
                continue
            auc[r, k] = empirical_auc(s[te.disease == 0], s[te.disease == 1])
    return HoldoutResult(tuple(m.name for m in methods), auc, errors)
