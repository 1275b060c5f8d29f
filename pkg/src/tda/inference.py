"""Parametric-bootstrap confidence intervals."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateDataError, TooManyFailuresError
from .model import FitOptions, FittedTda, fit
from .scoring import model_auc, resolve_markers, subset_model

MIN_REPLICATES = 100


@dataclass(frozen=True)
class Statistic:
    name: str
    extract: Callable[[FittedTda], float]


def parse_statistic(name: str, model: FittedTda) -> Statistic:
    """Build an extractor from a name.

    Recognised forms: ``auc``, ``auc:m1,m2`` (subset AUC), ``delta:m``,
    ``gamma:m``, ``corr:m1,m2`` (class 0 correlation) and
    ``corr1:m1,m2`` (class 1).  Markers are names or zero-based indices.
    """
    kind, _, arg = name.partition(":")
    items = [a.strip() for a in arg.split(",")] if arg else []
    if kind == "auc":
        if not items:
            return Statistic(name, model_auc)
        idx = resolve_markers(model, items)
        return Statistic(name, lambda m: model_auc(subset_model(m, idx)))
    if kind in ("delta", "gamma") and len(items) == 1:
        j = resolve_markers(model, items)[0]
        return Statistic(name, lambda m: float(getattr(m, kind)[j]))
    if kind in ("corr", "corr1") and len(items) == 2:
        a, b = resolve_markers(model, items)
        d = 1 if kind == "corr1" else 0
        return Statistic(name, lambda m: float(m.corr(d).sigma[a, b]))
    raise ValueError(f"unknown statistic {name!r}")


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    statistic: str
    estimate: float
    replicates: np.ndarray
    ci_low: float
    ci_high: float
    level: float
    n_failed: int

    @property
    def B(self) -> int:
        return self.replicates.size + self.n_failed

    def csv_row(self) -> list:
        return [self.statistic, repr(self.estimate), repr(self.ci_low), repr(self.ci_high),
                repr(self.level), self.B, self.n_failed]


CSV_HEADER = ["statistic", "estimate", "low", "high", "level", "B", "n_failed"]


def write_results(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in results:
            w.writerow(r.csv_row())


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Generator for replicate ``b``, independent of how replicates are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def _one_replicate(model, n0, n1, seed, b, opts, warm_start):
    sim = model.simulate(n0, n1, replicate_rng(seed, b))
    try:
        refit = fit(sim, model.spec, opts, init=model if warm_start else None)
    except DegenerateDataError:
        return None
    return refit if refit.converged else None


def bootstrap_models(model: FittedTda, n0: int, n1: int, B: int, seed: int,
                     opts: FitOptions = FitOptions(), warm_start: bool = True, workers: int = 1):
    """Refitted models (``None`` for failed refits), ordered by replicate index."""
    args = [(model, n0, n1, seed, b, opts, warm_start) for b in range(B)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_one_replicate, *zip(*args)))
    return [_one_replicate(*a) for a in args]


def percentile_interval(values, level: float):
    alpha = 1.0 - level
    lo, hi = np.quantile(np.asarray(values, dtype=float), [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def parametric_bootstrap(model: FittedTda, n0: int, n1: int, B: int, statistic, level: float = 0.95,
                         seed: int = 0, opts: FitOptions = FitOptions(), warm_start: bool = True,
                         workers: int = 1, min_replicates: int = MIN_REPLICATES):
    """Percentile bootstrap interval(s) by simulating from ``model`` and refitting.

    ``statistic`` is a name, a :class:`Statistic`, or a list of either; a
    list returns one result per statistic from the same replicates.
    """
    if B < min_replicates:
        raise ValueError(f"at least {min_replicates} replicates required, got {B}")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    single = not isinstance(statistic, (list, tuple))
    stats = [s if isinstance(s, Statistic) else parse_statistic(s, model)
             for s in ([statistic] if single else statistic)]
    refits = bootstrap_models(model, n0, n1, B, seed, opts, warm_start, workers)
    ok = [m for m in refits if m is not None]
    n_failed = B - len(ok)
    if n_failed > B / 10:
        raise TooManyFailuresError(f"{n_failed} of {B} refits failed")
    out = []
    for s in stats:
        reps = np.array([s.extract(m) for m in ok])
        lo, hi = percentile_interval(reps, level)
        out.append(BootstrapResult(s.name, float(s.extract(model)), reps, lo, hi, level, n_failed))
    return out[0] if single else out
