"""Declarative experiment configurations.

A config is a YAML mapping with an ``experiments`` list; each entry names a
scenario and may override ``n``, ``test_n``, ``reps``, ``seed`` and
``methods``::

    defaults:
      reps: 100
      methods: [lTDA, lda]
    experiments:
      - scenario: A
        n: 200
        seed: 1
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .holdout import scenario_eval
from .scenarios import scenario_from_name

DEFAULTS = {"n": 200, "test_n": None, "reps": 100, "seed": None, "methods": ["lTDA", "lda"]}


@dataclass(frozen=True)
class Experiment:
    scenario: str
    n: int
    test_n: int
    reps: int
    seed: int
    methods: tuple


def parse_config(text: str) -> list[Experiment]:
    doc = yaml.safe_load(text) or {}
    if not isinstance(doc, dict) or not isinstance(doc.get("experiments"), list):
        raise ValueError("config must be a mapping with an 'experiments' list")
    base = dict(DEFAULTS)
    base.update({k: v for k, v in doc.items() if k in DEFAULTS})
    base.update(doc.get("defaults") or {})
    out = []
    for i, entry in enumerate(doc["experiments"]):
        if not isinstance(entry, dict) or "scenario" not in entry:
            raise ValueError(f"experiment {i} needs a 'scenario'")
        unknown = set(entry) - set(DEFAULTS) - {"scenario"}
        if unknown:
            raise ValueError(f"experiment {i}: unknown keys {sorted(unknown)}")
        e = dict(base)
        e.update(entry)
        if e["seed"] is None:
            raise ValueError(f"experiment {i}: a seed is required")
        n = int(e["n"])
        out.append(Experiment(scenario_from_name(e["scenario"]).value, n,
                              int(e["test_n"]) if e["test_n"] is not None else n,
                              int(e["reps"]), int(e["seed"]), tuple(e["methods"])))
    return out


def run_experiments(experiments):
    """Tidy rows ``(scenario, method, N, rep, oos_auc)`` for every experiment."""
    rows = []
    for ex in experiments:
        res = scenario_eval(ex.scenario, ex.n, list(ex.methods), ex.reps, ex.seed, ex.test_n)
        rows.extend(res.tidy_rows(ex.scenario, ex.n))
    return rows
