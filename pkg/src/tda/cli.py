"""Command-line interface.

Summaries go to stdout as ``key=value`` lines, tables to files, and
diagnostics to stderr.  Exit codes: 0 success, 1 other failure, 2 usage or
input-format error, 3 non-convergence (the model is still written),
4 degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .assess import rosenblatt
from .data import read_csv, read_marker_table, write_csv
from .errors import DataFormatError, DegenerateDataError, NonConvergenceError, TdaError
from .inference import parametric_bootstrap, write_results
from .model import FitOptions, FittedTda, MarginalFamily, ModelSpec, fit
from .scoring import default_grid, log_lr, model_auc, model_roc, resolve_markers, subset_model
from .simgen.config import parse_config, run_experiments
from .simgen.holdout import holdout_eval, write_tidy
from .simgen.scenarios import Scenario, generate
from .subset import ResourceProblem, model_objective, optimize_subset, read_resources

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV, EXIT_DEGENERATE = 0, 1, 2, 3, 4


def _order(text: str) -> int:
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be an integer, got {text!r}") from None
    if not 1 <= m <= 20:
        raise argparse.ArgumentTypeError(f"order must be between 1 and 20, got {m}")
    return m


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def _markers(text: str):
    return [t.strip() for t in text.split(",") if t.strip()]


def _emit(**kv) -> None:
    for k, v in kv.items():
        if isinstance(v, float):
            v = repr(v)
        elif isinstance(v, bool):
            v = str(v).lower()
        print(f"{k}={v}")


def _load_model(path) -> FittedTda:
    try:
        return FittedTda.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from None


def _model_subset(model: FittedTda, markers):
    if not markers:
        return model
    return subset_model(model, resolve_markers(model, markers))


def cmd_fit(args) -> int:
    data = read_csv(args.data, args.disease_col)
    spec = ModelSpec(args.family, args.corr, args.order)
    model = fit(data, spec, FitOptions(maxiter=args.maxiter))
    model.save(args.out)
    _emit(model=spec.label, loglik=float(model.loglik), n_params=model.n_params,
          converged=model.converged, n_iter=model.n_iter)
    if not model.converged:
        print(f"error: optimizer did not converge in {model.n_iter} iterations; model written", file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def cmd_score(args) -> int:
    model = _load_model(args.model)
    values, disease = read_marker_table(args.data, model.marker_names, args.disease_col)
    scores = log_lr(model, values)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["row", "log_lr"]
        if disease is not None:
            header.append("disease")
        if args.threshold is not None:
            header.append("decision")
        w.writerow(header)
        for i, s in enumerate(scores):
            row = [i + 1, repr(float(s))]
            if disease is not None:
                row.append(int(disease[i]))
            if args.threshold is not None:
                row.append(int(s > args.threshold))
            w.writerow(row)
    _emit(n=len(scores), mean_log_lr=float(np.mean(scores)))
    return EXIT_OK


def _require_seed_for_free(model, seed):
    if model.spec.family is MarginalFamily.FREE and seed is None:
        raise argparse.ArgumentTypeError("free-family models are evaluated by simulation; pass --seed")


def cmd_roc(args) -> int:
    model = _model_subset(_load_model(args.model), args.markers)
    _require_seed_for_free(model, args.seed)
    seed = 0 if args.seed is None else args.seed
    roc = model_roc(model, default_grid(args.grid), seed=seed)
    roc.to_csv(args.out)
    _emit(markers=",".join(model.marker_names), auc=model_auc(model, seed=seed), auc_trapezoid=roc.auc,
          grid=args.grid)
    return EXIT_OK


def _counts(args):
    if args.data is not None:
        return read_csv(args.data, args.disease_col).class_counts()
    if args.n0 is None or args.n1 is None:
        raise argparse.ArgumentTypeError("give --data or both --n0 and --n1 for the simulated sample sizes")
    return args.n0, args.n1


def cmd_auc(args) -> int:
    full = _load_model(args.model)
    model = _model_subset(full, args.markers)
    _require_seed_for_free(model, args.seed)
    auc = model_auc(model, seed=0 if args.seed is None else args.seed)
    out = dict(markers=",".join(model.marker_names), auc=auc)
    if args.bootstrap:
        if args.seed is None:
            raise argparse.ArgumentTypeError("--bootstrap needs --seed")
        n0, n1 = _counts(args)
        stat = "auc" if not args.markers else "auc:" + ",".join(args.markers)
        res = parametric_bootstrap(full, n0, n1, args.bootstrap, stat, args.level, args.seed)
        out.update(ci_low=res.ci_low, ci_high=res.ci_high, level=args.level, B=args.bootstrap,
                   n_failed=res.n_failed)
    _emit(**out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    data = generate(args.scenario, args.n // 2, args.n - args.n // 2, args.seed)
    write_csv(data, args.out, args.disease_col)
    c0, c1 = data.class_counts()
    _emit(scenario=args.scenario, n0=c0, n1=c1, seed=args.seed)
    return EXIT_OK


def cmd_holdout(args) -> int:
    data = read_csv(args.data, args.disease_col)
    res = holdout_eval(data, args.methods, args.reps, args.seed)
    write_tidy(res.tidy_rows(args.scenario, data.n), args.out)
    summary = res.summary()
    for m in res.methods:
        q1, med, q3 = summary[m]
        _emit(**{f"{m}.median": med, f"{m}.q1": q1, f"{m}.q3": q3, f"{m}.failed": res.errors[m]})
    return EXIT_OK


def cmd_assess(args) -> int:
    model = _load_model(args.model)
    values, disease = read_marker_table(args.data, model.marker_names, args.disease_col)
    if disease is None:
        raise DataFormatError(f"disease column {args.disease_col!r} not found")
    from .data import CaseControlData

    data = CaseControlData.from_arrays(values, disease, model.marker_names)
    rep = rosenblatt(model, data, args.cls, args.order)
    rep.to_csv(args.out)
    out = {"class": args.cls, "order": ",".join(rep.order), "n": rep.u.shape[0], "skipped": rep.n_skipped}
    for name, ks, p in zip(rep.order, rep.ks_stat, rep.ks_pvalue):
        out[f"{name}.ks"] = float(ks)
        out[f"{name}.p"] = float(p)
    _emit(**out)
    return EXIT_OK


def cmd_select(args) -> int:
    model = _load_model(args.model)
    usage, budget = read_resources(args.resources, args.budgets, model.marker_names)
    closed = model.spec.family is MarginalFamily.LOCATION and model.spec.scope.value == "global"
    problem = ResourceProblem(model.delta, model.corr(0).sigma, usage, budget)
    s, auc = optimize_subset(problem, None if closed else model_objective(model))
    chosen = [n for n, b in zip(model.marker_names, s) if b]
    _emit(selected=",".join(chosen) if chosen else "NA", auc=auc,
          usage=",".join(repr(float(u)) for u in usage @ s))
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    model = _load_model(args.model)
    n0, n1 = _counts(args)
    results = parametric_bootstrap(model, n0, n1, args.B, list(args.stat), args.level, args.seed,
                                   workers=args.workers)
    write_results(results, args.out)
    for r in results:
        _emit(**{f"{r.statistic}.estimate": r.estimate, f"{r.statistic}.low": r.ci_low,
                 f"{r.statistic}.high": r.ci_high})
    _emit(B=args.B, n_failed=results[0].n_failed)
    return EXIT_OK


def cmd_experiment(args) -> int:
    with open(args.config) as fh:
        experiments = parse_config(fh.read())
    rows = run_experiments(experiments)
    write_tidy(rows, args.out)
    _emit(experiments=len(experiments), rows=len(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tda", description="Transformation discriminant analysis")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp, required=True):
        sp.add_argument("--data", required=required)
        sp.add_argument("--disease-col", default="disease")

    sp = sub.add_parser("fit", help="fit a model to case-control data")
    data_args(sp)
    sp.add_argument("--family", choices=[f.value for f in MarginalFamily], default="loc")
    sp.add_argument("--corr", choices=["global", "per-disease"], default="global")
    sp.add_argument("--order", type=_order, default=6)
    sp.add_argument("--maxiter", type=_positive, default=2000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("score", help="log likelihood-ratio score per row")
    sp.add_argument("--model", required=True)
    data_args(sp)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("roc", help="model-based ROC curve")
    sp.add_argument("--model", required=True)
    sp.add_argument("--markers", type=_markers)
    sp.add_argument("--grid", type=_positive, default=2001)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_roc)

    sp = sub.add_parser("auc", help="model-based AUC, optionally with a bootstrap interval")
    sp.add_argument("--model", required=True)
    sp.add_argument("--markers", type=_markers)
    sp.add_argument("--bootstrap", type=_positive)
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--seed", type=int)
    data_args(sp, required=False)
    sp.add_argument("--n0", type=_positive)
    sp.add_argument("--n1", type=_positive)
    sp.set_defaults(func=cmd_auc)

    sp = sub.add_parser("simulate", help="simulate a scenario to CSV")
    sp.add_argument("--scenario", required=True, choices=[s.value for s in Scenario])
    sp.add_argument("--n", type=_positive, required=True, help="total rows, split evenly between classes")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--disease-col", default="disease")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("holdout", help="repeated 50-50 holdout comparison of methods")
    data_args(sp)
    sp.add_argument("--methods", type=_markers, required=True)
    sp.add_argument("--reps", type=_positive, default=1000)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--scenario", default="data", help="label written to the scenario column")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_holdout)

    sp = sub.add_parser("assess", help="Rosenblatt goodness-of-fit diagnostics")
    sp.add_argument("--model", required=True)
    data_args(sp)
    sp.add_argument("--class", dest="cls", type=int, choices=[0, 1], required=True)
    sp.add_argument("--order", type=_markers)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_assess)

    sp = sub.add_parser("select", help="best marker subset under resource budgets")
    sp.add_argument("--model", required=True)
    sp.add_argument("--resources", required=True)
    sp.add_argument("--budgets", required=True)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("bootstrap", help="parametric bootstrap intervals")
    sp.add_argument("--model", required=True)
    data_args(sp, required=False)
    sp.add_argument("--n0", type=_positive)
    sp.add_argument("--n1", type=_positive)
    sp.add_argument("--B", type=_positive, default=1000)
    sp.add_argument("--stat", action="append", required=True)
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--workers", type=_positive, default=1)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_bootstrap)

    sp = sub.add_parser("experiment", help="run simulation experiments from a YAML config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except TdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
