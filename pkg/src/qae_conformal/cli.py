"""Command-line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 hypothesis or domain
failure, 3 some experiment repeats failed.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from . import bounds as B
from .errors import DomainError, HypothesisError
from .harness import CsvError, RunConfig, parse_value, read_config_file, run_real, run_synthetic
from .plot import render_boxplot

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_PARTIAL = 0, 1, 2, 3

_HELP = {
    "scenario": "linear-3d | heteroscedastic-1d | quadratic-nn",
    "noise": "normal | mix-normal | pareto | mix-pareto",
    "methods": "comma-separated: split-cp, split-cp-huber, effort, lw-cp, cqr, ad-effort",
    "kind": "auto | linear | mlp",
    "knn_k": "neighbours for k-NN ingredients (0 = ceil(sqrt(n)))",
    "fixed_theta": "keep the linear coefficients fixed across repeats",
    "center_noise": "subtract the analytic noise mean when it exists",
    "sub_split": "learn the Ad-EffOrt residual quantile on a separate half of the learn split",
    "jobs": "worker processes; output does not depend on it",
}

_REAL_ONLY = {"learn_frac", "cal_frac", "outlier_frac", "outlier_mean_mult"}
_SYNTH_ONLY = {"scenario", "noise", "n_lrn", "n_cal", "n_test", "fixed_theta", "center_noise"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p, skip):
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    for f in fields(RunConfig):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None,
                           help=_HELP.get(f.name))
        else:
            p.add_argument(flag, dest=f.name, default=None, help=_HELP.get(f.name),
                           type=(lambda text, key=f.name: parse_value(key, text)))
    p.add_argument("--out", default="results.csv", help="result CSV path")
    p.add_argument("--summary", help="JSON file with config echo and aggregates (default: CSV path with .json)")


def _effective_config(args, skip, **forced) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        if f.name not in skip and getattr(args, f.name, None) is not None:
            values[f.name] = getattr(args, f.name)
    values.update(forced)
    return RunConfig(**values)


def _finish(report, args, normalize=False):
    report.write_csv(args.out)
    report.write_json(args.summary or Path(args.out).with_suffix(".json"))
    print(report.table(normalize=normalize))
    for r in report.failed:
        print(f"repeat {r.repeat} {r.method}: {r.error}", file=sys.stderr)
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_run_synthetic(args):
    cfg = _effective_config(args, _REAL_ONLY)
    return _finish(run_synthetic(cfg), args)


def cmd_run_real(args):
    cfg = _effective_config(args, _SYNTH_ONLY, scenario="real")
    report = run_real(args.csv, cfg)
    if args.normalize:
        print("lengths normalized by the largest mean length over all methods and repeats")
    return _finish(report, args, normalize=args.normalize)


def _holder(args):
    return B.HolderParams(L=args.L, gamma=args.gamma, r=args.r)


def _complexity(args):
    return B.Complexity(finite_class=args.finite_class, vc=args.vc, rademacher=args.rademacher)


def cmd_bounds(args):
    which = args.bound
    rows = []
    if which == "dkw":
        rows.append(("dkw_epsilon", B.dkw_epsilon(args.n, args.delta)))
    elif which == "phi":
        rows.append(("phi", B.phi_closed_form(_complexity(args), args.n, args.delta)))
    elif which == "prop31":
        lvl = B.conservative_oracle_level(args.n_cal, args.alpha, args.delta)
        rows.append(("oracle_level", lvl.level))
        rows.append(("hypothesis (n_c+1)(1-α) not an integer", "FAILED" if lvl.integer_rank else "ok"))
        if lvl.saturated:
            rows.append(("saturated at 1", "yes"))
    elif which == "cor31":
        rows.append(("hypothesis " + B.CAL_HYPOTHESIS, "ok"))
        rows.append(("excess_length", B.excess_volume_bound_fixed_f(args.n_cal, args.alpha, args.delta, _holder(args))))
    elif which == "theorem1":
        ev = B.effort_excess_volume_bound(args.n_cal, args.n_learn, args.alpha, args.delta, _holder(args), _complexity(args))
        rows += [
            ("hypothesis " + B.CAL_HYPOTHESIS, "ok"),
            ("hypothesis " + B.PHI_HYPOTHESIS, "ok"),
            ("calibration_term", ev.calibration),
            ("learning_term", ev.learning),
            ("excess_length", ev.total),
            ("dominant", ev.dominant),
        ]
    elif which == "nested":
        rows.append(("hypothesis " + B.NESTED_HYPOTHESIS, "ok"))
        rows.append(("excess_length", B.nested_length_bound(args.a, args.b, args.n_cal, args.alpha, args.delta, _holder(args))))
    elif which == "theorem2":
        rows.append(("hypothesis " + B.JOINT_CAL_HYPOTHESIS, "ok"))
        rows.append(("hypothesis " + B.JOINT_PHI_HYPOTHESIS, "ok"))
        rows.append(("excess_length", B.joint_excess_volume_bound(args.psi, args.phi, args.n_cal, args.delta, _holder(args))))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k.ljust(width)}  {v:.{args.digits}g}" if isinstance(v, float) else f"{k.ljust(width)}  {v}")
    if which == "prop31" and B.conservative_oracle_level(args.n_cal, args.alpha, args.delta).integer_rank:
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_plot(args):
    render_boxplot(args.reports, args.output, metric=args.metric, title=args.title)
    print(args.output)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="qae-conformal", description="Efficiency-oriented split conformal regression.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("run-synthetic", help="repeat a synthetic benchmark")
    _add_run_flags(s, _REAL_ONLY)
    s.set_defaults(func=cmd_run_synthetic)

    r = sub.add_parser("run-real", help="repeated 40/40/20 splits of a CSV dataset (response last)")
    r.add_argument("csv")
    _add_run_flags(r, _SYNTH_ONLY)
    r.add_argument("--normalize", action="store_true", help="print lengths divided by the largest one")
    r.set_defaults(func=cmd_run_real)

    b = sub.add_parser("bounds", help="evaluate a closed-form bound")
    bsub = b.add_subparsers(dest="bound", required=True, parser_class=_Parser)

    def common(q, n=False, cal=False, alpha=False, holder=False, complexity=False):
        q.add_argument("--delta", type=float, required=True)
        q.add_argument("--digits", type=int, default=4, help="significant digits printed")
        if n:
            q.add_argument("--n", type=int, required=True)
        if cal:
            q.add_argument("--n-cal", type=int, required=True)
        if alpha:
            q.add_argument("--alpha", type=float, default=0.1)
        if holder:
            q.add_argument("--L", type=float, default=1.0)
            q.add_argument("--gamma", type=float, default=1.0)
            q.add_argument("--r", type=float, default=1.0)
        if complexity:
            g = q.add_mutually_exclusive_group(required=True)
            g.add_argument("--finite-class", type=int)
            g.add_argument("--vc", type=int)
            g.add_argument("--rademacher", type=float)
        q.set_defaults(func=cmd_bounds)

    common(bsub.add_parser("dkw", help="DKW band width"), n=True)
    common(bsub.add_parser("phi", help="uniform deviation term"), n=True, complexity=True)
    common(bsub.add_parser("prop31", help="conservative oracle coverage level"), cal=True, alpha=True)
    common(bsub.add_parser("cor31", help="excess length for a fixed predictor"), cal=True, alpha=True, holder=True)
    t1 = bsub.add_parser("theorem1", help="excess length of the QAE-trained interval")
    t1.add_argument("--n-learn", type=int, required=True)
    common(t1, cal=True, alpha=True, holder=True, complexity=True)
    nb = bsub.add_parser("nested", help="excess mean length for nested sets")
    nb.add_argument("--a", type=float, required=True)
    nb.add_argument("--b", type=float, default=0.0)
    common(nb, cal=True, alpha=True, holder=True)
    t2 = bsub.add_parser("theorem2", help="excess mean length for jointly learned (f, s)")
    t2.add_argument("--psi", type=float, required=True)
    t2.add_argument("--phi", type=float, required=True)
    common(t2, cal=True, holder=True)

    pl = sub.add_parser("plot", help="SVG boxplots of result CSVs")
    pl.add_argument("reports", nargs="+")
    pl.add_argument("-o", "--output", required=True)
    pl.add_argument("--metric", default="mean_length", choices=("mean_length", "coverage"))
    pl.add_argument("--title")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (CsvError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
