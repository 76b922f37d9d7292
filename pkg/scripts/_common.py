"""Shared driver: one report per noise law, plus a boxplot of lengths."""
import argparse
from dataclasses import replace
from pathlib import Path

from qae_conformal.harness import RunConfig, run_synthetic
from qae_conformal.plot import render_boxplot
from qae_conformal.synth import NOISE_LAWS


def parse_args(description, repeats=50):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--repeats", type=int, default=repeats)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--laws", default=",".join(NOISE_LAWS), help="comma-separated noise laws")
    return p.parse_args()


def sweep(base: RunConfig, args, tag):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for law in args.laws.split(","):
        cfg = replace(base, noise=law, repeats=args.repeats, seed=args.seed, jobs=args.jobs)
        report = run_synthetic(cfg)
        path = out / f"{tag}-{law}.csv"
        report.write_csv(path)
        report.write_json(path.with_suffix(".json"))
        print(f"\n== {tag} / {law} ==")
        print(report.table())
        paths.append(path)
    render_boxplot(paths, out / f"{tag}-lengths.svg", title=f"{tag}: mean interval length")
    render_boxplot(paths, out / f"{tag}-coverage.svg", metric="coverage", title=f"{tag}: coverage")
    return paths
