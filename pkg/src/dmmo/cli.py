"""Command-line entry point: ``dmmo {run,list-problems,summarize,sweep-alpha}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .baselines import VARIANTS
from .cae import CAEParams
from .core import CONFIGS
from .harness import (
    ExperimentSpec,
    RunSettings,
    parse_rows,
    resolve_out_dir,
    run_experiment,
    run_level_results,
    summarize_dir,
    sweep_alpha,
)
from .problems import PROBLEM_IDS, catalog_json, list_problems
from .stats import render_table, summarize

PROBLEM_CHOICES = ["EXAMPLE", *PROBLEM_IDS]
ALPHA_GRID = [round(0.1 * k, 1) for k in range(1, 10)]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_run_options(p: argparse.ArgumentParser, with_algorithm: bool = True) -> None:
    p.add_argument("--problem", nargs="+", required=True, choices=PROBLEM_CHOICES, metavar="ID",
                   help="one or more of: " + ", ".join(PROBLEM_CHOICES))
    p.add_argument("--config", default="C1", choices=sorted(CONFIGS))
    if with_algorithm:
        p.add_argument("--algorithm", nargs="+", default=["CAE-AN"], choices=list(VARIANTS), metavar="NAME",
                       help="one or more of: " + ", ".join(VARIANTS))
    p.add_argument("--runs", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0, help="base seed; per-run seeds are derived from it")
    p.add_argument("--pop-size", type=_positive_int, default=None, help="default 100 (2 objectives) or 150 (3)")
    p.add_argument("--epsilon", type=float, default=None, help="DBSCAN radius (default 0.1 x box diagonal)")
    p.add_argument("--eta", type=_positive_int, default=5, help="DBSCAN minimum points")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3, help="transfer-model ridge term")
    p.add_argument("--changes", type=_positive_int, default=None, help="number of environments (default 30)")
    p.add_argument("--out", default=None, help="output directory (default $DMMO_OUT or ./results)")
    p.add_argument("--jobs", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmmo", description="Dynamic multimodal multiobjective experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run independent trials and write CSV/JSON results")
    _add_run_options(run)
    run.add_argument("--alpha", type=float, default=0.5, help="niche radius decay factor")

    lp = sub.add_parser("list-problems", help="print the benchmark catalog")
    lp.add_argument("--json", action="store_true")

    sm = sub.add_parser("summarize", help="comparison table from a results directory")
    sm.add_argument("--out", default=None)
    sm.add_argument("--reference", default=None)

    sw = sub.add_parser("sweep-alpha", help="MIGD/MIGDx of the full method across niche decay factors")
    _add_run_options(sw, with_algorithm=False)
    sw.add_argument("--alpha", type=float, nargs="+", default=ALPHA_GRID)
    return parser


def _settings(args) -> RunSettings:
    return RunSettings(pop_size=args.pop_size, alpha=getattr(args, "alpha", 0.5),
                       cae=CAEParams(args.epsilon, args.eta, args.lam), num_changes=args.changes)


def _cmd_run(args) -> int:
    out = resolve_out_dir(args.out)
    spec = ExperimentSpec(args.problem, args.config, args.algorithm, args.runs, args.seed, _settings(args), out)
    run_experiment(spec, args.jobs)
    summary = json.loads((out / "summary.json").read_text())
    print(render_table(summary))
    print(f"results written to {out}")
    return 0


def _cmd_list(args) -> int:
    if args.json:
        print(catalog_json())
        return 0
    print(f"{'id':<8} {'m':>2} {'d':>2} {'type':<9} {'#POS':>4}  POF / POS geometry")
    for p in list_problems():
        print(f"{p.id:<8} {p.n_obj:>2} {p.n_var:>2} {p.dmmf_type.value:<9} {len(p.global_branches):>4}  "
              f"{p.pof_geometry} / {p.pos_geometry}")
    return 0


def _cmd_summarize(args) -> int:
    out = resolve_out_dir(args.out)
    if not (out / "results.csv").exists():
        print(f"dmmo: no results.csv in {out}", file=sys.stderr)
        return 2
    summary = summarize_dir(out)
    if args.reference:
        rows = run_level_results(parse_rows((out / "results.csv").read_text()))
        summary = summarize(rows, reference=args.reference)
    print(render_table(summary))
    return 0


def _cmd_sweep(args) -> int:
    out = resolve_out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for problem in args.problem:
        for r in sweep_alpha(problem, args.config, args.alpha, args.runs, args.seed, _settings(args), args.jobs):
            rows.append({"problem": problem, **r})
    report = []
    print(f"{'problem':<8} {'alpha':>5} {'median MIGD':>12} {'median MIGDx':>13}")
    for problem in args.problem:
        for alpha in args.alpha:
            sel = [r for r in rows if r["problem"] == problem and r["alpha"] == alpha]
            entry = {"problem": problem, "alpha": alpha,
                     "median_migd": float(np.median([r["migd"] for r in sel])),
                     "median_migdx": float(np.median([r["migdx"] for r in sel]))}
            report.append(entry)
            print(f"{problem:<8} {alpha:>5.2f} {entry['median_migd']:>12.4e} {entry['median_migdx']:>13.4e}")
    (out / "alpha_sweep.json").write_text(json.dumps({"runs": rows, "medians": report}, indent=2))
    return 0


COMMANDS = {"run": _cmd_run, "list-problems": _cmd_list, "summarize": _cmd_summarize, "sweep-alpha": _cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on misuse
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
