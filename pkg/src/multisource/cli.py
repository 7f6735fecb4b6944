"""Command-line entry points.

Subcommands:
  discrepancy        score source CSVs against a reference CSV
  weights            solve the simplex weighting program from a JSON input
  train              train one method from an experiment config
  corrupt            corrupt a CSV file
  experiment         run a full sweep, writing results + sidecar + summary
  simulate-federated run the case-1 or case-2 protocol simulation
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .corruption import CORRUPTION_KINDS, CorruptionSpec, corrupt
from .data import load_csv, save_csv
from .discrepancy import empirical_discrepancy
from .federated import run_case1, run_case2
from .harness import (
    METHODS,
    build_pool,
    config_from_json,
    run_method,
    run_sweep,
    write_results_csv,
    write_sidecar_json,
    write_summary_csv,
)
from .weights import WeightProblem, solve_weights


def _cmd_discrepancy(args: argparse.Namespace) -> int:
    reference = load_csv(args.reference, args.label_column, args.encoding)
    report = []
    for path in args.sources:
        source = load_csv(path, args.label_column, args.encoding, source_id=path)
        estimate = empirical_discrepancy(source, reference)
        report.append({
            "source": path,
            "discrepancy": estimate.value,
            "solver_risk": estimate.solver_risk,
            "samples": source.n_samples,
        })
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    obj = json.loads(Path(args.input).read_text(encoding="utf-8"))
    problem = WeightProblem(
        discrepancies=np.asarray(obj["discrepancies"], dtype=float),
        sample_counts=np.asarray(obj["sample_counts"], dtype=int),
        lam=args.lam,
    )
    alpha = solve_weights(problem)
    text = json.dumps({"lambda": args.lam, "alpha": [float(v) for v in alpha.alpha]},
                      indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = config_from_json(Path(args.config).read_text(encoding="utf-8"))
    pool, test = build_pool(config, config.seed)
    result = run_method(pool, test, config, args.method)
    summary = {
        "method": result.method,
        "test_error": result.test_error,
        "selected_lambda": result.selected_lambda,
        "selected_ridge": result.selected_ridge,
    }
    if result.alpha is not None:
        summary["alpha"] = [float(v) for v in result.alpha]
        summary["discrepancies"] = [float(v) for v in result.discrepancies]
    text = json.dumps(summary, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_corrupt(args: argparse.Namespace) -> int:
    data = load_csv(args.input, args.label_column, args.encoding)
    spec = CorruptionSpec(kind=args.kind, proportion=args.proportion, seed=args.seed)
    save_csv(corrupt(data, spec), args.output, label_column=args.label_column)
    print(f"wrote corrupted copy to {args.output}")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = config_from_json(Path(args.config).read_text(encoding="utf-8"))
    cells = run_sweep(config)
    out = Path(args.out)
    write_results_csv(cells, out)
    write_sidecar_json(cells, out.with_suffix(".sidecar.json"))
    write_summary_csv(cells, out.with_suffix(".summary.csv"))
    print(f"wrote {len(cells)} rows to {out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = config_from_json(Path(args.config).read_text(encoding="utf-8"))
    pool, _ = build_pool(config, config.seed)
    if args.case == 1:
        trace = run_case1(pool)
    else:
        trace = run_case2(pool, rounds=args.rounds, batch_size=args.batch_size,
                          step_size=args.step_size, seed=config.seed,
                          step_rule=args.step_rule)
    if args.trace:
        trace.export_jsonl(args.trace)
    print(json.dumps({
        "case": args.case,
        "messages": len(trace.messages),
        "total_bytes": trace.total_bytes,
        "rounds": trace.rounds,
        "discrepancies": [est.value for est in trace.result],
    }, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisource",
        description="Robust learning from multiple untrusted data sources.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discrepancy", help="score source CSVs against a reference")
    p.add_argument("sources", nargs="+", help="source CSV files")
    p.add_argument("--reference", required=True, help="reference CSV file")
    p.add_argument("--label-column", default="label")
    p.add_argument("--encoding", default="signed", help="'signed' or 'zero_one'")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_discrepancy)

    p = sub.add_parser("weights", help="solve the weighting program")
    p.add_argument("input", help="JSON with 'discrepancies' and 'sample_counts'")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("train", help="train one method from a config")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("corrupt", help="corrupt a CSV file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--kind", required=True, choices=CORRUPTION_KINDS)
    p.add_argument("--proportion", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-column", default="label")
    p.add_argument("--encoding", default="signed")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("experiment", help="run a sweep from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("simulate-federated", help="simulate a discrepancy protocol")
    p.add_argument("--case", type=int, required=True, choices=(1, 2))
    p.add_argument("--config", required=True)
    p.add_argument("--rounds", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=10**9)
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--step-rule", default="backtracking", choices=("backtracking", "fixed"))
    p.add_argument("--trace", default=None, help="write the message log as JSON lines")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
