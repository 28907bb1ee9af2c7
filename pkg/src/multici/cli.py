"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .harness import (
    ExperimentPlan,
    compare,
    execute,
    ingest_external,
    load_result,
    save_result,
    write_summary_csv,
)
from .optimizer import ConfigError, MultiCiConfig, read_trace_csv, run, write_trace_csv
from .problems import ProblemError, UnknownProblemError, catalog_json, get_problem, list_problems

OUT_ENV = "MULTICI_OUT"

log = logging.getLogger("multici")


class UsageError(Exception):
    pass


def _alpha(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie strictly between 0 and 1")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _load_config(args) -> MultiCiConfig:
    try:
        cfg = MultiCiConfig.preset(args.preset)
        if args.config:
            data = json.loads(Path(args.config).read_text())
            cfg = cfg.replace(**data) if data else cfg
        overrides = {}
        for name in ("max_attempts", "target_value", "seed"):
            v = getattr(args, name, None)
            if v is not None:
                overrides[name] = v
        return cfg.replace(**overrides) if overrides else cfg
    except (ConfigError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}")


def cmd_list(args, out):
    specs = list_problems(args.tag)
    if args.format == "json":
        out.write(catalog_json(specs) + "\n")
        return 0
    out.write(f"{'id':<5} {'key':<20} {'name':<20} {'tags':<4} {'dim':>4} {'lower':>9} "
              f"{'upper':>9} {'optimum':>22}\n")
    for s in specs:
        opt = "" if s.known_optimum is None else repr(s.known_optimum)
        out.write(f"{s.id:<5} {s.key:<20} {s.name:<20} {s.kind:<4} {s.dimension:>4} "
                  f"{s.bounds.lower[0]:>9g} {s.bounds.upper[0]:>9g} {opt:>22}\n")
    return 0


def cmd_run(args, out):
    cfg = _load_config(args)
    try:
        problem = get_problem(args.problem, args.dim)
    except (UnknownProblemError, ProblemError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc))
    res = run(cfg, problem)
    out.write(f"problem      {problem.id} ({problem.name}, {problem.dimension}D)\n")
    out.write(f"seed         {res.seed}\n")
    out.write(f"f*           {res.best_value!r}\n")
    out.write(f"x*           {' '.join(repr(float(v)) for v in res.best_qualities)}\n")
    out.write(f"attempts     {res.attempts_used}\n")
    out.write(f"evaluations  {res.evaluations}\n")
    out.write(f"stopped by   {res.converged_by}\n")
    out.write(f"wall time    {res.wall_time:.3f} s\n")
    if args.trace_out:
        write_trace_csv(res, args.trace_out)
        out.write(f"trace        {args.trace_out}\n")
    return 0


def _plan_from_args(args) -> ExperimentPlan:
    if args.plan:
        path = Path(args.plan)
        if not path.is_file():
            raise FileNotFoundError(f"plan file not found: {path}")
        try:
            plan = ExperimentPlan.from_json(path)
        except KeyError as exc:
            if isinstance(exc, UnknownProblemError):
                raise
            raise ValueError(f"{path}: plan is missing {exc}") from None
        changes = {}
        if args.runs is not None:
            changes["n_runs"] = args.runs
        if args.base_seed is not None:
            changes["base_seed"] = args.base_seed
        if changes:
            d = plan.to_dict()
            d.update(changes)
            plan = ExperimentPlan.from_dict(d)
        return plan
    if not args.problems:
        raise UsageError("bench needs --plan or --problems")
    cfg = _load_config(args)
    try:
        return ExperimentPlan(
            problems=tuple(p.strip() for p in args.problems.split(",") if p.strip()),
            config=cfg,
            n_runs=args.runs if args.runs is not None else 30,
            base_seed=args.base_seed or 0,
        )
    except (UnknownProblemError, ProblemError, ValueError) as exc:
        raise UsageError(exc.args[0] if exc.args else str(exc))


def cmd_bench(args, out):
    plan = _plan_from_args(args)
    out_dir = Path(args.out or os.environ.get(OUT_ENV, "results"))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise RuntimeError(f"output directory {out_dir} is not writable: {exc}")
    result = execute(plan, workers=args.workers, keep_traces=args.keep_traces)
    save_result(result, out_dir / "results.json")
    text = write_summary_csv(result, out_dir / "summary.csv")
    out.write(text)
    failures = sum(len(p.failures) for p in result.problems)
    if failures:
        out.write(f"# {failures} run(s) failed; see results.json\n")
    out.write(f"# wrote {out_dir / 'results.json'} and {out_dir / 'summary.csv'}\n")
    return 0


def cmd_compare(args, out):
    experiment = load_result(args.ours)
    external = ingest_external(args.theirs, algorithm=args.name)
    comp = compare(experiment, external, args.alpha)
    out.write(comp.table_csv())
    out.write(comp.footer() + "\n")
    out.write(comp.multi_csv())
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        comp.table_csv(d / "comparison.csv")
        comp.multi_csv(d / "multi_problem.csv")
        (d / "counts.json").write_text(json.dumps(
            {"plus": comp.counts[0], "minus": comp.counts[1], "equal": comp.counts[2],
             "alpha": comp.alpha, "algorithm": comp.algorithm}, indent=1))
    return 0


def cmd_trace(args, out):
    records = read_trace_csv(args.input)
    w = csv.writer(out, lineterminator="\n")
    if args.best:
        w.writerow(["attempt", "global_best"])
        for t in records:
            w.writerow([t.attempt, repr(t.global_best)])
    else:
        k = len(records[0].cohort_best)
        w.writerow(["attempt"] + [f"cohort_{i}" for i in range(1, k + 1)])
        for t in records:
            w.writerow([t.attempt] + [repr(v) for v in t.cohort_best])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multici", description="Multi-cohort intelligence optimiser")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("list", help="show the benchmark catalog")
    s.add_argument("--tag", help="kind filter, e.g. MS, UN or a single letter")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.set_defaults(func=cmd_list)

    def config_flags(sp):
        sp.add_argument("--preset", choices=("default", "compact"), default="default")
        sp.add_argument("--config", help="JSON file with MultiCiConfig fields")
        sp.add_argument("--max-attempts", dest="max_attempts", type=_positive)
        sp.add_argument("--target", dest="target_value", type=float)

    s = sub.add_parser("run", help="one optimisation run")
    s.add_argument("--problem", required=True)
    s.add_argument("--dim", type=_positive)
    s.add_argument("--seed", type=int)
    s.add_argument("--trace-out")
    config_flags(s)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("bench", help="seeded multi-run experiment")
    s.add_argument("--plan", help="JSON plan file")
    s.add_argument("--problems", help="comma list, id[:dim] each")
    s.add_argument("--runs", type=_positive)
    s.add_argument("--base-seed", dest="base_seed", type=int)
    s.add_argument("--workers", type=_positive, default=1)
    s.add_argument("--keep-traces", action="store_true")
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    config_flags(s)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("compare", help="signed-rank comparison against external results")
    s.add_argument("--ours", required=True, help="results.json written by bench")
    s.add_argument("--theirs", required=True, help="CSV: problem[,run_index],value")
    s.add_argument("--alpha", type=_alpha, default=0.05)
    s.add_argument("--name", help="competitor name (default: file stem)")
    s.add_argument("--out", help="directory for comparison CSVs")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("trace", help="reshape a trace CSV into plot columns")
    s.add_argument("--in", dest="input", required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--per-cohort", action="store_true", default=True)
    g.add_argument("--best", action="store_true")
    s.set_defaults(func=cmd_trace)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (UsageError, UnknownProblemError, ConfigError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"multici {args.command}: {msg}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"multici {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
