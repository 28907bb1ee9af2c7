"""Seeded multi-run experiments, persistence and comparison with published numbers."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .optimizer import MultiCiConfig, RunResult, run
from .problems import UnknownProblemError, get_problem
from .stats import SummaryStats, WilcoxonResult, summarize, wilcoxon_signed_rank

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentPlan",
    "RunFailure",
    "ProblemRuns",
    "ExperimentResult",
    "ExternalResults",
    "Comparison",
    "execute",
    "save_result",
    "load_result",
    "write_summary_csv",
    "ingest_external",
    "compare",
    "SUMMARY_HEADER",
    "COMPARISON_HEADER",
    "MULTI_HEADER",
]

SUMMARY_HEADER = ("problem", "mean", "std_dev", "best", "mean_runtime", "n_runs")
COMPARISON_HEADER = ("problem", "p_value", "t_plus", "t_minus", "winner")
MULTI_HEADER = ("algorithm", "p_value", "t_plus", "t_minus", "winner")
OUR_NAME = "Multi-CI"


def _parse_problem(entry):
    """``"F18"``, ``"F18:10"`` or ``("F18", 10)`` -> ``(id, dimension)``."""
    if isinstance(entry, (tuple, list)):
        pid, dim = entry
    elif ":" in str(entry):
        pid, dim = str(entry).split(":", 1)
        dim = int(dim)
    else:
        pid, dim = entry, None
    spec = get_problem(pid, dim)
    return spec.id, spec.dimension


@dataclass(frozen=True)
class ExperimentPlan:
    problems: tuple
    config: MultiCiConfig = field(default_factory=MultiCiConfig)
    n_runs: int = 30
    base_seed: int = 0

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if not self.problems:
            raise ValueError("plan has no problems")
        object.__setattr__(self, "problems", tuple(_parse_problem(p) for p in self.problems))

    def seed_for(self, run_index: int) -> int:
        return (self.base_seed + run_index) % 2**64

    def tasks(self):
        for pid, dim in self.problems:
            for i in range(self.n_runs):
                yield pid, dim, i, self.config.replace(seed=self.seed_for(i))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        cfg = d.get("config", {})
        if isinstance(cfg, dict):
            cfg = dict(cfg)
            preset = cfg.pop("preset", None) if cfg else None
            cfg = MultiCiConfig.preset(preset, **cfg) if preset else MultiCiConfig.from_dict(cfg)
        return cls(
            problems=tuple(d["problems"]),
            config=cfg,
            n_runs=int(d.get("n_runs", 30)),
            base_seed=int(d.get("base_seed", 0)),
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "problems": [f"{p}:{d}" for p, d in self.problems],
            "config": self.config.to_dict(),
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
        }


@dataclass
class RunFailure:
    seed: int
    error: str


@dataclass
class ProblemRuns:
    problem_id: str
    dimension: int
    runs: list
    summary: Optional[SummaryStats]

    @property
    def completed(self) -> list:
        return [r for r in self.runs if isinstance(r, RunResult)]

    @property
    def failures(self) -> list:
        return [r for r in self.runs if isinstance(r, RunFailure)]

    def final_values(self) -> np.ndarray:
        return np.array([r.best_value for r in self.completed])


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    problems: list
    metadata: dict

    def by_problem(self) -> dict:
        return {p.problem_id: p for p in self.problems}


def _summarize_runs(runs) -> Optional[SummaryStats]:
    done = [r for r in runs if isinstance(r, RunResult)]
    if not done:
        return None
    return summarize([r.best_value for r in done], [r.wall_time for r in done])


def _run_task(task, keep_traces):
    pid, dim, _, cfg = task
    try:
        res = run(cfg, pid, dim)
    except Exception as exc:  # recorded, the campaign goes on
        return RunFailure(seed=cfg.seed, error=f"{type(exc).__name__}: {exc}")
    if not keep_traces:
        res.trace = []
    return res


def execute(plan: ExperimentPlan, workers: int = 1, keep_traces: bool = False) -> ExperimentResult:
    """Run every (problem, run index) of the plan; run ``i`` uses ``base_seed + i``.

    Results are ordered by (problem, run index) whatever the worker count.
    """
    started = datetime.now(timezone.utc).isoformat()
    tasks = list(plan.tasks())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_task, tasks, [keep_traces] * len(tasks), chunksize=1))
    else:
        outcomes = [_run_task(t, keep_traces) for t in tasks]

    problems = []
    for j, (pid, dim) in enumerate(plan.problems):
        runs = outcomes[j * plan.n_runs:(j + 1) * plan.n_runs]
        for r in runs:
            if isinstance(r, RunFailure):
                log.warning("%s run with seed %d failed: %s", pid, r.seed, r.error)
        problems.append(ProblemRuns(pid, dim, runs, _summarize_runs(runs)))
    metadata = {
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "workers": workers,
    }
    return ExperimentResult(plan, problems, metadata)


# ---------------------------------------------------------------------------
# persistence


def _run_to_dict(r):
    if isinstance(r, RunFailure):
        return {"seed": r.seed, "error": r.error}
    return r.to_dict()


def _run_from_dict(d):
    if "error" in d:
        return RunFailure(d["seed"], d["error"])
    return RunResult.from_dict(d)


def result_to_dict(result: ExperimentResult) -> dict:
    return {
        "metadata": result.metadata,
        "plan": result.plan.to_dict(),
        "problems": [
            {
                "problem_id": p.problem_id,
                "dimension": p.dimension,
                "summary": p.summary.to_dict() if p.summary else None,
                "runs": [_run_to_dict(r) for r in p.runs],
            }
            for p in result.problems
        ],
    }


def save_result(result: ExperimentResult, path) -> Path:
    path = Path(path)
    # json renders floats with repr, which round-trips exactly
    path.write_text(json.dumps(result_to_dict(result), indent=1))
    return path


def load_result(path) -> ExperimentResult:
    try:
        d = json.loads(Path(path).read_text())
        plan = ExperimentPlan.from_dict(d["plan"])
        problems = []
        for p in d["problems"]:
            runs = [_run_from_dict(r) for r in p["runs"]]
            summary = SummaryStats(**p["summary"]) if p["summary"] else None
            problems.append(ProblemRuns(p["problem_id"], p["dimension"], runs, summary))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not an experiment result file ({exc})") from None
    return ExperimentResult(plan, problems, d.get("metadata", {}))


def write_summary_csv(result: ExperimentResult, dest=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for p in result.problems:
        s = p.summary
        if s is None:
            w.writerow([p.problem_id, "", "", "", "", 0])
            continue
        w.writerow([p.problem_id, repr(s.mean), repr(s.std_dev), repr(s.best),
                    repr(s.mean_runtime_seconds), s.n_runs])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


# ---------------------------------------------------------------------------
# external results


@dataclass
class ExternalResults:
    algorithm: str
    values: dict  # problem id -> list of final values in run order

    def problems(self) -> list:
        return list(self.values)


def _canonical_id(raw: str) -> str:
    try:
        return get_problem(raw).id
    except UnknownProblemError:
        return raw.strip().upper()


def ingest_external(path, algorithm: Optional[str] = None) -> ExternalResults:
    """Read published competitor values.

    Accepted layouts: ``problem,run_index,value`` or ``problem,value``; an
    optional ``algorithm`` column names the competitor (otherwise the file
    stem does).
    """
    path = Path(path)
    text = path.read_text()
    reader = csv.reader(io.StringIO(text))
    rows = [(i, row) for i, row in enumerate(reader, start=1) if any(c.strip() for c in row)]
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header = [h.strip().lower() for h in rows[0][1]]
    if "problem" not in header or "value" not in header:
        raise ValueError(f"{path}: header must contain 'problem' and 'value', got {header}")
    ip, iv = header.index("problem"), header.index("value")
    ir = header.index("run_index") if "run_index" in header else None
    ia = header.index("algorithm") if "algorithm" in header else None

    collected: dict = {}
    names = set()
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise ValueError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            value = float(row[iv])
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: non-numeric value {row[iv]!r}") from None
        order = lineno
        if ir is not None:
            try:
                order = int(row[ir])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad run_index {row[ir]!r}") from None
        if ia is not None:
            names.add(row[ia].strip())
        collected.setdefault(_canonical_id(row[ip]), []).append((order, value))
    if len(names) > 1:
        raise ValueError(f"{path}: more than one algorithm in file: {sorted(names)}")
    name = algorithm or (names.pop() if names else path.stem)
    values = {pid: [v for _, v in sorted(pairs, key=lambda t: t[0])]
              for pid, pairs in collected.items()}
    return ExternalResults(name, values)


@dataclass
class Comparison:
    algorithm: str
    rows: list  # (problem id, WilcoxonResult)
    counts: tuple  # (plus, minus, equal)
    multi: WilcoxonResult
    alpha: float

    def winner(self, res: WilcoxonResult) -> str:
        return res.winner(self.algorithm, OUR_NAME)

    def table_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        for pid, res in self.rows:
            w.writerow([pid, repr(res.p_value), repr(res.t_plus), repr(res.t_minus),
                        self.winner(res)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    def multi_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(MULTI_HEADER)
        m = self.multi
        # across-problem rows name the side favoured by the rank sums
        w.writerow([self.algorithm, repr(m.p_value), repr(m.t_plus), repr(m.t_minus),
                    m.favoured(self.algorithm, OUR_NAME)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    def footer(self) -> str:
        return "+/-/= : {}/{}/{}".format(*self.counts)


def compare(experiment: ExperimentResult, external: ExternalResults,
            alpha: float = 0.05) -> Comparison:
    """Per-problem signed-rank tests (competitor minus ours) and the
    across-problem test on mean values."""
    ours = experiment.by_problem()
    shared = [pid for pid in ours if pid in external.values]
    if not shared:
        raise ValueError(
            f"no overlapping problems between experiment ({sorted(ours)}) "
            f"and {external.algorithm} ({sorted(external.values)})"
        )
    rows = []
    mean_theirs, mean_ours = [], []
    for pid in shared:
        mine = ours[pid].final_values()
        theirs = np.asarray(external.values[pid], dtype=float)
        if mine.size != theirs.size:
            raise ValueError(
                f"{pid}: {external.algorithm} has {theirs.size} runs, experiment has {mine.size}"
            )
        rows.append((pid, wilcoxon_signed_rank(theirs, mine, alpha)))
        mean_theirs.append(theirs.mean())
        mean_ours.append(mine.mean())
    counts = tuple(sum(r.decision == d for _, r in rows) for d in ("plus", "minus", "equal"))
    multi = wilcoxon_signed_rank(mean_theirs, mean_ours, alpha)
    return Comparison(external.algorithm, rows, counts, multi, alpha)
