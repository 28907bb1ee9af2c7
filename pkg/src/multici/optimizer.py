"""Multi-cohort intelligence (Multi-CI) minimiser.

K cohorts of C candidates each. In every learning attempt the best candidate
of each cohort is parked in an elite pool (pool Z). Each remaining
follower then

1. roulette-picks a non-elite candidate of its own cohort and draws
   ``samples_t`` points in a shrunken box around it (intra-group learning),
2. roulette-picks an elite from pool Z and draws ``samples_tz`` points
   around it (inter-group learning),
3. moves to the best of those ``samples_t + samples_tz`` points.

Elites are carried forward unchanged, so the best behaviour of each cohort
never gets worse. Box half-widths shrink by ``reduction_factor`` every time
a box is derived from the followed candidate's box.

Array layout: ``behaviors[k, c]`` and ``qualities[k, c, i]`` index cohort
``k``, candidate ``c`` and coordinate ``i``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .problems import ProblemSpec, get_problem

__all__ = [
    "ConfigError",
    "MultiCiConfig",
    "Candidate",
    "CohortState",
    "SampleBatch",
    "TraceRecord",
    "RunResult",
    "positivity_shift",
    "follower_probabilities",
    "pool_z_probabilities",
    "roulette_select",
    "neighborhood_interval",
    "sample_batch",
    "select_behavior",
    "form_pool_z",
    "check_convergence",
    "initialize",
    "learning_attempt",
    "run",
    "TRACE_HEADER",
    "write_trace_csv",
    "read_trace_csv",
]

SAMPLING_STRATEGIES = ("uniform", "gaussian")

# positivity shift used before inverting behaviours into roulette weights
SHIFT_SPREAD = 0.1
SHIFT_FLOOR = 1e-12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MultiCiConfig:
    cohorts: int = 3
    candidates_per_cohort: int = 5
    reduction_factor: float = 0.98
    samples_t: int = 5
    samples_tz: int = 10
    epsilon: float = 1e-10
    saturation_window: int = 25
    max_attempts: int = 5000
    target_value: Optional[float] = None
    target_tolerance: float = 0.0
    seed: int = 0
    sampling: str = "uniform"
    contract_elites: bool = True

    def __post_init__(self):
        def positive_int(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")

        for name in ("cohorts", "samples_t", "samples_tz", "saturation_window", "max_attempts"):
            positive_int(name)
        positive_int("candidates_per_cohort")
        if self.candidates_per_cohort < 2:
            raise ConfigError("candidates_per_cohort must be >= 2 (one elite plus followers)")
        if not 0.0 < self.reduction_factor <= 1.0:
            raise ConfigError("reduction_factor must lie in (0, 1]")
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon must be positive")
        if self.target_tolerance < 0.0:
            raise ConfigError("target_tolerance must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.sampling not in SAMPLING_STRATEGIES:
            raise ConfigError(f"sampling must be one of {SAMPLING_STRATEGIES}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "MultiCiConfig":
        """Named parameter sets.

        ``default``: 3 cohorts of 5, reduction 0.98, 5 intra and 10 inter
        samples per follower.
        ``compact``: 3 cohorts of 3, 2 intra and 4 inter samples, stop once
        the best value drops below 1e-16. Suited to small 2-D problems.
        """
        presets = {
            "default": {},
            "compact": dict(candidates_per_cohort=3, samples_t=2, samples_tz=4,
                             target_value=1e-16),
        }
        if name not in presets:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(presets)}")
        return cls(**{**presets[name], **overrides})

    def replace(self, **changes) -> "MultiCiConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MultiCiConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, source) -> "MultiCiConfig":
        """Load from a JSON string or a path to a JSON file."""
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        return cls.from_dict(json.loads(text))

    @property
    def evaluations_per_attempt(self) -> int:
        return self.cohorts * (self.candidates_per_cohort - 1) * (self.samples_t + self.samples_tz)


class Candidate(NamedTuple):
    qualities: np.ndarray
    behavior: float
    lower: np.ndarray
    upper: np.ndarray


class SampleBatch(NamedTuple):
    qualities: np.ndarray
    behaviors: np.ndarray


@dataclass
class CohortState:
    qualities: np.ndarray  # (K, C, N)
    behaviors: np.ndarray  # (K, C)
    lower: np.ndarray  # (K, C, N) per-candidate sampling box
    upper: np.ndarray
    elite_index: np.ndarray  # (K,) pool Z as formed in the last attempt
    attempt: int = 1
    saturation_counter: int = 0
    prior_extremes: Optional[tuple] = None
    evaluations: int = 0

    @property
    def n_cohorts(self) -> int:
        return self.behaviors.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.behaviors.shape[1]

    def candidate(self, k: int, c: int) -> Candidate:
        return Candidate(
            self.qualities[k, c].copy(),
            float(self.behaviors[k, c]),
            self.lower[k, c].copy(),
            self.upper[k, c].copy(),
        )

    def pool_z(self) -> list:
        return [self.candidate(k, int(c)) for k, c in enumerate(self.elite_index)]

    def best(self) -> tuple:
        k, c = np.unravel_index(np.argmin(self.behaviors), self.behaviors.shape)
        return float(self.behaviors[k, c]), self.qualities[k, c].copy()

    def copy(self) -> "CohortState":
        return dataclasses.replace(
            self,
            qualities=self.qualities.copy(),
            behaviors=self.behaviors.copy(),
            lower=self.lower.copy(),
            upper=self.upper.copy(),
            elite_index=self.elite_index.copy(),
        )


@dataclass(frozen=True)
class TraceRecord:
    attempt: int
    cohort_best: tuple
    global_best: float
    max_f: float
    min_f: float


@dataclass
class RunResult:
    problem_id: str
    dimension: int
    seed: int
    best_value: float
    best_qualities: np.ndarray
    attempts_used: int
    evaluations: int
    converged_by: str  # "saturation" | "target" | "attempt_cap"
    trace: list = field(default_factory=list)
    wall_time: float = 0.0

    def global_best_curve(self) -> np.ndarray:
        return np.array([t.global_best for t in self.trace])

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "dimension": self.dimension,
            "seed": self.seed,
            "best_value": float(self.best_value),
            "best_qualities": [float(v) for v in self.best_qualities],
            "attempts_used": self.attempts_used,
            "evaluations": self.evaluations,
            "converged_by": self.converged_by,
            "wall_time": self.wall_time,
            "trace": [
                [t.attempt, [float(v) for v in t.cohort_best], t.global_best, t.max_f, t.min_f]
                for t in self.trace
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        trace = [TraceRecord(a, tuple(cb), gb, mx, mn) for a, cb, gb, mx, mn in d["trace"]]
        return cls(
            problem_id=d["problem_id"],
            dimension=d["dimension"],
            seed=d["seed"],
            best_value=d["best_value"],
            best_qualities=np.asarray(d["best_qualities"], dtype=float),
            attempts_used=d["attempts_used"],
            evaluations=d["evaluations"],
            converged_by=d["converged_by"],
            trace=trace,
            wall_time=d.get("wall_time", 0.0),
        )


# ---------------------------------------------------------------------------
# elementary steps


def positivity_shift(values, axis=-1) -> np.ndarray:
    """Map behaviours to strictly positive values whose inverses act as weights.

    Pools that are already strictly positive are returned unchanged, so the
    plain ``1/f`` rule applies. Otherwise every entry becomes
    ``f - min + 0.1 * (max - min) + 1e-12``, which keeps smaller behaviours
    more attractive.
    """
    f = np.asarray(values, dtype=float)
    lo = f.min(axis=axis, keepdims=True)
    hi = f.max(axis=axis, keepdims=True)
    shifted = f - lo + SHIFT_SPREAD * (hi - lo) + SHIFT_FLOOR
    return np.where(lo > 0.0, f, shifted)


def _inverse_probabilities(values, axis=-1) -> np.ndarray:
    if np.shape(values)[axis] == 0:
        raise ValueError("cannot form probabilities over an empty pool")
    g = positivity_shift(values, axis=axis)
    # (min g)/g lies in (0, 1]; same ratios as 1/g without overflow near zero
    w = g.min(axis=axis, keepdims=True) / g
    return w / w.sum(axis=axis, keepdims=True)


def follower_probabilities(behaviors, axis=-1) -> np.ndarray:
    """Roulette probabilities over a cohort's non-elite candidates."""
    return _inverse_probabilities(behaviors, axis=axis)


def pool_z_probabilities(elite_behaviors, axis=-1) -> np.ndarray:
    """Roulette probabilities over the per-cohort elites."""
    return _inverse_probabilities(elite_behaviors, axis=axis)


def roulette_select(probs, rng=None, u=None):
    """Smallest index whose cumulative probability reaches ``u``.

    ``u`` defaults to one uniform draw from ``rng``. Both ``probs`` (last
    axis) and ``u`` broadcast, so a whole matrix of wheels can be spun at
    once; a scalar ``u`` with 1-D ``probs`` returns a plain int.
    """
    p = np.asarray(probs, dtype=float)
    if p.shape[-1] == 0:
        raise ValueError("roulette wheel needs at least one slot")
    if u is None:
        if rng is None:
            raise ValueError("pass either rng or u")
        u = rng.random(p.shape[:-1]) if p.ndim > 1 else rng.random()
    cum = np.cumsum(p, axis=-1)
    u_arr = np.asarray(u, dtype=float)
    idx = np.sum(cum < u_arr[..., None], axis=-1)
    # round-off can leave cum[-1] a hair under u
    idx = np.minimum(idx, p.shape[-1] - 1)
    return int(idx) if np.ndim(idx) == 0 else idx


def neighborhood_interval(center, followed, global_bounds, r):
    """Sampling box around ``center``.

    Half-width is ``r`` times half the width of the followed candidate's box
    ``followed = (lo, hi)``; the result is clipped to ``global_bounds``.
    Works element-wise on arrays.
    """
    f_lo, f_hi = followed
    g_lo, g_hi = global_bounds
    center = np.asarray(center, dtype=float)
    half = np.abs((np.asarray(f_hi) - np.asarray(f_lo)) / 2.0) * r
    lo = np.maximum(center - half, g_lo)
    hi = np.minimum(center + half, g_hi)
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def sample_batch(intervals, count, rng, problem=None, strategy="uniform", center=None):
    """Draw ``count`` points inside per-coordinate boxes and score them.

    ``intervals = (lower, upper)`` with shape ``(..., N)``; the drawn
    qualities have shape ``(..., count, N)``. With ``problem=None`` the
    behaviours are left empty (useful for testing the sampler alone).

    ``gaussian`` draws around ``center`` (box midpoint if omitted) with a
    standard deviation of a quarter of the box width, clipped to the box.
    """
    lower, upper = (np.asarray(a, dtype=float) for a in intervals)
    if count < 1:
        raise ValueError("count must be >= 1")
    lo = lower[..., None, :]
    hi = upper[..., None, :]
    shape = lower.shape[:-1] + (count, lower.shape[-1])
    if strategy == "uniform":
        pts = lo + (hi - lo) * rng.random(shape)
    elif strategy == "gaussian":
        mid = (lo + hi) / 2.0 if center is None else np.asarray(center, dtype=float)[..., None, :]
        pts = mid + (hi - lo) / 4.0 * rng.standard_normal(shape)
    else:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    pts = np.clip(pts, lo, hi)
    if problem is None:
        return SampleBatch(pts, np.empty(shape[:-1]))
    n = shape[-1]
    behaviors = problem.evaluate_batch(pts.reshape(-1, n)).reshape(shape[:-1])
    return SampleBatch(pts, behaviors)


def select_behavior(t_behaviors, tz_behaviors):
    """Best of a follower's intra- and inter-group samples.

    Returns ``(index, value)`` where ``index`` counts the intra-group samples
    first. Ties go to the lowest index.
    """
    allb = np.concatenate([np.asarray(t_behaviors, float), np.asarray(tz_behaviors, float)])
    i = int(np.argmin(allb))
    return i, float(allb[i])


def form_pool_z(behaviors):
    """Per-cohort elite: ``(elite_index, elite_value)`` for ``behaviors[k, c]``."""
    b = np.asarray(behaviors, dtype=float)
    idx = np.argmin(b, axis=-1)
    return idx, np.take_along_axis(b, idx[..., None], axis=-1)[..., 0]


def check_convergence(current_F, previous_F, epsilon, counter, window):
    """Saturation test on consecutive behaviour pools.

    All three of |Δmax|, |Δmin| and the current spread max-min must be within
    ``epsilon``; the counter grows while they hold and resets otherwise.
    Returns ``(converged, new_counter)``.
    """
    cur = np.asarray(current_F, dtype=float)
    prev = np.asarray(previous_F, dtype=float)
    cmax, cmin = cur.max(), cur.min()
    ok = (
        abs(cmax - prev.max()) <= epsilon
        and abs(cmin - prev.min()) <= epsilon
        and abs(cmax - cmin) <= epsilon
    )
    counter = counter + 1 if ok else 0
    return counter >= window, counter


# ---------------------------------------------------------------------------
# the algorithm


def initialize(config: MultiCiConfig, problem: ProblemSpec, rng) -> CohortState:
    K, C = config.cohorts, config.candidates_per_cohort
    g_lo, g_hi = problem.bounds.as_arrays()
    lower = np.broadcast_to(g_lo, (K, C, problem.dimension)).copy()
    upper = np.broadcast_to(g_hi, (K, C, problem.dimension)).copy()
    batch = sample_batch((g_lo, g_hi), K * C, rng, problem)
    qualities = batch.qualities.reshape(K, C, -1)
    behaviors = batch.behaviors.reshape(K, C)
    elite, _ = form_pool_z(behaviors)
    return CohortState(
        qualities=qualities,
        behaviors=behaviors,
        lower=lower,
        upper=upper,
        elite_index=elite,
        attempt=1,
        evaluations=K * C,
    )


def _followers(elite_index, C):
    """Indices of the non-elite candidates of every cohort, ascending."""
    all_idx = np.broadcast_to(np.arange(C), (len(elite_index), C))
    keep = all_idx != np.asarray(elite_index)[:, None]
    return all_idx[keep].reshape(len(elite_index), C - 1)


def learning_attempt(state: CohortState, config: MultiCiConfig, problem: ProblemSpec,
                     rng) -> CohortState:
    """One learning attempt; returns a new state and leaves ``state`` untouched.

    Every follower decides from the state at the start of the attempt. Draw
    order from ``rng``: intra-group wheel spins, inter-group wheel spins,
    intra-group samples, inter-group samples.
    """
    K, C = state.n_cohorts, state.n_candidates
    T, TZ, r = config.samples_t, config.samples_tz, config.reduction_factor
    bounds = problem.bounds.as_arrays()
    q, lo, hi = state.qualities, state.lower, state.upper

    elite, elite_vals = form_pool_z(state.behaviors)
    followers = _followers(elite, C)  # (K, C-1)
    kk = np.arange(K)[:, None]

    p_intra = follower_probabilities(state.behaviors[kk, followers])
    p_inter = pool_z_probabilities(elite_vals)

    u_intra = rng.random((K, C - 1))
    u_inter = rng.random((K, C - 1))
    # one wheel per follower; wheels of the same cohort share probabilities
    pick = roulette_select(np.broadcast_to(p_intra[:, None, :], (K, C - 1, C - 1)), u=u_intra)
    followed = followers[kk, pick]
    pick_cohort = roulette_select(np.broadcast_to(p_inter, (K, C - 1, K)), u=u_inter)
    pick_elite = elite[pick_cohort]

    box_t = neighborhood_interval(
        q[kk, followed], (lo[kk, followed], hi[kk, followed]), bounds, r)
    box_z = neighborhood_interval(
        q[pick_cohort, pick_elite], (lo[pick_cohort, pick_elite], hi[pick_cohort, pick_elite]),
        bounds, r)

    strategy = config.sampling
    s_t = sample_batch(box_t, T, rng, problem, strategy, center=q[kk, followed])
    s_z = sample_batch(box_z, TZ, rng, problem, strategy, center=q[pick_cohort, pick_elite])

    all_q = np.concatenate([s_t.qualities, s_z.qualities], axis=2)  # (K, C-1, T+TZ, N)
    all_f = np.concatenate([s_t.behaviors, s_z.behaviors], axis=2)
    best = np.argmin(all_f, axis=2)  # first minimum wins ties
    from_t = (best < T)[..., None]

    new = state.copy()
    new.qualities[kk, followers] = np.take_along_axis(all_q, best[..., None, None], axis=2)[:, :, 0]
    new.behaviors[kk, followers] = np.take_along_axis(all_f, best[..., None], axis=2)[..., 0]
    new.lower[kk, followers] = np.where(from_t, box_t[0], box_z[0])
    new.upper[kk, followers] = np.where(from_t, box_t[1], box_z[1])
    if config.contract_elites:
        e_lo, e_hi = neighborhood_interval(
            q[kk[:, 0], elite], (lo[kk[:, 0], elite], hi[kk[:, 0], elite]), bounds, r)
        new.lower[kk[:, 0], elite] = e_lo
        new.upper[kk[:, 0], elite] = e_hi
    new.elite_index = elite
    new.attempt = state.attempt + 1
    new.evaluations = state.evaluations + K * (C - 1) * (T + TZ)
    return new


def run(config: MultiCiConfig, problem, dimension: Optional[int] = None) -> RunResult:
    """Minimise ``problem`` until saturation, the target, or the attempt cap."""
    problem = get_problem(problem, dimension)
    rng = np.random.default_rng(int(config.seed))
    start = time.perf_counter()
    state = initialize(config, problem, rng)
    trace = []
    converged_by = "attempt_cap"
    target = None
    if config.target_value is not None:
        target = config.target_value + config.target_tolerance

    for _ in range(config.max_attempts):
        prev_F = state.behaviors
        state = learning_attempt(state, config, problem, rng)
        F = state.behaviors
        cohort_best = F.min(axis=1)
        trace.append(TraceRecord(
            attempt=state.attempt - 1,
            cohort_best=tuple(float(v) for v in cohort_best),
            global_best=float(F.min()),
            max_f=float(F.max()),
            min_f=float(F.min()),
        ))
        done, state.saturation_counter = check_convergence(
            F, prev_F, config.epsilon, state.saturation_counter, config.saturation_window)
        state.prior_extremes = (float(prev_F.max()), float(prev_F.min()))
        if target is not None and F.min() <= target:
            converged_by = "target"
            break
        if done:
            converged_by = "saturation"
            break

    best_value, best_q = state.best()
    return RunResult(
        problem_id=problem.id,
        dimension=problem.dimension,
        seed=int(config.seed),
        best_value=best_value,
        best_qualities=best_q,
        attempts_used=state.attempt - 1,
        evaluations=state.evaluations,
        converged_by=converged_by,
        trace=trace,
        wall_time=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# trace CSV

TRACE_HEADER = ("attempt", "cohort", "best_value", "global_best", "max_F", "min_F")


def write_trace_csv(result: RunResult, dest=None) -> str:
    """One row per (attempt, cohort). Writes to ``dest`` if given; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t in result.trace:
        for k, v in enumerate(t.cohort_best, start=1):
            w.writerow([t.attempt, k, repr(v), repr(t.global_best), repr(t.max_f), repr(t.min_f)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def read_trace_csv(source) -> list:
    """Parse a trace CSV back into ``TraceRecord`` objects."""
    path = Path(source)
    text = path.read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError(f"{source}: empty trace")
    missing = set(TRACE_HEADER) - set(rows[0])
    if missing:
        raise ValueError(f"{source}: missing columns {sorted(missing)}")
    by_attempt: dict = {}
    for lineno, row in enumerate(rows, start=2):
        try:
            a, k = int(row["attempt"]), int(row["cohort"])
            vals = [float(row[c]) for c in ("best_value", "global_best", "max_F", "min_F")]
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{source}: line {lineno}: {exc}") from None
        by_attempt.setdefault(a, {})[k] = vals
    out = []
    for a in sorted(by_attempt):
        cohorts = by_attempt[a]
        first = cohorts[min(cohorts)]
        out.append(TraceRecord(
            attempt=a,
            cohort_best=tuple(cohorts[k][0] for k in sorted(cohorts)),
            global_best=first[1],
            max_f=first[2],
            min_f=first[3],
        ))
    return out
