"""Run summaries and Wilcoxon signed-rank comparisons.

Decision marks follow the usual +/-/= convention for pairwise algorithm
comparison under minimisation, with ``a`` the competitor and ``b`` our
algorithm:

* ``plus``: the null hypothesis is rejected and ``b`` is better (``a`` larger),
* ``minus``: rejected and ``b`` is worse,
* ``equal``: no significant difference.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "SummaryStats",
    "WilcoxonResult",
    "summarize",
    "signed_ranks",
    "exact_p_value",
    "normal_p_value",
    "wilcoxon_signed_rank",
    "pairwise_table",
    "multi_problem_compare",
    "EXACT_MAX_N",
    "DECISION_MARKS",
]

EXACT_MAX_N = 12
DECISION_MARKS = {"plus": "+", "minus": "-", "equal": "="}


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    std_dev: float
    best: float
    mean_runtime_seconds: float
    n_runs: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class WilcoxonResult:
    t_plus: float
    t_minus: float
    n_effective: int
    p_value: float
    alpha: float
    decision: str  # plus | minus | equal
    method: str = "normal"  # exact | normal | none

    @property
    def mark(self) -> str:
        return DECISION_MARKS[self.decision]

    def winner(self, name_a: str = "a", name_b: str = "b") -> str:
        """Significance-gated winner, ``"="`` when the test is not significant."""
        return {"plus": name_b, "minus": name_a, "equal": "="}[self.decision]

    def favoured(self, name_a: str = "a", name_b: str = "b") -> str:
        """Side with the larger rank sum in its favour, significant or not."""
        if self.t_plus > self.t_minus:
            return name_b
        if self.t_minus > self.t_plus:
            return name_a
        return "="


def summarize(values: Sequence[float], runtimes: Optional[Sequence[float]] = None) -> SummaryStats:
    """Mean, sample standard deviation (n-1) and best of final values.

    A single run reports a standard deviation of 0.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("summarize needs at least one value")
    if runtimes is None:
        rt = np.zeros_like(v)
    else:
        rt = np.asarray(runtimes, dtype=float)
        if rt.shape != v.shape:
            raise ValueError("values and runtimes must have equal length")
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return SummaryStats(
        mean=float(np.mean(v)),
        std_dev=std,
        best=float(np.min(v)),
        mean_runtime_seconds=float(np.mean(rt)),
        n_runs=int(v.size),
    )


def signed_ranks(a, b):
    """Non-zero differences ``a - b`` and the average ranks of their magnitudes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("need at least one pair")
    d = a - b
    d = d[d != 0.0]
    return d, rankdata(np.abs(d), method="average")


def exact_p_value(ranks, t_plus) -> float:
    """Two-sided exact p-value under the sign-flip null.

    Counts the share of the ``2**n`` sign assignments whose positive rank sum
    lies at least as far from its mean as ``t_plus`` does. Average ranks are
    half-integers at worst, so the null distribution is built on doubled
    ranks by dynamic programming.
    """
    r2 = np.rint(2 * np.asarray(ranks, dtype=float)).astype(int)
    n = r2.size
    if n == 0:
        return 1.0
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    sums = np.arange(total + 1)
    # doubled rank sums S have mean total/2; |2S - total| keeps it integral
    obs = abs(2 * int(round(2 * t_plus)) - total)
    extreme = np.abs(2 * sums - total) >= obs
    return min(1.0, float(counts[extreme].sum()) / float(2**n))


def normal_p_value(ranks, t_plus, continuity: bool = False) -> float:
    """Two-sided normal approximation with tie-corrected variance."""
    ranks = np.asarray(ranks, dtype=float)
    n = ranks.size
    if n == 0:
        return 1.0
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    dev = abs(t_plus - mean)
    if continuity:
        dev = max(dev - 0.5, 0.0)
    return min(1.0, math.erfc(dev / math.sqrt(var) / math.sqrt(2.0)))


def wilcoxon_signed_rank(a, b, alpha: float = 0.05, method: str = "auto",
                         continuity: bool = False) -> WilcoxonResult:
    """Paired two-sided Wilcoxon signed-rank test on ``d = a - b``.

    Zero differences are dropped. ``method="auto"`` uses the exact null
    distribution up to 12 non-zero pairs and the normal approximation above.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    d, ranks = signed_ranks(a, b)
    n = int(d.size)
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 0, 1.0, alpha, "equal", "none")
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        p = exact_p_value(ranks, t_plus)
    elif method == "normal":
        p = normal_p_value(ranks, t_plus, continuity)
    else:
        raise ValueError(f"unknown method {method!r}")
    if p >= alpha or t_plus == t_minus:
        decision = "equal"
    elif t_plus > t_minus:
        decision = "plus"
    else:
        decision = "minus"
    return WilcoxonResult(t_plus, t_minus, n, p, alpha, decision, method)


def pairwise_table(per_problem_pairs, alpha: float = 0.05, **kwargs):
    """One test per problem plus the (plus, minus, equal) footer counts.

    ``per_problem_pairs`` is either a mapping ``problem -> (other, ours)`` or a
    sequence of such pairs (keys become their positions).
    """
    if hasattr(per_problem_pairs, "items"):
        items = list(per_problem_pairs.items())
    else:
        items = list(enumerate(per_problem_pairs))
    results = {}
    for key, (other, ours) in items:
        results[key] = wilcoxon_signed_rank(other, ours, alpha, **kwargs)
    counts = tuple(
        sum(r.decision == d for r in results.values()) for d in ("plus", "minus", "equal")
    )
    return results, counts


def multi_problem_compare(mean_a, mean_b, alpha: float = 0.05, **kwargs) -> WilcoxonResult:
    """Single signed-rank test across problems on per-problem mean values."""
    return wilcoxon_signed_rank(mean_a, mean_b, alpha, **kwargs)
