"""Multi-cohort intelligence optimisation, benchmarks and comparison statistics."""

__version__ = "0.1.0"

from .optimizer import MultiCiConfig, RunResult, run  # noqa: E402
from .problems import ProblemSpec, evaluate, get_problem, list_problems  # noqa: E402
from .stats import summarize, wilcoxon_signed_rank  # noqa: E402

__all__ = [
    "MultiCiConfig",
    "RunResult",
    "run",
    "ProblemSpec",
    "evaluate",
    "get_problem",
    "list_problems",
    "summarize",
    "wilcoxon_signed_rank",
]
