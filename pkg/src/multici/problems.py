"""Bound-constrained benchmark objectives.

Every objective is written against the last axis of its input, so a single
call can score one point of shape ``(N,)`` or a whole batch of shape
``(..., N)``. Formulas follow the usual benchmark definitions (Karaboga and
Akay 2009; Jamil and Yang 2013; Surjanovic and Bingham's virtual library).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

__all__ = [
    "Bounds",
    "ProblemSpec",
    "ProblemError",
    "UnknownProblemError",
    "evaluate",
    "evaluate_batch",
    "bounds",
    "get_problem",
    "list_problems",
    "catalog_json",
]


class ProblemError(ValueError):
    """Invalid evaluation request (bad dimension, point out of bounds)."""


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True)
class Bounds:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ProblemError("lower and upper must be non-empty and of equal length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ProblemError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, low: float, high: float, dimension: int) -> "Bounds":
        return cls((low,) * dimension, (high,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def as_arrays(self):
        return np.asarray(self.lower), np.asarray(self.upper)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = self.as_arrays()
        return bool(np.all((x >= lo) & (x <= hi)))


@dataclass(frozen=True)
class ProblemSpec:
    """A named objective with its search box and known optimum.

    ``kind`` is the two-letter Table-style tag: U/M for unimodal/multimodal,
    S/N for separable/non-separable.
    """

    id: str
    name: str
    key: str
    kind: str
    bounds: Bounds
    function: Callable = field(repr=False, compare=False)
    known_optimum: Optional[float] = None
    minimizer: Optional[tuple] = None
    scalable: bool = False

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    @property
    def modality(self) -> str:
        return "unimodal" if self.kind[0] == "U" else "multimodal"

    @property
    def separability(self) -> str:
        return "separable" if self.kind[1] == "S" else "non-separable"

    def with_dimension(self, dimension: int) -> "ProblemSpec":
        if dimension == self.dimension:
            return self
        if not self.scalable:
            raise ProblemError(f"{self.id} ({self.name}) has fixed dimension {self.dimension}")
        if dimension < 1:
            raise ProblemError("dimension must be positive")
        lo, hi = self.bounds.lower[0], self.bounds.upper[0]
        optimum, minimizer = self.known_optimum, self.minimizer
        if minimizer is not None:
            # scalable entries all have a coordinate-wise constant minimizer
            minimizer = (minimizer[0],) * dimension
            optimum = self.known_optimum / self.dimension * dimension
        return ProblemSpec(
            id=self.id,
            name=self.name,
            key=self.key,
            kind=self.kind,
            bounds=Bounds.box(lo, hi, dimension),
            function=self.function,
            known_optimum=optimum,
            minimizer=minimizer,
            scalable=True,
        )

    def evaluate(self, x) -> float:
        x = self._check(np.asarray(x, dtype=float))
        if x.ndim != 1:
            raise ProblemError("evaluate expects a single point; use evaluate_batch")
        return float(self.function(x))

    def evaluate_batch(self, X) -> np.ndarray:
        X = self._check(np.atleast_2d(np.asarray(X, dtype=float)))
        return np.asarray(self.function(X), dtype=float)

    def _check(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.dimension:
            raise ProblemError(
                f"{self.id} expects dimension {self.dimension}, got {x.shape[-1]}"
            )
        lo, hi = self.bounds.as_arrays()
        bad = (x < lo) | (x > hi) | ~np.isfinite(x)
        if bad.any():
            idx = np.argwhere(bad)[0]
            raise ProblemError(
                f"{self.id}: coordinate {idx[-1]} = {x[tuple(idx)]!r} outside "
                f"[{lo[idx[-1]]}, {hi[idx[-1]]}]"
            )
        return x

    def summary(self) -> dict:
        return {
            "id": self.id,
            "key": self.key,
            "name": self.name,
            "dimension": self.dimension,
            "lower": list(self.bounds.lower),
            "upper": list(self.bounds.upper),
            "tags": self.kind,
            "modality": self.modality,
            "separability": self.separability,
            "known_optimum": self.known_optimum,
            "scalable": self.scalable,
        }


# ---------------------------------------------------------------------------
# objective functions, all vectorised over leading axes


def _idx(x):
    return np.arange(1, x.shape[-1] + 1, dtype=float)


def sphere(x):
    return np.sum(x**2, axis=-1)


def sum_squares(x):
    return np.sum(_idx(x) * x**2, axis=-1)


def step2(x):
    return np.sum(np.floor(x + 0.5) ** 2, axis=-1)


def ackley(x):
    n = x.shape[-1]
    a = -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x**2, axis=-1) / n))
    b = -np.exp(np.sum(np.cos(2 * np.pi * x), axis=-1) / n)
    return a + b + 20.0 + math.e


def rastrigin(x):
    return np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x) + 10.0, axis=-1)


def griewank(x):
    s = np.sum(x**2, axis=-1) / 4000.0
    p = np.prod(np.cos(x / np.sqrt(_idx(x))), axis=-1)
    return s - p + 1.0


def rosenbrock(x):
    return np.sum(100.0 * (x[..., 1:] - x[..., :-1] ** 2) ** 2 + (x[..., :-1] - 1.0) ** 2, axis=-1)


def schwefel(x):
    return -np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)


def schwefel_1_2(x):
    return np.sum(np.cumsum(x, axis=-1) ** 2, axis=-1)


def schwefel_2_22(x):
    a = np.abs(x)
    return np.sum(a, axis=-1) + np.prod(a, axis=-1)


def zakharov(x):
    s = np.sum(0.5 * _idx(x) * x, axis=-1)
    return np.sum(x**2, axis=-1) + s**2 + s**4


def dixon_price(x):
    i = _idx(x)[1:]
    return (x[..., 0] - 1.0) ** 2 + np.sum(i * (2 * x[..., 1:] ** 2 - x[..., :-1]) ** 2, axis=-1)


def trid(x):
    return np.sum((x - 1.0) ** 2, axis=-1) - np.sum(x[..., 1:] * x[..., :-1], axis=-1)


def michalewicz(x, m=10):
    return -np.sum(np.sin(x) * np.sin(_idx(x) * x**2 / np.pi) ** (2 * m), axis=-1)


def beale(x):
    x1, x2 = x[..., 0], x[..., 1]
    return (
        (1.5 - x1 + x1 * x2) ** 2
        + (2.25 - x1 + x1 * x2**2) ** 2
        + (2.625 - x1 + x1 * x2**3) ** 2
    )


def bohachevsky1(x):
    x1, x2 = x[..., 0], x[..., 1]
    return x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1) - 0.4 * np.cos(4 * np.pi * x2) + 0.7


def bohachevsky2(x):
    x1, x2 = x[..., 0], x[..., 1]
    return x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1) * np.cos(4 * np.pi * x2) + 0.3


def bohachevsky3(x):
    x1, x2 = x[..., 0], x[..., 1]
    return x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1 + 4 * np.pi * x2) + 0.3


def booth(x):
    x1, x2 = x[..., 0], x[..., 1]
    return (x1 + 2 * x2 - 7) ** 2 + (2 * x1 + x2 - 5) ** 2


def branin(x):
    x1, x2 = x[..., 0], x[..., 1]
    b = 5.1 / (4 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


def matyas(x):
    x1, x2 = x[..., 0], x[..., 1]
    return 0.26 * (x1**2 + x2**2) - 0.48 * x1 * x2


def goldstein_price(x):
    x1, x2 = x[..., 0], x[..., 1]
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2)
    return a * b


def six_hump_camelback(x):
    x1, x2 = x[..., 0], x[..., 1]
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


def easom(x):
    x1, x2 = x[..., 0], x[..., 1]
    return -np.cos(x1) * np.cos(x2) * np.exp(-((x1 - np.pi) ** 2) - (x2 - np.pi) ** 2)


def schaffer(x):
    x1, x2 = x[..., 0], x[..., 1]
    r2 = x1**2 + x2**2
    return 0.5 + (np.sin(np.sqrt(r2)) ** 2 - 0.5) / (1 + 0.001 * r2) ** 2


def colville(x):
    x1, x2, x3, x4 = (x[..., i] for i in range(4))
    return (
        100 * (x1**2 - x2) ** 2
        + (x1 - 1) ** 2
        + (x3 - 1) ** 2
        + 90 * (x3**2 - x4) ** 2
        + 10.1 * ((x2 - 1) ** 2 + (x4 - 1) ** 2)
        + 19.8 * (x2 - 1) * (x4 - 1)
    )


_FOX_A = np.array(
    [
        [-32.0, -16.0, 0.0, 16.0, 32.0] * 5,
        [v for v in (-32.0, -16.0, 0.0, 16.0, 32.0) for _ in range(5)],
    ]
)


def foxholes(x):
    diff = x[..., :, None] - _FOX_A  # (..., 2, 25)
    inner = np.arange(1, 26) + np.sum(diff**6, axis=-2)
    return 1.0 / (1.0 / 500.0 + np.sum(1.0 / inner, axis=-1))


_SHEKEL_A = np.array(
    [
        [4, 4, 4, 4],
        [1, 1, 1, 1],
        [8, 8, 8, 8],
        [6, 6, 6, 6],
        [3, 7, 3, 7],
        [2, 9, 2, 9],
        [5, 5, 3, 3],
        [8, 1, 8, 1],
        [6, 2, 6, 2],
        [7, 3.6, 7, 3.6],
    ],
    dtype=float,
)
_SHEKEL_C = np.array([0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5])


def _shekel(m):
    a, c = _SHEKEL_A[:m], _SHEKEL_C[:m]

    def f(x):
        d = np.sum((x[..., None, :] - a) ** 2, axis=-1) + c
        return -np.sum(1.0 / d, axis=-1)

    f.__name__ = f"shekel{m}"
    return f


# per-coordinate minimisers of the m=10 Michalewicz terms, i = 1..10
_MICHALEWICZ_X = (
    2.202905513296628, 1.570796322320509, 1.284991564577549, 1.923058467505610,
    1.720469766517768, 1.570796319218113, 1.454413962081172, 1.756086513575824,
    1.655717409323190, 1.570796319387859,
)


# ---------------------------------------------------------------------------
# registry

_REGISTRY: dict = {}
_ALIASES: dict = {}


def _register(pid, name, key, kind, low, high, dim, fn, optimum=None, minimizer=None,
              scalable=False):
    if np.isscalar(low):
        b = Bounds.box(low, high, dim)
    else:
        b = Bounds(low, high)
    if minimizer is not None:
        minimizer = tuple(float(v) for v in minimizer)
    spec = ProblemSpec(pid, name, key, kind, b, fn, optimum, minimizer, scalable)
    _REGISTRY[pid] = spec
    _ALIASES[pid.lower()] = pid
    _ALIASES[key.lower()] = pid


_register("A1", "Sphere 2D", "sphere2", "US", -5.12, 5.12, 2, sphere, 0.0, (0, 0))
_register("F1", "Foxholes", "foxholes", "MS", -65.536, 65.536, 2, foxholes,
          0.998003837794449, (-31.97833495762107, -31.978328496668112))
_register("F2", "Goldstein-Price", "goldstein_price", "MN", -2, 2, 2, goldstein_price,
          3.0, (0, -1))
_register("F5", "Ackley", "ackley", "MN", -32, 32, 30, ackley, 0.0, (0,) * 30, True)
_register("F6", "Beale", "beale", "UN", -4.5, 4.5, 2, beale, 0.0, (3, 0.5))
_register("F7", "Bohachevsky1", "bohachevsky1", "MS", -100, 100, 2, bohachevsky1, 0.0, (0, 0))
_register("F8", "Bohachevsky2", "bohachevsky2", "MN", -100, 100, 2, bohachevsky2, 0.0, (0, 0))
_register("F9", "Bohachevsky3", "bohachevsky3", "MN", -100, 100, 2, bohachevsky3, 0.0, (0, 0))
_register("F10", "Booth", "booth", "MS", -10, 10, 2, booth, 0.0, (1, 3))
_register("F11", "Branin", "branin", "MS", -5, 10, 2, branin, 0.39788735772973816,
          (math.pi, 2.275))
_register("F12", "Colville", "colville", "UN", -10, 10, 4, colville, 0.0, (1, 1, 1, 1))
_register("F13", "Dixon-Price", "dixon_price", "UN", -10, 10, 30, dixon_price, 0.0,
          [2.0 ** (-(2**i - 2) / 2**i) for i in range(1, 31)])
_register("F14", "Easom", "easom", "UN", -100, 100, 2, easom, -1.0, (math.pi, math.pi))
_register("F18", "Griewank", "griewank", "MN", -600, 600, 30, griewank, 0.0, (0,) * 30, True)
_register("F25", "Matyas", "matyas", "UN", -10, 10, 2, matyas, 0.0, (0, 0))
_register("F26", "Michalewicz2", "michalewicz2", "MS", 0, math.pi, 2, michalewicz,
          -1.8013034100985499, _MICHALEWICZ_X[:2])
_register("F27", "Michalewicz5", "michalewicz5", "MS", 0, math.pi, 5, michalewicz,
          -4.687658179087978, _MICHALEWICZ_X[:5])
_register("F28", "Michalewicz10", "michalewicz10", "MS", 0, math.pi, 10, michalewicz,
          -9.660151715641021, _MICHALEWICZ_X)
_register("F33", "Rastrigin", "rastrigin", "MS", -5.12, 5.12, 30, rastrigin, 0.0, (0,) * 30, True)
_register("F34", "Rosenbrock", "rosenbrock", "UN", -30, 30, 30, rosenbrock, 0.0, (1,) * 30, True)
_register("F35", "Schaffer", "schaffer", "MN", -100, 100, 2, schaffer, 0.0, (0, 0))
_register("F36", "Schwefel", "schwefel", "MS", -500, 500, 30, schwefel,
          -418.98288727243374 * 30, (420.96874603892866,) * 30, True)
_register("F37", "Schwefel_1_2", "schwefel_1_2", "UN", -100, 100, 30, schwefel_1_2, 0.0,
          (0,) * 30, True)
_register("F38", "Schwefel_2_22", "schwefel_2_22", "UN", -10, 10, 30, schwefel_2_22, 0.0,
          (0,) * 30, True)
_register("F39", "Shekel10", "shekel10", "MN", 0, 10, 4, _shekel(10), -10.536409816692045,
          (4.000746530253313, 4.000592936779709, 3.9996633957714787, 3.9995097993299975))
_register("F40", "Shekel5", "shekel5", "MN", 0, 10, 4, _shekel(5), -10.153199679058229,
          (4.000037152376549, 4.000133278657566, 4.000037151057555, 4.000133277090425))
_register("F41", "Shekel7", "shekel7", "MN", 0, 10, 4, _shekel(7), -10.402940566818662,
          (4.000572914277084, 4.000689366040889, 3.9994897107938447, 3.9996061600067923))
_register("F43", "Six-hump camelback", "six_hump_camelback", "MN", -5, 5, 2,
          six_hump_camelback, -1.0316284534898774, (0.08984200893527233, -0.712656403019058))
_register("F44", "Sphere", "sphere", "US", -100, 100, 30, sphere, 0.0, (0,) * 30, True)
_register("F45", "Step2", "step2", "US", -100, 100, 30, step2, 0.0, (0,) * 30, True)
_register("F47", "Sumsquares", "sumsquares", "US", -10, 10, 30, sum_squares, 0.0, (0,) * 30, True)
_register("F48", "Trid6", "trid6", "UN", -36, 36, 6, trid, -50.0,
          [i * (7 - i) for i in range(1, 7)])
_register("F49", "Trid10", "trid10", "UN", -100, 100, 10, trid, -210.0,
          [i * (11 - i) for i in range(1, 11)])
_register("F50", "Zakharov", "zakharov", "UN", -5, 10, 10, zakharov, 0.0, (0,) * 10, True)


def _sort_key(pid: str):
    m = re.match(r"([A-Za-z]+)(\d+)$", pid)
    return (m.group(1), int(m.group(2))) if m else (pid, 0)


def get_problem(problem, dimension: Optional[int] = None) -> ProblemSpec:
    """Look up a problem by id (``F5``) or key (``ackley``), case-insensitive.

    A ``ProblemSpec`` passes through unchanged apart from the optional
    dimension override.
    """
    if isinstance(problem, ProblemSpec):
        spec = problem
    else:
        pid = _ALIASES.get(str(problem).strip().lower())
        if pid is None:
            raise UnknownProblemError(f"unknown problem {problem!r}")
        spec = _REGISTRY[pid]
    if dimension is not None:
        spec = spec.with_dimension(int(dimension))
    return spec


def evaluate(problem, x) -> float:
    return get_problem(problem).evaluate(x)


def evaluate_batch(problem, X) -> np.ndarray:
    return get_problem(problem).evaluate_batch(X)


def bounds(problem) -> Bounds:
    return get_problem(problem).bounds


def list_problems(tag: Optional[str] = None) -> list:
    """Registered problems ordered by id.

    ``tag`` filters on the two-letter kind ("MS") or on a single letter
    ("M" matches MS and MN).
    """
    specs = sorted(_REGISTRY.values(), key=lambda s: _sort_key(s.id))
    if tag:
        tag = tag.upper()
        if len(tag) == 1:
            specs = [s for s in specs if tag in s.kind]
        else:
            specs = [s for s in specs if s.kind == tag]
    return specs


def catalog_json(specs: Optional[Iterable[ProblemSpec]] = None, indent: int = 2) -> str:
    if specs is None:
        specs = list_problems()
    return json.dumps([s.summary() for s in specs], indent=indent)
