"""DMMF benchmark instances.

Every instance has the multiplicative form ``f_j = h_j(P, t) * (1 + g(X, t))``.
``P`` are the position variables (``x1`` for bi-objective instances, ``x1, x2``
for the tri-objective one) and the last variable ``y`` selects the Pareto
set branch. ``g`` is the smallest squared distance of ``y`` to a branch curve
``b_k(P, t)`` plus that branch's floor. Global branches have a floor of 0, so
several disjoint curves in decision space map onto the same front. A branch
with a positive floor is only locally optimal.

Time enters through ``G(t) = sin(0.5 * pi * t)``. Exponents built from it are
kept positive: ``|G| + 1`` (in [1, 2]) or ``2 ** G`` (in [0.5, 2]). The second
one swings the front between convex and concave.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .core import ContractError


def G(t: float) -> float:
    return math.sin(0.5 * math.pi * t)


def shifted_exponent(t: float) -> float:
    return abs(G(t)) + 1.0


def swing_exponent(t: float) -> float:
    return 2.0 ** G(t)


class DMMFType(str, Enum):
    TYPE_I = "TypeI"  # static POF, moving POS
    TYPE_II = "TypeII"  # moving POF, static POS
    TYPE_III = "TypeIII"  # both move


BranchFn = Callable[[np.ndarray, float], np.ndarray]
FrontFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Branch:
    """One curve ``y = position(P, t)`` along which ``g`` reaches ``floor``.

    ``region`` restricts the branch to part of the ``x1`` range, as in the
    piecewise example problem; ``None`` means the whole range.
    """

    position: BranchFn
    floor: float = 0.0
    region: tuple[float, float] | None = None

    def active(self, x1: np.ndarray) -> np.ndarray:
        if self.region is None:
            return np.ones(x1.shape, dtype=bool)
        lo, hi = self.region
        return (x1 >= lo) & (x1 < hi) if hi < 1.0 else (x1 >= lo) & (x1 <= hi)

    @property
    def is_global(self) -> bool:
        return self.floor == 0.0


@dataclass(frozen=True)
class DynamicProblem:
    id: str
    n_obj: int
    n_pos: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    dmmf_type: DMMFType
    front: FrontFn
    branches: tuple[Branch, ...]
    pof_geometry: str
    pos_geometry: str
    formula: str
    scalable: bool = False
    params: dict = field(default_factory=dict)

    @property
    def n_var(self) -> int:
        return len(self.lower)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.lower, self.upper], dtype=float)

    @property
    def global_branches(self) -> tuple[Branch, ...]:
        return tuple(b for b in self.branches if b.is_global)

    @property
    def local_branches(self) -> tuple[Branch, ...]:
        return tuple(b for b in self.branches if not b.is_global)

    def pos_count(self, t: float = 0.0) -> int:
        return len(self.global_branches)

    def _check(self, X) -> tuple[np.ndarray, bool]:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_var:
            raise ContractError(f"{self.id} expects {self.n_var} variables, got {X.shape[1]}")
        lo, hi = self.bounds
        if np.any(X < lo) or np.any(X > hi) or not np.all(np.isfinite(X)):
            raise ContractError(f"decision vector outside the bounds of {self.id}")
        return X, single

    def distance_term(self, X, t: float) -> np.ndarray:
        """The ``g`` term; zero exactly on the global Pareto set branches."""
        X, single = self._check(X)
        g = self._g(X, t)
        return g[0] if single else g

    def _g(self, X: np.ndarray, t: float) -> np.ndarray:
        P, y = X[:, : self.n_pos], X[:, -1]
        g = np.full(X.shape[0], np.inf)
        for branch in self.branches:
            d = (y - branch.position(P, t)) ** 2 + branch.floor
            g = np.where(branch.active(P[:, 0]), np.minimum(g, d), g)
        return g

    def evaluate(self, X, t: float) -> np.ndarray:
        X, single = self._check(X)
        F = self.front(X[:, : self.n_pos], t) * (1.0 + self._g(X, t))[:, None]
        return F[0] if single else F

    def position_grid(self, H: int) -> np.ndarray:
        if H < 2:
            raise ContractError("need at least two sample points")
        if self.n_pos == 1:
            return np.linspace(0.0, 1.0, H)[:, None]
        return _sphere_positions(simplex_lattice(H))

    def sample_true_pof(self, t: float, H: int) -> np.ndarray:
        """Points of the analytic front at ``t``.

        Bi-objective fronts are sampled uniformly in ``f1``. The tri-objective
        front uses the largest simplex lattice with at most ``H`` points.
        """
        return self.front(self.position_grid(H), t)

    def sample_true_pos(self, t: float, H: int) -> np.ndarray:
        """Points on all global Pareto set branches at ``t``.

        Grid point ``i`` goes to the ``i mod k``-th branch covering it, so
        branches get equal shares up to one point, extras going to the first
        branches. Images of the returned points are exactly the points of
        :meth:`sample_true_pof` with the same ``H``.
        """
        if H < self.pos_count(t):
            raise ContractError(f"H={H} is smaller than the {self.pos_count(t)} Pareto set branches")
        P = self.position_grid(H)
        branches = self.global_branches
        covering = np.stack([b.active(P[:, 0]) for b in branches], axis=1)
        curves = np.stack([b.position(P, t) for b in branches], axis=1)
        choice = np.empty(P.shape[0], dtype=int)
        for i, row in enumerate(covering):
            options = np.flatnonzero(row)
            choice[i] = options[i % len(options)]
        y = curves[np.arange(P.shape[0]), choice]
        return np.column_stack([P, y])

    def sample_branches(self, t: float, n: int, local: bool = False) -> list[np.ndarray]:
        """The same position grid laid on each global (or local) branch separately."""
        P = self.position_grid(n)
        chosen = self.local_branches if local else self.global_branches
        out = []
        for b in chosen:
            Pb = P[b.active(P[:, 0])]
            out.append(np.column_stack([Pb, b.position(Pb, t)]))
        return out

    def random_solutions(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.bounds
        return lo + (hi - lo) * rng.random((n, self.n_var))

    def clip(self, X: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds
        return np.clip(X, lo, hi)

    @property
    def diagonal(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))

    def describe(self) -> dict:
        return {
            "id": self.id,
            "objectives": self.n_obj,
            "variables": self.n_var,
            "position_variables": self.n_pos,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "type": self.dmmf_type.value,
            "pof_geometry": self.pof_geometry,
            "pos_geometry": self.pos_geometry,
            "branches": len(self.global_branches),
            "local_branches": len(self.local_branches),
            "scalable": self.scalable,
            "formula": self.formula,
        }


def simplex_lattice(H: int, m: int = 3) -> np.ndarray:
    """Das-Dennis weights: the densest lattice on the unit simplex with at most ``H`` points."""
    divisions = 1
    while math.comb(divisions + 1 + m - 1, m - 1) <= H:
        divisions += 1
    rows = []
    for i in range(divisions + 1):
        for j in range(divisions + 1 - i):
            rows.append((i, j, divisions - i - j))
    return np.array(rows, dtype=float) / divisions


def _sphere_positions(W: np.ndarray) -> np.ndarray:
    # invert f = (cos a cos b, cos a sin b, sin a)^2 = w for a, b in [0, pi/2]
    w1, w3 = W[:, 0], W[:, 2]
    a = np.arcsin(np.sqrt(w3))
    rest = 1.0 - w3
    ratio = np.divide(w1, rest, out=np.ones_like(w1), where=rest > 0)
    b = np.arccos(np.sqrt(np.clip(ratio, 0.0, 1.0)))
    return np.column_stack([2 * a / math.pi, 2 * b / math.pi])


def _power_front(exponent: Callable[[float], float]) -> FrontFn:
    def front(P, t):
        x1 = P[:, 0]
        return np.column_stack([x1, 1.0 - x1 ** exponent(t)])

    return front


def _static_front(fn: Callable[[np.ndarray], np.ndarray]) -> FrontFn:
    def front(P, t):
        x1 = P[:, 0]
        return np.column_stack([x1, fn(x1)])

    return front


def _sphere_front(P, t):
    e = 2.0 ** (1.0 + G(t))
    a = 0.5 * math.pi * P[:, 0]
    b = 0.5 * math.pi * P[:, 1]
    base = np.column_stack([np.cos(a) * np.cos(b), np.cos(a) * np.sin(b), np.sin(a)])
    return np.abs(base) ** e


def _shifted_branches(shape: Callable[[np.ndarray, float], np.ndarray], offsets, moving=True):
    def make(offset):
        def position(P, t):
            return offset + (G(t) if moving else 0.0) + shape(P[:, 0], t)

        return Branch(position)

    return tuple(make(k) for k in offsets)


_BI_LOWER = (0.0, -2.0)
_BI_UPPER = (1.0, 3.0)


def example_problem() -> DynamicProblem:
    """The two-branch construction example with a piecewise ``g``."""
    branches = (
        Branch(lambda P, t: np.full(P.shape[0], G(t)), region=(0.0, 0.5)),
        Branch(lambda P, t: np.full(P.shape[0], G(t) + 1.0), region=(0.5, 1.0)),
    )
    return DynamicProblem(
        id="EXAMPLE",
        n_obj=2,
        n_pos=1,
        lower=_BI_LOWER,
        upper=_BI_UPPER,
        dmmf_type=DMMFType.TYPE_III,
        front=_power_front(shifted_exponent),
        branches=branches,
        pof_geometry="linear-concave",
        pos_geometry="piecewise linear",
        formula="f1=x1(1+g), f2=(1-x1^(|G|+1))(1+g); g=(x2-G)^2 if x1<0.5 else (x2-G-1)^2",
    )


def dmmf1() -> DynamicProblem:
    return DynamicProblem(
        "DMMF1", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_I,
        _static_front(lambda x: 1.0 - x**2),
        _shifted_branches(lambda x, t: 0.5 * x, (0.0, 1.0)),
        "concave", "linear",
        "f1=x1(1+g), f2=(1-x1^2)(1+g); g=min_k (x2-(G+k+0.5x1))^2, k=0,1",
    )


def dmmf2() -> DynamicProblem:
    return DynamicProblem(
        "DMMF2", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(swing_exponent),
        _shifted_branches(lambda x, t: 0.5 * x ** swing_exponent(t), (0.0, 1.0)),
        "convexity-concavity", "convexity-concavity",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min_k (x2-(G+k+0.5x1^E))^2, k=0,1",
    )


def dmmf3() -> DynamicProblem:
    return DynamicProblem(
        "DMMF3", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(swing_exponent),
        _shifted_branches(lambda x, t: 0.5 * x * (2.0 - x), (0.0, 1.0)),
        "convexity-concavity", "concave",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min_k (x2-(G+k+0.5x1(2-x1)))^2, k=0,1",
    )


def dmmf4() -> DynamicProblem:
    branches = (
        Branch(lambda P, t: 0.5 * P[:, 0] - 1.0),
        Branch(lambda P, t: 0.5 * P[:, 0] + 1.0 + 0.5 * G(t)),
    )
    return DynamicProblem(
        "DMMF4", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(swing_exponent), branches,
        "convexity-concavity", "static-dynamic",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min((x2-(0.5x1-1))^2, (x2-(0.5x1+1+0.5G))^2)",
    )


def dmmf5() -> DynamicProblem:
    return DynamicProblem(
        "DMMF5", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_II,
        _power_front(swing_exponent),
        _shifted_branches(lambda x, t: 0.3 * np.sin(2 * np.pi * x), (0.0, 1.0), moving=False),
        "convexity-concavity", "sine wave",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min_k (x2-(k+0.3sin(2pi x1)))^2, k=0,1",
    )


def dmmf6() -> DynamicProblem:
    shape = lambda P, t: 0.25 * (P[:, 0] ** swing_exponent(t) + P[:, 1] ** swing_exponent(t))  # noqa: E731

    def make(k):
        return Branch(lambda P, t: G(t) + k + shape(P, t))

    return DynamicProblem(
        "DMMF6", 3, 2, (0.0, 0.0, -2.0), (1.0, 1.0, 3.0), DMMFType.TYPE_III,
        _sphere_front, (make(0.0), make(1.0)),
        "convexity-concavity", "convexity-concavity",
        "E=2^(1+G), a=pi x1/2, b=pi x2/2; f=((cos a cos b)^E, (cos a sin b)^E, (sin a)^E)(1+g); "
        "g=min_k (y-(G+k+0.25(x1^(2^G)+x2^(2^G))))^2, k=0,1",
    )


def dmmf7(k: int = 2) -> DynamicProblem:
    if k < 1:
        raise ContractError("DMMF7 needs at least one Pareto set branch")
    return DynamicProblem(
        "DMMF7", 2, 1, (0.0, -2.0), (1.0, float(k + 1)), DMMFType.TYPE_I,
        _static_front(lambda x: 1.0 - x**2),
        _shifted_branches(lambda x, t: 0.3 * np.sin(2 * np.pi * x), tuple(float(j) for j in range(k))),
        "concave", "sine wave",
        f"f1=x1(1+g), f2=(1-x1^2)(1+g); g=min_j (x2-(G+j+0.3sin(2pi x1)))^2, j=0..{k - 1}",
        scalable=True,
        params={"k": k},
    )


def dmmf8() -> DynamicProblem:
    return DynamicProblem(
        "DMMF8", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(swing_exponent),
        _shifted_branches(lambda x, t: 0.5 * x ** shifted_exponent(t), (0.0, 1.0)),
        "convexity-concavity", "linear-convex",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min_k (x2-(G+k+0.5x1^(|G|+1)))^2, k=0,1",
    )


def dmmf9() -> DynamicProblem:
    shape = lambda P, t: G(t) + 0.5 * P[:, 0] ** swing_exponent(t)  # noqa: E731
    branches = (
        Branch(lambda P, t: shape(P, t)),
        Branch(lambda P, t: shape(P, t) + 1.0),
        Branch(lambda P, t: shape(P, t) - 0.8, floor=0.1),
    )
    return DynamicProblem(
        "DMMF9", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(lambda t: 1.0 + shifted_exponent(t)), branches,
        "concave", "convexity-concavity",
        "f1=x1(1+g), f2=(1-x1^(|G|+2))(1+g); s=G+0.5x1^(2^G); "
        "g=min((x2-s)^2, (x2-s-1)^2, (x2-s+0.8)^2+0.1)",
    )


def dmmf10() -> DynamicProblem:
    return DynamicProblem(
        "DMMF10", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(swing_exponent),
        _shifted_branches(lambda x, t: 0.3 * np.sin(2 * np.pi * x + 0.5 * np.pi * t), (0.0, 1.0)),
        "convexity-concavity", "sine wave",
        "E=2^G; f1=x1(1+g), f2=(1-x1^E)(1+g); g=min_k (x2-(G+k+0.3sin(2pi x1+0.5pi t)))^2, k=0,1",
    )


def dmmf11() -> DynamicProblem:
    return DynamicProblem(
        "DMMF11", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_I,
        _static_front(lambda x: 1.0 - np.sqrt(x)),
        _shifted_branches(lambda x, t: 0.25 * np.sin(3 * np.pi * x), (0.0, 1.0)),
        "convex", "sine wave",
        "f1=x1(1+g), f2=(1-sqrt(x1))(1+g); g=min_k (x2-(G+k+0.25sin(3pi x1)))^2, k=0,1",
    )


def dmmf12() -> DynamicProblem:
    return DynamicProblem(
        "DMMF12", 2, 1, _BI_LOWER, _BI_UPPER, DMMFType.TYPE_III,
        _power_front(shifted_exponent),
        _shifted_branches(lambda x, t: 0.2 * np.sin(4 * np.pi * x), (0.0, 1.0)),
        "linear-concavity", "sine wave",
        "f1=x1(1+g), f2=(1-x1^(|G|+1))(1+g); g=min_k (x2-(G+k+0.2sin(4pi x1)))^2, k=0,1",
    )


_BUILDERS: dict[str, Callable[..., DynamicProblem]] = {
    "DMMF1": dmmf1,
    "DMMF2": dmmf2,
    "DMMF3": dmmf3,
    "DMMF4": dmmf4,
    "DMMF5": dmmf5,
    "DMMF6": dmmf6,
    "DMMF7": dmmf7,
    "DMMF8": dmmf8,
    "DMMF9": dmmf9,
    "DMMF10": dmmf10,
    "DMMF11": dmmf11,
    "DMMF12": dmmf12,
}

PROBLEM_IDS = tuple(_BUILDERS)


def list_problems() -> list[DynamicProblem]:
    return [build() for build in _BUILDERS.values()]


def get_problem(name: str, **kwargs) -> DynamicProblem:
    key = name.upper()
    if key == "EXAMPLE":
        return example_problem()
    try:
        return _BUILDERS[key](**kwargs)
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {list(PROBLEM_IDS) + ['EXAMPLE']}") from None


def catalog_json(indent: int | None = 2) -> str:
    return json.dumps([p.describe() for p in list_problems()], indent=indent)
