"""NSGA-II with adaptive decision-space niching.

The niche count of a solution is the number of other solutions within its
radius ``R_i(g)`` in decision space. It is the secondary key on the
critical front and in tournaments; objective-space crowding breaks the
remaining ties.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .core import ContractError, Population, dominance_matrix
from .problems import DynamicProblem


NicheMode = Literal["adaptive", "fixed", "none"]


@dataclass(frozen=True)
class NicheParams:
    r0: float
    alpha: float = 0.5
    g_max: int = 10
    mode: NicheMode = "adaptive"

    def __post_init__(self):
        if self.r0 <= 0:
            raise ContractError("initial niche radius must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ContractError("alpha must lie in [0, 1)")
        if self.g_max < 1:
            raise ContractError("g_max must be at least 1")
        if self.mode not in ("adaptive", "fixed", "none"):
            raise ContractError(f"unknown niching mode {self.mode!r}")

    @classmethod
    def for_problem(cls, problem: DynamicProblem, g_max: int, alpha: float = 0.5,
                    mode: NicheMode = "adaptive", r0_fraction: float = 0.01) -> "NicheParams":
        return cls(r0=r0_fraction * problem.diagonal, alpha=alpha, g_max=g_max, mode=mode)


@dataclass(frozen=True)
class GAParams:
    pop_size: int = 100
    crossover_prob: float = 1.0
    sbx_eta: float = 20.0
    mutation_prob: float | None = None  # None means 1 / n_var
    pm_eta: float = 20.0

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ContractError("population size must be even and at least 4")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ContractError("crossover probability must lie in [0, 1]")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ContractError("mutation probability must lie in [0, 1]")
        if self.sbx_eta <= 0 or self.pm_eta <= 0:
            raise ContractError("distribution indices must be positive")

    def per_variable_mutation(self, n_var: int) -> float:
        return 1.0 / n_var if self.mutation_prob is None else self.mutation_prob


@dataclass
class RankedPopulation:
    rank: np.ndarray
    fronts: list[np.ndarray]
    crowding: np.ndarray
    fitness: np.ndarray
    niche_count: np.ndarray
    radius: np.ndarray
    var: np.ndarray


def nondominated_sort(F: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Split rows of ``F`` into Pareto fronts. Returns the fronts and a 0-based rank per row."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    rank = np.full(n, -1, dtype=int)
    fronts: list[np.ndarray] = []
    if n == 0:
        return fronts, rank
    D = dominance_matrix(F)
    dominated_by = D.sum(axis=0)
    current = np.flatnonzero(dominated_by == 0)
    level = 0
    while current.size:
        rank[current] = level
        fronts.append(current)
        dominated_by = dominated_by - D[current].sum(axis=0)
        dominated_by[rank >= 0] = -1
        current = np.flatnonzero(dominated_by == 0)
        level += 1
    return fronts, rank


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """Objective-space crowding distance of the rows of one front."""
    F = np.atleast_2d(F)
    n, m = F.shape
    cd = np.zeros(n)
    if n <= 2:
        cd[:] = np.inf
        return cd
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        col = F[order, j]
        span = col[-1] - col[0]
        cd[order[0]] = cd[order[-1]] = np.inf
        if span > 0:
            cd[order[1:-1]] += (col[2:] - col[:-2]) / span
    return cd


def adaptive_niche_radius(params: NicheParams, g, var):
    """``R0 * (1 - alpha * g / g_max) * (1 + alpha * var)``."""
    return params.r0 * (1.0 - params.alpha * np.asarray(g) / params.g_max) * (1.0 + params.alpha * np.asarray(var))


def scalar_fitness(rank: np.ndarray, crowding: np.ndarray, fronts: list[np.ndarray]) -> np.ndarray:
    """Front index plus ``1 - crowding`` normalised within the front (lower is better)."""
    norm = np.zeros(len(rank))
    for front in fronts:
        cd = crowding[front]
        finite = cd[np.isfinite(cd)]
        top = finite.max() if finite.size and finite.max() > 0 else 1.0
        norm[front] = np.where(np.isfinite(cd), np.clip(cd / top, 0.0, 1.0), 1.0)
    return rank + (1.0 - norm)


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", X, X)
    D2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(D2, 0.0, out=D2)
    np.fill_diagonal(D2, 0.0)
    return np.sqrt(D2)


def niche_statistics(X: np.ndarray, fitness: np.ndarray, radius, distances: np.ndarray | None = None):
    """Niche size and normalised fitness variance for every solution.

    ``radius`` may be a scalar or one radius per solution. Neighbours are the
    *other* solutions within the radius. The variance of their fitness is
    divided by the largest variance in the population, and is 0 for niches
    with fewer than two neighbours.

    Returns:
        ``(neighbor_count, var)`` arrays.
    """
    X = np.atleast_2d(X)
    n = X.shape[0]
    D = pairwise_distances(X) if distances is None else distances
    r = np.broadcast_to(np.asarray(radius, dtype=float), (n,))
    if np.any(r <= 0):
        raise ContractError("niche radius must be positive")
    mask = D <= r[:, None]
    np.fill_diagonal(mask, False)
    count = mask.sum(axis=1)
    f = np.asarray(fitness, dtype=float)
    safe = np.maximum(count, 1)
    mean = (mask @ f) / safe
    raw = (mask * (f[None, :] - mean[:, None]) ** 2).sum(axis=1) / safe
    raw[count < 2] = 0.0
    top = raw.max() if n else 0.0
    var = np.clip(raw / top, 0.0, 1.0) if top > 0 else np.zeros(n)
    return count, var


def rank_population(X: np.ndarray, F: np.ndarray, niche: NicheParams, g: int,
                    distances: np.ndarray | None = None) -> RankedPopulation:
    fronts, rank = nondominated_sort(F)
    crowding = np.zeros(len(rank))
    for front in fronts:
        crowding[front] = crowding_distance(F[front])
    fitness = scalar_fitness(rank, crowding, fronts)
    n = len(rank)
    if niche.mode == "none":
        zeros = np.zeros(n)
        return RankedPopulation(rank, fronts, crowding, fitness, zeros.astype(int), np.full(n, np.nan), zeros)
    D = pairwise_distances(X) if distances is None else distances
    if niche.mode == "fixed":
        radius = np.full(n, niche.r0)
        count, var = niche_statistics(X, fitness, radius, D)
        return RankedPopulation(rank, fronts, crowding, fitness, count, radius, np.zeros(n))
    g = min(max(g, 0), niche.g_max)
    base = adaptive_niche_radius(niche, g, 0.0)
    _, var = niche_statistics(X, fitness, base, D)
    radius = np.broadcast_to(adaptive_niche_radius(niche, g, var), (n,)).copy()
    count, _ = niche_statistics(X, fitness, radius, D)
    return RankedPopulation(rank, fronts, crowding, fitness, count, radius, var)


def sbx_crossover(p1, p2, bounds, ga: GAParams, rng: np.random.Generator):
    """Simulated binary crossover for one pair or row-aligned batches of pairs.

    Children are clipped into ``bounds`` (a ``(2, n_var)`` array).
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    single = p1.ndim == 1
    A, B = np.atleast_2d(p1), np.atleast_2d(p2)
    n, d = A.shape
    do_pair = rng.random(n) < ga.crossover_prob
    do_var = rng.random((n, d)) < 0.5
    u = rng.random((n, d))
    swap = rng.random((n, d)) < 0.5
    e = 1.0 / (ga.sbx_eta + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** e, (1.0 / (2.0 * (1.0 - u))) ** e)
    active = do_pair[:, None] & do_var & (np.abs(A - B) > 1e-14)
    c1 = np.where(active, 0.5 * ((1 + beta) * A + (1 - beta) * B), A)
    c2 = np.where(active, 0.5 * ((1 - beta) * A + (1 + beta) * B), B)
    swap &= active
    c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
    lo, hi = np.asarray(bounds, dtype=float)
    c1, c2 = np.clip(c1, lo, hi), np.clip(c2, lo, hi)
    return (c1[0], c2[0]) if single else (c1, c2)


def polynomial_mutation(x, bounds, ga: GAParams, rng: np.random.Generator):
    """Bounded polynomial mutation of one vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x).copy()
    lo, hi = np.asarray(bounds, dtype=float)
    span = hi - lo
    pm = ga.per_variable_mutation(X.shape[1])
    hit = rng.random(X.shape) < pm
    u = rng.random(X.shape)
    if pm > 0:
        e = 1.0 / (ga.pm_eta + 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = np.where(span > 0, (X - lo) / span, 0.0)
            d2 = np.where(span > 0, (hi - X) / span, 0.0)
        low = u < 0.5
        val_lo = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (ga.pm_eta + 1.0)
        val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (ga.pm_eta + 1.0)
        dq = np.where(low, np.abs(val_lo) ** e - 1.0, 1.0 - np.abs(val_hi) ** e)
        X = np.where(hit, np.clip(X + dq * span, lo, hi), X)
    return X[0] if single else X


def _truncate_by_niche(critical: np.ndarray, selected: np.ndarray, k: int, ranked: RankedPopulation,
                       D: np.ndarray) -> np.ndarray:
    # Repeatedly drop the most crowded member (decision-space niche count, then
    # smallest crowding distance, then highest index) until k remain.
    pool = np.concatenate([selected, critical])
    R = ranked.radius[critical]
    within = D[np.ix_(critical, pool)] <= R[:, None]
    within[np.arange(len(critical)), len(selected) + np.arange(len(critical))] = False
    counts = within.sum(axis=1).astype(float)
    cd = ranked.crowding[critical]
    alive = np.ones(len(critical), dtype=bool)
    order_key = -critical.astype(float)
    for _ in range(len(critical) - k):
        cand = np.flatnonzero(alive)
        keys = np.lexsort((order_key[cand], cd[cand], -counts[cand]))
        drop = cand[keys[0]]
        alive[drop] = False
        counts -= within[:, len(selected) + drop]
    return critical[alive]


def environmental_selection(union: Population, N: int, niche: NicheParams, g: int,
                            ranked: RankedPopulation | None = None) -> np.ndarray:
    """Indices of the ``N`` survivors of ``union``.

    Whole fronts are taken while they fit; the critical front is truncated
    by decision-space niche count, or by crowding distance when niching is off.
    """
    if N > len(union):
        raise ContractError(f"cannot select {N} from {len(union)} solutions")
    D = None if niche.mode == "none" else pairwise_distances(union.X)
    if ranked is None:
        ranked = rank_population(union.X, union.F, niche, g, D)
    chosen: list[np.ndarray] = []
    size = 0
    for front in ranked.fronts:
        if size + len(front) <= N:
            chosen.append(front)
            size += len(front)
            if size == N:
                break
            continue
        k = N - size
        selected = np.concatenate(chosen) if chosen else np.empty(0, dtype=int)
        if niche.mode == "none":
            keys = np.lexsort((front, -ranked.crowding[front]))
            chosen.append(front[keys[:k]])
        else:
            chosen.append(np.sort(_truncate_by_niche(front, selected, k, ranked, D)))
        break
    return np.concatenate(chosen)


def tournament(ranked: RankedPopulation, n: int, rng: np.random.Generator) -> np.ndarray:
    """Binary tournament on (front, niche count, -crowding); ties go to the first contender."""
    size = len(ranked.rank)
    a = rng.integers(0, size, n)
    b = rng.integers(0, size, n)
    key_a = np.stack([ranked.rank[a], ranked.niche_count[a], -ranked.crowding[a]], axis=1)
    key_b = np.stack([ranked.rank[b], ranked.niche_count[b], -ranked.crowding[b]], axis=1)
    with np.errstate(invalid="ignore"):
        diff = key_a - key_b
    diff = np.where(np.isnan(diff), 0.0, diff)
    first = np.argmax(diff != 0, axis=1)
    decisive = diff[np.arange(n), first]
    return np.where(decisive <= 0, a, b)


def evaluate(problem: DynamicProblem, X: np.ndarray, t: float) -> Population:
    return Population(X, problem.evaluate(X, t), t)


class NichingNSGA2:
    """One-environment generational loop; the caller owns the generation counter."""

    def __init__(self, problem: DynamicProblem, ga: GAParams, niche: NicheParams, rng: np.random.Generator):
        self.problem = problem
        self.ga = ga
        self.niche = niche
        self.rng = rng

    def make_offspring(self, pop: Population, g: int) -> np.ndarray:
        ranked = rank_population(pop.X, pop.F, self.niche, g)
        N = self.ga.pop_size
        parents = tournament(ranked, N, self.rng)
        A, B = pop.X[parents[0::2]], pop.X[parents[1::2]]
        bounds = self.problem.bounds
        c1, c2 = sbx_crossover(A, B, bounds, self.ga, self.rng)
        children = np.empty((N, pop.X.shape[1]))
        children[0::2], children[1::2] = c1, c2
        return polynomial_mutation(children, bounds, self.ga, self.rng)

    def step(self, pop: Population, g: int) -> Population:
        children = self.make_offspring(pop, g)
        union = pop.concat(evaluate(self.problem, children, pop.t))
        keep = environmental_selection(union, self.ga.pop_size, self.niche, g)
        return union.take(keep)


def first_front(pop: Population) -> Population:
    fronts, _ = nondominated_sort(pop.F)
    return pop.take(np.sort(fronts[0]))


def run_static_optimizer(problem: DynamicProblem, t: float, init_pop, generations: int, ga: GAParams,
                         niche: NicheParams, rng: np.random.Generator) -> tuple[Population, Population]:
    """Evolve ``init_pop`` for ``generations`` generations at fixed ``t``.

    ``init_pop`` is either a :class:`Population` (re-evaluated if its ``t``
    differs) or an array of decision vectors. The niche generation counter
    runs 1..generations. Returns the final population and its first front.
    """
    if isinstance(init_pop, Population):
        pop = init_pop if init_pop.t == t else evaluate(problem, init_pop.X, t)
    else:
        pop = evaluate(problem, np.asarray(init_pop, dtype=float), t)
    if len(pop) != ga.pop_size:
        ga = replace(ga, pop_size=len(pop))
    optimizer = NichingNSGA2(problem, ga, niche, rng)
    for g in range(1, generations + 1):
        pop = optimizer.step(pop, g)
    return pop, first_front(pop)
