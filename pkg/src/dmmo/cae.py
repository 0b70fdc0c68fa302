"""Cluster, match and predict: the dynamic response run at each environment change.

The Pareto sets archived for the two previous environments are clustered
with DBSCAN. Clusters are matched across time by centroid distance, and
each matched pair gets its own closed-form regularised linear map that
carries the older cluster onto the newer one. The map is then applied to
the newer cluster once more, with Gaussian noise scaled by the fit residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import ContractError, Population
from .moea import GAParams, NicheParams, environmental_selection, pairwise_distances, polynomial_mutation
from .problems import DynamicProblem

logger = logging.getLogger(__name__)


class SingularTransferError(np.linalg.LinAlgError):
    """The unregularised normal equations of the transfer fit are singular."""


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[np.ndarray, ...]
    noise: np.ndarray
    epsilon: float
    eta: int
    core: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        n = sum(len(c) for c in self.clusters) + len(self.noise)
        out = np.full(n, -1, dtype=int)
        for k, members in enumerate(self.clusters):
            out[members] = k
        return out


def lexicographic_order(X: np.ndarray) -> np.ndarray:
    return np.lexsort(X.T[::-1]) if X.size else np.arange(len(X))


def dbscan(points, epsilon: float, eta: int) -> ClusterSet:
    """Density-based clustering with Euclidean distance.

    A point is core when at least ``eta`` points, itself included, lie within
    ``epsilon``. Points are processed in lexicographic order, so the result
    does not depend on input order. A border point joins the cluster of its
    first core neighbour in that order. Returned indices refer to the input order.
    """
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    if eta < 1:
        raise ContractError("eta must be at least 1")
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = X.shape[0] if np.asarray(points).size else 0
    if n == 0:
        empty = np.empty(0, dtype=int)
        return ClusterSet((), empty, epsilon, eta, empty)
    order = lexicographic_order(X)
    Xs = X[order]
    near = pairwise_distances(Xs) <= epsilon
    is_core = near.sum(axis=1) >= eta
    label = np.full(n, -1, dtype=int)
    n_clusters = 0
    for seed in np.flatnonzero(is_core):
        if label[seed] >= 0:
            continue
        label[seed] = n_clusters
        stack = [seed]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(near[i] & is_core & (label < 0)):
                label[j] = n_clusters
                stack.append(j)
        n_clusters += 1
    for i in np.flatnonzero(~is_core):
        cores = np.flatnonzero(near[i] & is_core)
        if cores.size:
            label[i] = label[cores[0]]
    clusters = tuple(np.sort(order[label == k]) for k in range(n_clusters))
    noise = np.sort(order[label < 0])
    return ClusterSet(clusters, noise, epsilon, eta, np.sort(order[is_core]))


@dataclass(frozen=True)
class Centroid:
    decision_mean: np.ndarray
    objective_mean: np.ndarray | None
    size: int
    members: np.ndarray


def compute_centroids(clusters: ClusterSet, X, F=None) -> list[Centroid]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    F = None if F is None else np.atleast_2d(np.asarray(F, dtype=float))
    out = []
    for members in clusters.clusters:
        out.append(Centroid(
            X[members].mean(axis=0),
            None if F is None else F[members].mean(axis=0),
            len(members),
            members,
        ))
    return out


@dataclass(frozen=True)
class MatchedPair:
    prev: int
    curr: int
    distance: float


def match_clusters(prev: list[Centroid], curr: list[Centroid]):
    """Greedy pairing by ascending decision-space centroid distance.

    Returns:
        ``(pairs, unmatched_prev, unmatched_curr)``; ``pairs`` are in the
        order they were accepted, so their distances never decrease.
    """
    if not prev or not curr:
        return [], list(range(len(prev))), list(range(len(curr)))
    A = np.array([c.decision_mean for c in prev])
    B = np.array([c.decision_mean for c in curr])
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    flat = np.argsort(D, axis=None, kind="stable")
    used_prev: set[int] = set()
    used_curr: set[int] = set()
    pairs = []
    for idx in flat:
        i, j = divmod(int(idx), D.shape[1])
        if i in used_prev or j in used_curr:
            continue
        pairs.append(MatchedPair(i, j, float(D[i, j])))
        used_prev.add(i)
        used_curr.add(j)
        if len(pairs) == min(D.shape):
            break
    return (
        pairs,
        [i for i in range(len(prev)) if i not in used_prev],
        [j for j in range(len(curr)) if j not in used_curr],
    )


@dataclass(frozen=True)
class TransferModel:
    M: np.ndarray
    lam: float
    mse: float
    affine: bool = False

    @property
    def perturbation_scale(self) -> float:
        return float(np.sqrt(self.mse))


def _augment(X: np.ndarray) -> np.ndarray:
    return np.vstack([X, np.ones((1, X.shape[1]))])


def fit_transfer(X_prev, X_curr, lam: float, affine: bool = False) -> TransferModel:
    """Closed-form ``M = (X_curr X_prev^T)(X_prev X_prev^T + lam I)^-1``.

    Points are columns. With ``affine=True`` a constant row is appended to
    both matrices so ``M`` can also express translations; ``mse`` is then
    measured on the original rows only.
    """
    Xp = np.atleast_2d(np.asarray(X_prev, dtype=float))
    Xc = np.atleast_2d(np.asarray(X_curr, dtype=float))
    if Xp.shape != Xc.shape or Xp.shape[1] < 1:
        raise ContractError(f"paired matrices must share a shape with >= 1 column: {Xp.shape} vs {Xc.shape}")
    if lam < 0:
        raise ContractError("lambda must be nonnegative")
    d = Xp.shape[0]
    if affine:
        Xp, Xc = _augment(Xp), _augment(Xc)
    A = Xp @ Xp.T + lam * np.eye(Xp.shape[0])
    B = Xc @ Xp.T
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularTransferError("X_prev X_prev^T is singular; use lambda > 0")
    M = np.linalg.solve(A.T, B.T).T
    resid = (Xc - M @ Xp)[:d]
    mse = float(np.mean(resid**2))
    return TransferModel(M, lam, mse, affine)


def predict(model: TransferModel, X_curr, rng: np.random.Generator | None = None) -> np.ndarray:
    """``M X_curr`` plus i.i.d. Gaussian noise of std ``sqrt(mse)`` (columns are points)."""
    X = np.atleast_2d(np.asarray(X_curr, dtype=float))
    out = (model.M @ _augment(X))[:-1] if model.affine else model.M @ X
    if model.mse > 0:
        if rng is None:
            raise ContractError("a random generator is needed when the fit residual is nonzero")
        out = out + rng.normal(0.0, model.perturbation_scale, size=out.shape)
    return out


def pair_by_translation(prev_pts: np.ndarray, curr_pts: np.ndarray) -> np.ndarray:
    """For each current point, the index of the nearest previous point after
    shifting the previous set by the centroid difference (with replacement)."""
    shift = curr_pts.mean(axis=0) - prev_pts.mean(axis=0)
    moved = prev_pts + shift
    d = np.linalg.norm(curr_pts[:, None, :] - moved[None, :, :], axis=2)
    return np.argmin(d, axis=1)


@dataclass(frozen=True)
class CAEParams:
    epsilon: float | None = None  # None means 0.1 * decision-space diagonal
    eta: int = 5
    lam: float = 1e-3

    def resolve_epsilon(self, problem: DynamicProblem) -> float:
        return 0.1 * problem.diagonal if self.epsilon is None else self.epsilon


PredictionMode = Literal["transfer", "translate"]


def _normalize(problem: DynamicProblem, X: np.ndarray) -> np.ndarray:
    lo, hi = problem.bounds
    return (X - lo) / (hi - lo)


def _denormalize(problem: DynamicProblem, Z: np.ndarray) -> np.ndarray:
    lo, hi = problem.bounds
    return lo + Z * (hi - lo)


def _predict_group(prev_pts, curr_pts, mode: PredictionMode, lam: float, rng) -> np.ndarray:
    if mode == "translate":
        return curr_pts + (curr_pts.mean(axis=0) - prev_pts.mean(axis=0))
    # Inputs are taken relative to their cluster centroid and the targets are
    # displacements, so the ridge term shrinks towards "repeat the last move"
    # rather than towards the origin. Points on a Pareto set branch are
    # collinear with the constant row, and the plain fit would otherwise split
    # a translation arbitrarily between the two.
    idx = pair_by_translation(prev_pts, curr_pts)
    src = prev_pts[idx]
    model = fit_transfer((src - prev_pts.mean(axis=0)).T, (curr_pts - src).T, lam, affine=True)
    return curr_pts + predict(model, (curr_pts - curr_pts.mean(axis=0)).T, rng).T


def predict_solutions(pos_t2: Population, pos_t1: Population, problem: DynamicProblem, params: CAEParams,
                      rng: np.random.Generator, clustered: bool = True,
                      mode: PredictionMode = "transfer") -> tuple[np.ndarray, int]:
    """Predicted decision vectors for the next environment, clipped to bounds.

    With ``clustered=False`` a single model is fitted on the two whole sets.
    Returns the predictions and the number of matched groups that produced them.
    """
    if len(pos_t2) == 0 or len(pos_t1) == 0:
        raise ContractError("both archived Pareto sets must be non-empty")
    Z2 = _normalize(problem, pos_t2.X)
    Z1 = _normalize(problem, pos_t1.X)
    if not clustered:
        return problem.clip(_denormalize(problem, _predict_group(Z2, Z1, mode, params.lam, rng))), 1
    eps = params.resolve_epsilon(problem)
    clus2 = dbscan(pos_t2.X, eps, params.eta)
    clus1 = dbscan(pos_t1.X, eps, params.eta)
    cents2 = compute_centroids(clus2, pos_t2.X, pos_t2.F)
    cents1 = compute_centroids(clus1, pos_t1.X, pos_t1.F)
    pairs, _, unmatched = match_clusters(cents2, cents1)
    chunks = [
        _predict_group(Z2[cents2[p.prev].members], Z1[cents1[p.curr].members], mode, params.lam, rng)
        for p in pairs
    ]
    if not chunks:
        return np.empty((0, problem.n_var)), 0
    # Solutions of t-1 with no partner at t-2 (unmatched clusters, noise) would
    # otherwise be dropped along with the POS they sit on; move them by the
    # mean displacement of the matched clusters instead.
    leftover = np.concatenate([cents1[j].members for j in unmatched] + [clus1.noise]).astype(int)
    if leftover.size:
        shift = np.mean([Z1[cents1[p.curr].members].mean(0) - Z2[cents2[p.prev].members].mean(0) for p in pairs], axis=0)
        chunks.append(Z1[np.sort(leftover)] + shift)
    return problem.clip(_denormalize(problem, np.vstack(chunks))), len(pairs)


def complete_population(X: np.ndarray, N: int, problem: DynamicProblem, t_new: float, rng: np.random.Generator,
                        ga: GAParams, niche: NicheParams) -> Population:
    """Evaluate candidates and bring them to exactly ``N`` solutions.

    A shortfall is filled first with one mutated copy per candidate, then
    with uniform random solutions; a surplus is cut by environmental selection.
    """
    X = np.asarray(X, dtype=float).reshape(-1, problem.n_var)
    k = len(X)
    if k < N:
        n_mut = min(N - k, k)
        extra = []
        if n_mut:
            picks = rng.permutation(k)[:n_mut]
            extra.append(polynomial_mutation(X[picks], problem.bounds, ga, rng))
        extra.append(problem.random_solutions(N - k - n_mut, rng))
        X = np.vstack([X] + extra)
    pop = Population(X, problem.evaluate(X, t_new), t_new)
    if len(pop) > N:
        pop = pop.take(environmental_selection(pop, N, niche, 0))
    return pop


def cae_generate_initpop(pos_t2: Population, pos_t1: Population, N: int, problem: DynamicProblem, t_new: float,
                         rng: np.random.Generator, params: CAEParams | None = None, ga: GAParams | None = None,
                         niche: NicheParams | None = None, clustered: bool = True,
                         mode: PredictionMode = "transfer") -> Population:
    """Initial population for the environment at ``t_new``."""
    params = params or CAEParams()
    ga = ga or GAParams(pop_size=N)
    niche = niche or NicheParams.for_problem(problem, g_max=1)
    predicted, n_pairs = predict_solutions(pos_t2, pos_t1, problem, params, rng, clustered, mode)
    if n_pairs == 0:
        logger.info("no matched clusters at t=%s; reusing the last Pareto set", t_new)
        predicted = problem.clip(pos_t1.X)
    return complete_population(predicted, N, problem, t_new, rng, ga, niche)
