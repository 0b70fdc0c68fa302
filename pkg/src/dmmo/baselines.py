"""Algorithm variants: the full method, a random-reinitialisation baseline and four ablations.

All variants run the same static optimizer. They differ only in the
response executed at an environment change and in the niching mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cae import CAEParams, cae_generate_initpop
from .core import ContractError, Population
from .moea import GAParams, NicheMode, NicheParams
from .problems import DynamicProblem

Response = Literal["cae", "cae_global", "translate", "reinit"]


@dataclass(frozen=True)
class AlgorithmVariant:
    id: str
    response: Response
    niching: NicheMode
    reinit_fraction: float = 1.0

    @property
    def needs_history(self) -> bool:
        return self.response != "reinit"


VARIANTS: dict[str, AlgorithmVariant] = {
    v.id: v
    for v in (
        AlgorithmVariant("CAE-AN", "cae", "adaptive"),
        AlgorithmVariant("DNSGA2-A", "reinit", "none", reinit_fraction=0.2),
        AlgorithmVariant("CAE-AN_none", "reinit", "none", reinit_fraction=1.0),
        AlgorithmVariant("CAE-AN_noC", "cae_global", "adaptive"),
        AlgorithmVariant("CAE-AN_noAE", "translate", "adaptive"),
        AlgorithmVariant("CAE-AN_noadaptive", "cae", "fixed"),
    )
}


def get_variant(name: str) -> AlgorithmVariant:
    try:
        return VARIANTS[name]
    except KeyError:
        raise KeyError(f"unknown algorithm {name!r}; choose from {list(VARIANTS)}") from None


def random_reinit_response(prev_pop: Population, fraction: float, problem: DynamicProblem, t_new: float,
                           rng: np.random.Generator) -> Population:
    """Re-evaluate the population at ``t_new`` after replacing ``round(fraction * N)`` members at random."""
    if not 0.0 <= fraction <= 1.0:
        raise ContractError("fraction must lie in [0, 1]")
    X = np.array(prev_pop.X, dtype=float)
    n = len(X)
    n_new = int(round(fraction * n))
    if n_new:
        slots = np.sort(rng.choice(n, size=n_new, replace=False))
        X[slots] = problem.random_solutions(n_new, rng)
    return Population(X, problem.evaluate(X, t_new), t_new)


def ablation_response(variant: AlgorithmVariant, pos_t2: Population | None, pos_t1: Population | None, N: int,
                      problem: DynamicProblem, t_new: float, rng: np.random.Generator,
                      prev_pop: Population | None = None, cae: CAEParams | None = None,
                      ga: GAParams | None = None, niche: NicheParams | None = None) -> Population:
    """Initial population produced by ``variant`` for the environment at ``t_new``."""
    if variant.response == "reinit":
        if prev_pop is None:
            return _random_population(problem, N, t_new, rng)
        return random_reinit_response(prev_pop, variant.reinit_fraction, problem, t_new, rng)
    if pos_t2 is None or pos_t1 is None:
        raise ContractError(f"{variant.id} needs the two previous Pareto sets")
    clustered = variant.response != "cae_global"
    mode = "translate" if variant.response == "translate" else "transfer"
    return cae_generate_initpop(pos_t2, pos_t1, N, problem, t_new, rng, cae, ga, niche, clustered, mode)


def _random_population(problem: DynamicProblem, N: int, t: float, rng: np.random.Generator) -> Population:
    X = problem.random_solutions(N, rng)
    return Population(X, problem.evaluate(X, t), t)


def respond(variant: AlgorithmVariant, env_index: int, prev_pop: Population, archive: list[Population],
            problem: DynamicProblem, t_new: float, rng: np.random.Generator, cae: CAEParams | None = None,
            ga: GAParams | None = None, niche: NicheParams | None = None) -> Population:
    """Response at the start of environment ``env_index``.

    History-based variants reinitialise completely until two archived Pareto
    sets exist, then predict from the last two.
    """
    N = len(prev_pop)
    if variant.needs_history:
        if env_index < 2 or len(archive) < 2:
            return _random_population(problem, N, t_new, rng)
        return ablation_response(variant, archive[-2], archive[-1], N, problem, t_new, rng, prev_pop, cae, ga, niche)
    return ablation_response(variant, None, None, N, problem, t_new, rng, prev_pop, cae, ga, niche)
