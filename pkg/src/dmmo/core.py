"""Value types, Pareto dominance and the environment-change clock."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


class ContractError(ValueError):
    """Raised when an operation is called outside its preconditions."""


@dataclass(frozen=True)
class DynamicConfig:
    """Schedule of environmental changes.

    ``t = floor(tau / tau_t) / n_t``: ``n_t`` sets how finely t advances,
    ``tau_t`` is the number of generations spent in each environment.
    """

    n_t: int
    tau_t: int
    num_changes: int = 30

    def __post_init__(self):
        for name in ("n_t", "tau_t", "num_changes"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ContractError(f"{name} must be a positive integer, got {value!r}")

    @property
    def total_generations(self) -> int:
        return self.num_changes * self.tau_t


CONFIGS: dict[str, DynamicConfig] = {
    "C1": DynamicConfig(n_t=5, tau_t=10),
    "C2": DynamicConfig(n_t=10, tau_t=5),
    "C3": DynamicConfig(n_t=5, tau_t=5),
    "C4": DynamicConfig(n_t=10, tau_t=10),
}


def get_config(name: str, num_changes: int | None = None) -> DynamicConfig:
    try:
        cfg = CONFIGS[name]
    except KeyError:
        raise KeyError(f"unknown config {name!r}; choose from {sorted(CONFIGS)}") from None
    if num_changes is not None:
        cfg = DynamicConfig(cfg.n_t, cfg.tau_t, num_changes)
    return cfg


def time_of_generation(tau: int, config: DynamicConfig) -> float:
    if tau < 0:
        raise ContractError(f"generation must be nonnegative, got {tau}")
    return (tau // config.tau_t) / config.n_t


def environment_changed(tau: int, config: DynamicConfig) -> bool:
    """True when generation ``tau`` opens a new environment."""
    if tau < 1:
        raise ContractError(f"environment_changed needs tau >= 1, got {tau}")
    return time_of_generation(tau, config) != time_of_generation(tau - 1, config)


def environment_starts(config: DynamicConfig, generations: int | None = None) -> list[int]:
    """Generations at which an environment begins, including generation 0."""
    total = config.total_generations if generations is None else generations
    return [0] + [tau for tau in range(1, total) if environment_changed(tau, config)]


@dataclass(frozen=True)
class EnvironmentClock:
    generation: int
    config: DynamicConfig

    @property
    def t(self) -> float:
        return time_of_generation(self.generation, self.config)

    @property
    def environment_index(self) -> int:
        return self.generation // self.config.tau_t

    def tick(self) -> "EnvironmentClock":
        return EnvironmentClock(self.generation + 1, self.config)


def dominates(a, b) -> bool:
    """Pareto dominance for minimisation: ``a`` is no worse everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"objective vectors differ in shape: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(F: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when row ``i`` dominates row ``j``."""
    F = np.asarray(F, dtype=float)
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


@dataclass(frozen=True)
class Solution:
    decision: np.ndarray
    objectives: np.ndarray
    eval_time: float


@dataclass(frozen=True)
class Population:
    """A set of solutions stored row-wise, all evaluated at ``t``."""

    X: np.ndarray
    F: np.ndarray
    t: float

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        F = np.array(self.F, dtype=float, ndmin=2)
        if X.shape[0] != F.shape[0]:
            raise ContractError(f"{X.shape[0]} decisions but {F.shape[0]} objective rows")
        if not np.all(np.isfinite(F)):
            raise ContractError("objective values must be finite")
        X.flags.writeable = False
        F.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "F", F)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> Solution:
        return Solution(self.X[i], self.F[i], self.t)

    def __iter__(self) -> Iterator[Solution]:
        return (self[i] for i in range(len(self)))

    def take(self, idx) -> "Population":
        idx = np.asarray(idx, dtype=int)
        return Population(self.X[idx], self.F[idx], self.t)

    def concat(self, other: "Population") -> "Population":
        if self.t != other.t:
            raise ContractError("cannot merge populations evaluated at different times")
        return Population(np.vstack([self.X, other.X]), np.vstack([self.F, other.F]), self.t)
