"""Experiment orchestration: seeded runs over the environment schedule, result files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baselines import AlgorithmVariant, get_variant, respond
from .cae import CAEParams
from .core import DynamicConfig, EnvironmentClock, Population, environment_changed, get_config
from .metrics import MetricSeries, igd, igdx
from .moea import GAParams, NicheParams, NichingNSGA2, first_front
from .problems import DynamicProblem, get_problem
from .stats import render_table, summarize

logger = logging.getLogger(__name__)

OUT_ENV_VAR = "DMMO_OUT"
RUN_COLUMNS = ("run_id", "problem", "config", "algorithm", "env_index", "t", "igd", "igdx")


@dataclass(frozen=True)
class RunSettings:
    pop_size: int | None = None  # None: 100 for two objectives, 150 for three
    alpha: float = 0.5
    cae: CAEParams = field(default_factory=CAEParams)
    num_changes: int | None = None
    pof_samples: int | None = None  # None: 500, or 1000 for three objectives
    pos_samples: int = 500


def default_pop_size(problem: DynamicProblem) -> int:
    return 150 if problem.n_obj == 3 else 100


@dataclass
class EnvironmentRecord:
    index: int
    t: float
    igd: float
    igdx: float
    pos: Population


@dataclass
class RunRecord:
    run_id: int
    problem: str
    config: str
    algorithm: str
    seed: int
    environments: list[EnvironmentRecord]
    wall_time: float = 0.0

    @property
    def series(self) -> MetricSeries:
        s = MetricSeries()
        for env in self.environments:
            s.append(env.t, env.igd, env.igdx)
        return s

    @property
    def migd(self) -> float:
        return self.series.migd

    @property
    def migdx(self) -> float:
        return self.series.migdx

    def rows(self) -> list[dict]:
        return [
            {"run_id": self.run_id, "problem": self.problem, "config": self.config, "algorithm": self.algorithm,
             "env_index": e.index, "t": e.t, "igd": e.igd, "igdx": e.igdx}
            for e in self.environments
        ]


def derive_seed(base_seed: int, problem: str, config: str, algorithm: str, run_index: int) -> int:
    """Seed that depends only on the run's identity, never on execution order."""
    key = f"{base_seed}|{problem}|{config}|{algorithm}|{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


class _References:
    def __init__(self, problem: DynamicProblem, settings: RunSettings):
        self.problem = problem
        self.n_pof = settings.pof_samples or (1000 if problem.n_obj == 3 else 500)
        self.n_pos = settings.pos_samples
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def __call__(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if t not in self._cache:
            self._cache[t] = (self.problem.sample_true_pof(t, self.n_pof), self.problem.sample_true_pos(t, self.n_pos))
        return self._cache[t]


def run_single(problem: DynamicProblem, config: DynamicConfig, variant: AlgorithmVariant, seed: int,
               settings: RunSettings | None = None, run_id: int = 0, config_name: str = "") -> RunRecord:
    """One independent run: ``num_changes * tau_t`` generations under the change schedule.

    Each environment's final first front is archived and scored against the
    true sets at that environment's ``t``.
    """
    settings = settings or RunSettings()
    if settings.num_changes is not None:
        config = DynamicConfig(config.n_t, config.tau_t, settings.num_changes)
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    N = settings.pop_size or default_pop_size(problem)
    ga = GAParams(pop_size=N)
    niche = NicheParams.for_problem(problem, g_max=config.tau_t, alpha=settings.alpha, mode=variant.niching)
    optimizer = NichingNSGA2(problem, ga, niche, rng)
    references = _References(problem, settings)

    clock = EnvironmentClock(0, config)
    X0 = problem.random_solutions(N, rng)
    pop = Population(X0, problem.evaluate(X0, clock.t), clock.t)
    archive: list[Population] = []
    records: list[EnvironmentRecord] = []

    def close_environment():
        pos = first_front(pop)
        archive.append(pos)
        pof_ref, pos_ref = references(pop.t)
        records.append(EnvironmentRecord(len(records), pop.t, igd(pof_ref, pos.F), igdx(pos_ref, pos.X), pos))

    g = 0
    for tau in range(config.total_generations):
        if tau > 0 and environment_changed(tau, config):
            close_environment()
            clock = EnvironmentClock(tau, config)
            pop = respond(variant, len(records), pop, archive, problem, clock.t, rng, settings.cae, ga, niche)
            g = 0
        g += 1
        pop = optimizer.step(pop, g)
    close_environment()
    return RunRecord(run_id, problem.id, config_name, variant.id, seed, records, time.perf_counter() - started)


def render_rows(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUN_COLUMNS)
    for r in rows:
        writer.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in RUN_COLUMNS])
    return buf.getvalue()


def parse_rows(text: str) -> list[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        out.append({
            "run_id": int(r["run_id"]), "problem": r["problem"], "config": r["config"], "algorithm": r["algorithm"],
            "env_index": int(r["env_index"]), "t": float(r["t"]), "igd": float(r["igd"]), "igdx": float(r["igdx"]),
        })
    return out


def run_level_results(rows: Iterable[dict]) -> list[dict]:
    """Collapse per-environment rows into one MIGD/MIGDx record per run."""
    grouped: dict[tuple, list[dict]] = {}
    for r in rows:
        grouped.setdefault((r["problem"], r["config"], r["algorithm"], r["run_id"]), []).append(r)
    out = []
    for (problem, config, algorithm, run_id), env_rows in grouped.items():
        series = MetricSeries()
        for r in sorted(env_rows, key=lambda r: r["env_index"]):
            series.append(r["t"], r["igd"], r["igdx"])
        out.append({"problem": problem, "config": config, "algorithm": algorithm, "run_id": run_id,
                    "migd": series.migd, "migdx": series.migdx})
    return out


def curve_rows(rows: Iterable[dict]) -> list[dict]:
    """Mean IGD/IGDx per environment and algorithm, for plotting change-by-change curves."""
    acc: dict[tuple, list[tuple[float, float, float]]] = {}
    for r in rows:
        acc.setdefault((r["problem"], r["config"], r["algorithm"], r["env_index"]), []).append((r["t"], r["igd"], r["igdx"]))
    out = []
    for key in sorted(acc):
        vals = np.array(acc[key])
        out.append({"problem": key[0], "config": key[1], "algorithm": key[2], "env_index": key[3],
                    "t": float(vals[0, 0]), "igd_mean": float(vals[:, 1].mean()), "igdx_mean": float(vals[:, 2].mean())})
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    problems: Sequence[str]
    config: str = "C1"
    algorithms: Sequence[str] = ("CAE-AN",)
    runs: int = 20
    base_seed: int = 0
    settings: RunSettings = field(default_factory=RunSettings)
    out_dir: Path | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        get_config(self.config)
        for p in self.problems:
            get_problem(p)
        for a in self.algorithms:
            get_variant(a)

    def tasks(self) -> list[tuple]:
        return [
            (p, self.config, a, r, derive_seed(self.base_seed, p, self.config, a, r), self.settings)
            for p in self.problems for a in self.algorithms for r in range(self.runs)
        ]


def run_file_name(problem: str, config: str, algorithm: str, run_id: int) -> str:
    return f"{problem}_{config}_{algorithm}_run{run_id:03d}.csv"


def _execute(task: tuple, out_dir: str | None) -> RunRecord:
    problem_id, config_name, algorithm, run_id, seed, settings = task
    record = run_single(get_problem(problem_id), get_config(config_name), get_variant(algorithm), seed, settings,
                        run_id=run_id, config_name=config_name)
    if out_dir is not None:
        path = Path(out_dir) / "runs" / run_file_name(problem_id, config_name, algorithm, run_id)
        path.write_text(render_rows(record.rows()))
    logger.info("%s %s %s run %d: MIGD=%.4g MIGDx=%.4g (%.1fs)", problem_id, config_name, algorithm, run_id,
                record.migd, record.migdx, record.wall_time)
    return record


def resolve_out_dir(out: str | os.PathLike | None) -> Path:
    return Path(out or os.environ.get(OUT_ENV_VAR) or "results")


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[RunRecord]:
    """Run every (problem, algorithm, run) task, optionally in worker processes.

    Each worker writes its own per-run CSV; the merged ``results.csv``,
    ``curves.csv`` and ``summary.json`` are written afterwards in a fixed order.
    """
    out_dir = spec.out_dir
    if out_dir is not None:
        (Path(out_dir) / "runs").mkdir(parents=True, exist_ok=True)
    tasks = spec.tasks()
    target = None if out_dir is None else str(out_dir)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_execute, tasks, [target] * len(tasks)))
    else:
        records = [_execute(task, target) for task in tasks]
    if out_dir is not None:
        write_outputs(records, Path(out_dir))
    return records


def write_outputs(records: list[RunRecord], out_dir: Path) -> None:
    records = sorted(records, key=lambda r: (r.problem, r.config, r.algorithm, r.run_id))
    rows = [row for rec in records for row in rec.rows()]
    (out_dir / "results.csv").write_text(render_rows(rows))
    curves = curve_rows(rows)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(curves[0]) if curves else [], lineterminator="\n")
    writer.writeheader()
    writer.writerows(curves)
    (out_dir / "curves.csv").write_text(buf.getvalue())
    summary = summarize(run_level_results(rows))
    summary["runs"] = [
        {"problem": r.problem, "config": r.config, "algorithm": r.algorithm, "run_id": r.run_id, "seed": r.seed,
         "migd": r.migd, "migdx": r.migdx}
        for r in records
    ]
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))


def summarize_dir(out_dir: Path) -> dict:
    rows = parse_rows((Path(out_dir) / "results.csv").read_text())
    summary = summarize(run_level_results(rows))
    summary["table"] = render_table(summary)
    return summary


def sweep_alpha(problem: str, config: str, alphas: Sequence[float], runs: int, base_seed: int,
                settings: RunSettings | None = None, jobs: int = 1) -> list[dict]:
    """Run-level MIGD/MIGDx of the full method for each niche decay factor."""
    settings = settings or RunSettings()
    out = []
    for alpha in alphas:
        spec = ExperimentSpec([problem], config, ["CAE-AN"], runs, base_seed, replace(settings, alpha=alpha))
        for rec in run_experiment(spec, jobs):
            out.append({"alpha": alpha, "run_id": rec.run_id, "migd": rec.migd, "migdx": rec.migdx})
    return out
