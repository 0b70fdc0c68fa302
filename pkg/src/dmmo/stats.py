"""Wilcoxon rank-sum (Mann-Whitney) test and Table-style comparison summaries."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from statistics import median
from typing import Iterable, Mapping

import numpy as np

from .core import ContractError

EXACT_BELOW = 8


@dataclass(frozen=True)
class RankSumResult:
    p_value: float
    direction: int  # sign of median(a) - median(b)
    statistic: float  # U for the first sample
    method: str


def rankdata(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their ranks."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    sorted_v = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_two_sided(doubled: np.ndarray, n: int, observed: int) -> float:
    """P(|S - E[S]| >= |s_obs - E[S]|) for S the sum of ``n`` doubled ranks drawn without replacement."""
    total_sum = int(doubled.sum())
    N = len(doubled)
    # counts[k, s]: number of k-subsets with doubled-rank sum s
    counts = np.zeros((n + 1, total_sum + 1), dtype=object)
    counts[0, 0] = 1
    for r in doubled.astype(int):
        counts[1:, r:] = counts[1:, r:] + counts[:-1, : total_sum + 1 - r]
    dist = counts[n]
    # E[S] = n * total / N; compare |N*s - n*total| in integers
    s = np.arange(total_sum + 1, dtype=object)
    dev = np.abs(N * s - n * total_sum)
    obs_dev = abs(N * observed - n * total_sum)
    hits = sum(dist[dev >= obs_dev])
    return float(hits / math.comb(N, n))


def wilcoxon_rank_sum(sample_a: Iterable[float], sample_b: Iterable[float]) -> RankSumResult:
    """Two-sided rank-sum test.

    Exact enumeration of the rank-sum distribution (ties handled through
    mid-ranks) when the smaller sample has fewer than 8 values; otherwise the
    normal approximation with tie and continuity correction.
    """
    a = [float(x) for x in sample_a]
    b = [float(x) for x in sample_b]
    n, m = len(a), len(b)
    if n < 2 or m < 2:
        raise ContractError("each sample needs at least two values")
    diff = median(a) - median(b)
    direction = int(np.sign(diff))
    ranks = rankdata(a + b)
    rank_sum_a = float(ranks[:n].sum())
    U = rank_sum_a - n * (n + 1) / 2.0
    if len(set(a + b)) == 1:
        return RankSumResult(1.0, 0, U, "degenerate")
    if min(n, m) < EXACT_BELOW:
        doubled = np.rint(2 * ranks).astype(int)
        p = _exact_two_sided(doubled, n, int(doubled[:n].sum()))
        return RankSumResult(min(p, 1.0), direction, U, "exact")
    N = n + m
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (N * (N - 1))
    sigma = math.sqrt(n * m / 12.0 * ((N + 1) - tie_term))
    if sigma == 0:
        return RankSumResult(1.0, 0, U, "degenerate")
    z = max(abs(U - n * m / 2.0) - 0.5, 0.0) / sigma
    p = math.erfc(z / math.sqrt(2.0))
    return RankSumResult(min(p, 1.0), direction, U, "normal")


def significance_mark(reference: list[float], other: list[float], alpha: float = 0.05) -> tuple[str, float]:
    """Mark from the reference algorithm's point of view for a minimised metric.

    ``+``: reference significantly worse; ``-``: significantly better; ``=``: no significant difference.
    """
    if len(reference) < 2 or len(other) < 2:
        return "=", 1.0
    res = wilcoxon_rank_sum(reference, other)
    if res.p_value >= alpha or res.direction == 0:
        return "=", res.p_value
    return ("+" if res.direction > 0 else "-"), res.p_value


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return float(arr.mean()), std


def summarize(records: Iterable[Mapping], reference: str | None = None, alpha: float = 0.05) -> dict:
    """Group run-level results by (problem, config, algorithm) into a comparison table.

    Each record needs ``problem``, ``config``, ``algorithm``, ``migd`` and
    ``migdx``. Every non-reference algorithm is compared with the reference
    (``CAE-AN`` when present, else the first algorithm seen).
    """
    groups: dict[tuple[str, str], dict[str, dict[str, list[float]]]] = defaultdict(dict)
    algorithms: list[str] = []
    for rec in records:
        cell = groups[(rec["problem"], rec["config"])].setdefault(rec["algorithm"], {"migd": [], "migdx": []})
        cell["migd"].append(float(rec["migd"]))
        cell["migdx"].append(float(rec["migdx"]))
        if rec["algorithm"] not in algorithms:
            algorithms.append(rec["algorithm"])
    if reference is None:
        reference = "CAE-AN" if "CAE-AN" in algorithms else (algorithms[0] if algorithms else None)
    rows = []
    tally: dict[str, dict[str, dict[str, int]]] = {}
    for (problem, config), cells in groups.items():
        ref_cell = cells.get(reference)
        for algorithm in algorithms:
            if algorithm not in cells:
                continue
            cell = cells[algorithm]
            row = {"problem": problem, "config": config, "algorithm": algorithm, "runs": len(cell["migd"])}
            for metric in ("migd", "migdx"):
                mean, std = _mean_std(cell[metric])
                row[f"{metric}_mean"] = mean
                row[f"{metric}_std"] = std
                if ref_cell is not None and algorithm != reference and len(algorithms) > 1:
                    mark, p = significance_mark(ref_cell[metric], cell[metric], alpha)
                    row[f"{metric}_mark"] = mark
                    row[f"{metric}_p"] = p
                    counts = tally.setdefault(algorithm, {}).setdefault(metric, {"+": 0, "-": 0, "=": 0})
                    counts[mark] += 1
            rows.append(row)
    return {"reference": reference, "alpha": alpha, "rows": rows, "tally": tally}


def render_table(summary: dict) -> str:
    lines = [f"{'problem':<8} {'cfg':<4} {'algorithm':<18} {'MIGD':>24} {'MIGDx':>24}"]
    for r in summary["rows"]:
        cells = []
        for metric in ("migd", "migdx"):
            text = f"{r[f'{metric}_mean']:.4e}±{r[f'{metric}_std']:.2e}"
            cells.append(text + (f" {r[f'{metric}_mark']}" if f"{metric}_mark" in r else "  "))
        lines.append(f"{r['problem']:<8} {r['config']:<4} {r['algorithm']:<18} {cells[0]:>24} {cells[1]:>24}")
    for algorithm, by_metric in summary.get("tally", {}).items():
        parts = [f"{m.upper()} +/-/= {c['+']}/{c['-']}/{c['=']}" for m, c in by_metric.items()]
        lines.append(f"{summary['reference']} vs {algorithm}: " + ", ".join(parts))
    return "\n".join(lines)
