"""IGD / IGDx, their time averages and exact 2-D/3-D hypervolume."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ContractError


def _as_sets(reference, approx) -> tuple[np.ndarray, np.ndarray]:
    R = np.atleast_2d(np.asarray(reference, dtype=float))
    A = np.atleast_2d(np.asarray(approx, dtype=float))
    if R.size == 0 or A.size == 0:
        raise ContractError("IGD needs non-empty reference and approximation sets")
    if R.shape[1] != A.shape[1]:
        raise ContractError(f"dimension mismatch: {R.shape[1]} vs {A.shape[1]}")
    return R, A


def nearest_distances(reference, approx) -> np.ndarray:
    """Distance from each reference point to its closest approximation point."""
    R, A = _as_sets(reference, approx)
    out = np.empty(R.shape[0])
    # chunk rows so the pairwise block stays small for large reference sets
    step = max(1, 2_000_000 // max(1, A.shape[0] * R.shape[1]))
    for start in range(0, R.shape[0], step):
        diff = R[start : start + step, None, :] - A[None, :, :]
        out[start : start + step] = np.sqrt(np.min(np.einsum("ijk,ijk->ij", diff, diff), axis=1))
    return out


def igd(reference, approx) -> float:
    """Mean distance from the true front samples to the nearest obtained point."""
    return float(np.mean(nearest_distances(reference, approx)))


def igdx(reference_pos, approx_pos) -> float:
    """IGD computed in decision space."""
    return igd(reference_pos, approx_pos)


@dataclass
class MetricSeries:
    """Per-environment IGD/IGDx records of one run."""

    t: list[float] = field(default_factory=list)
    igd: list[float] = field(default_factory=list)
    igdx: list[float] = field(default_factory=list)

    def append(self, t: float, igd_value: float, igdx_value: float) -> None:
        self.t.append(float(t))
        self.igd.append(float(igd_value))
        self.igdx.append(float(igdx_value))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def migd(self) -> float:
        return migd(self)

    @property
    def migdx(self) -> float:
        return migdx(self)


def _mean(values: list[float]) -> float:
    if not values:
        raise ContractError("metric series is empty")
    return float(sum(values) / len(values))


def migd(series: MetricSeries) -> float:
    return _mean(series.igd)


def migdx(series: MetricSeries) -> float:
    return _mean(series.igdx)


def _nondominated_2d(P: np.ndarray) -> np.ndarray:
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    keep = []
    best = np.inf
    for p in P:
        if p[1] < best:
            keep.append(p)
            best = p[1]
    return np.array(keep).reshape(-1, 2)


def _hv2d(P: np.ndarray, ref: np.ndarray) -> float:
    if len(P) == 0:
        return 0.0
    front = _nondominated_2d(P)
    volume = 0.0
    prev_y = ref[1]
    for x, y in front:
        volume += (ref[0] - x) * (prev_y - y)
        prev_y = y
    return float(volume)


def hypervolume(front, ref_point) -> float:
    """Exact volume dominated by ``front`` and bounded by ``ref_point``.

    Points that do not strictly dominate the reference point are discarded.
    Two objectives use a sweep, three objectives slice along the last
    objective and sum 2-D areas.
    """
    ref = np.asarray(ref_point, dtype=float)
    P = np.asarray(front, dtype=float).reshape(-1, ref.size)
    m = ref.size
    if m not in (2, 3):
        raise NotImplementedError(f"hypervolume supports 2 or 3 objectives, got {m}")
    P = P[np.all(P < ref, axis=1)]
    if len(P) == 0:
        return 0.0
    if m == 2:
        return _hv2d(P, ref)
    P = P[np.argsort(P[:, 2], kind="stable")]
    volume = 0.0
    for i in range(len(P)):
        z_next = P[i + 1, 2] if i + 1 < len(P) else ref[2]
        depth = z_next - P[i, 2]
        if depth > 0:
            volume += _hv2d(P[: i + 1, :2], ref[:2]) * depth
    return float(volume)
