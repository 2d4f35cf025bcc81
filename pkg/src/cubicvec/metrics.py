"""Front-quality metrics and Dolan-More performance profiles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .cone import OrderingCone

logger = logging.getLogger(__name__)

DEDUP_TOL = 1e-10
MEMBER_TOL = 1e-8


def _dedup(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    for u in points:
        if not any(np.max(np.abs(u - v)) <= tol for v in kept):
            kept.append(u)
    return np.array(kept).reshape(-1, points.shape[1])


@dataclass
class FrontApproximation:
    """Objective vectors produced by one solver on one problem.

    Non-finite rows are rejected and near-duplicates (within ``1e-10``) merged.
    """

    points: np.ndarray
    solver_id: str = ""
    problem_id: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("front points must be finite")
        self.points = _dedup(pts) if pts.size else pts

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class ProfileCurve:
    tau: np.ndarray
    rho: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)


def nondominated_filter(points, K: OrderingCone) -> np.ndarray:
    """Points not strictly dominated (``v - u`` in ``-int K``) by any other.

    Input order is preserved.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("need a nonempty list of objective vectors")
    # S[a, b, i] = <pts[b] - pts[a], xi_i>; b strictly dominates a iff all < 0.
    proj = pts @ K.generators.T
    diff = proj[None, :, :] - proj[:, None, :]
    dominated = np.any(np.all(diff < -1e-12, axis=2), axis=1)
    return pts[~dominated]


def _hv2(points: np.ndarray, ref: np.ndarray) -> float:
    pts = points[np.lexsort((points[:, 1], points[:, 0]))]
    area, best_y = 0.0, ref[1]
    for x, y in pts:
        if y < best_y:
            area += (ref[0] - x) * (best_y - y)
            best_y = y
    return area


def hypervolume(points, ref) -> float:
    """Lebesgue measure of the union of boxes ``[u, ref]`` for 2 or 3 objectives.

    Points that do not lie componentwise below ``ref`` are dropped with a
    warning. 2-D uses a sort-and-sweep; 3-D slices along the last objective.
    """
    ref = np.asarray(ref, dtype=float)
    pts = np.asarray(points, dtype=float).reshape(-1, ref.shape[0])
    p = ref.shape[0]
    if p not in (2, 3):
        raise ValueError(f"hypervolume supports 2 or 3 objectives, got {p}")
    inside = np.all(pts <= ref, axis=1)
    if not np.all(inside):
        logger.warning("dropping %d points outside the reference box", int(np.sum(~inside)))
        pts = pts[inside]
    if pts.shape[0] == 0:
        return 0.0
    if p == 2:
        return _hv2(pts, ref)
    pts = pts[np.argsort(pts[:, 2], kind="stable")]
    vol = 0.0
    for k in range(pts.shape[0]):
        z_hi = pts[k + 1, 2] if k + 1 < pts.shape[0] else ref[2]
        depth = z_hi - pts[k, 2]
        if depth > 0.0:
            vol += depth * _hv2(pts[: k + 1, :2], ref[:2])
    return vol


def reference_point(fronts: Sequence[FrontApproximation], margin: float = 0.1) -> np.ndarray:
    """Componentwise max over all fronts plus ``margin`` times the range."""
    stacked = np.vstack([f.points for f in fronts if len(f)])
    hi, lo = stacked.max(axis=0), stacked.min(axis=0)
    span = np.where(hi > lo, hi - lo, np.maximum(np.abs(hi), 1.0))
    return hi + margin * span


def purity(front: FrontApproximation, all_fronts: Sequence[FrontApproximation], K: OrderingCone) -> float:
    """Share of ``front`` that survives in the nondominated filter of the union."""
    if len(front) == 0:
        return 0.0
    union = np.vstack([f.points for f in all_fronts if len(f)])
    reference = nondominated_filter(union, K)
    hits = sum(
        1 for u in front.points if np.any(np.max(np.abs(reference - u), axis=1) <= MEMBER_TOL)
    )
    return hits / len(front)


def spreads(front: FrontApproximation) -> tuple[float, float]:
    """``(Delta_p, Gamma_p)`` with zero extreme gaps.

    Returns ``(nan, nan)`` for fewer than two points.
    """
    pts = front.points
    if pts.shape[0] < 2:
        return math.nan, math.nan
    delta, gamma = 0.0, 0.0
    for j in range(pts.shape[1]):
        gaps = np.diff(np.sort(pts[:, j]))
        gamma = max(gamma, float(gaps.max()))
        mean = float(gaps.mean())
        if mean > 0.0:
            delta = max(delta, float(np.sum(np.abs(gaps - mean))) / (gaps.size * mean))
    return delta, gamma


def performance_profile(
    costs: Mapping[str, Sequence[float]],
    tau: Optional[Sequence[float]] = None,
    problems: Optional[Sequence[str]] = None,
) -> ProfileCurve:
    """Dolan-More curves ``rho_s(tau)`` from a solver-by-problem cost table.

    Failed runs are NaN or +inf. Problems failed by every solver are excluded
    with a warning.
    """
    solvers = list(costs)
    if not solvers:
        raise ValueError("empty cost table")
    table = np.array([np.asarray(costs[s], dtype=float) for s in solvers])
    table = np.where(np.isfinite(table), table, np.inf)
    if np.any(table <= 0.0):
        raise ValueError("costs must be positive")
    best = table.min(axis=0)
    keep = np.isfinite(best)
    excluded = [problems[i] if problems else i for i in np.flatnonzero(~keep)]
    if excluded:
        logger.warning("excluding problems failed by every solver: %s", excluded)
    ratios = table[:, keep] / best[keep]
    if tau is None:
        finite = ratios[np.isfinite(ratios)]
        tau = np.unique(np.concatenate([[1.0], finite]))
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 1.0) or np.any(np.diff(tau) < 0):
        raise ValueError("tau grid must be ascending and >= 1")
    n_prob = ratios.shape[1]
    rho = {}
    for i, s in enumerate(solvers):
        if n_prob == 0:
            rho[s] = np.zeros_like(tau)
        else:
            rho[s] = np.array([np.count_nonzero(ratios[i] <= t) / n_prob for t in tau])
    return ProfileCurve(tau, rho, excluded)
