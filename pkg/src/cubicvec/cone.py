"""Finitely generated ordering cones.

A cone ``K`` is described by a finite set ``C`` of unit vectors in its dual
cone ``K*``; ``u`` lies in ``K`` iff ``<u, xi> >= 0`` for every ``xi`` in ``C``.
"""

from __future__ import annotations

import itertools
import logging
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-12
DEDUP_TOL = 1e-10


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def min_norm_in_hull(vectors: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum-norm point of the convex hull of the rows of ``vectors``.

    Exact for small row counts: every face of the simplex is tried by solving
    its equality-constrained least-norm system and the best feasible one kept.

    Returns:
        (norm, weights) with weights on the simplex.
    """
    vectors = np.asarray(vectors, dtype=float)
    m = vectors.shape[0]
    gram = vectors @ vectors.T
    best_val, best_w = np.inf, None
    for size in range(1, m + 1):
        for face in itertools.combinations(range(m), size):
            idx = list(face)
            g = gram[np.ix_(idx, idx)]
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = g
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            w_face = sol[:size]
            if np.any(w_face < -1e-12):
                continue
            w = np.zeros(m)
            w[idx] = np.maximum(w_face, 0.0)
            w /= w.sum()
            val = float(np.linalg.norm(w @ vectors))
            if val < best_val - 1e-15:
                best_val, best_w = val, w
    return best_val, best_w


class OrderingCone:
    """Polyhedral ordering cone given by generators of its dual cone.

    Generators are normalized on construction and near-duplicates (within
    ``1e-10`` after normalization) are merged with a warning.
    """

    def __init__(self, generators: Sequence[Sequence[float]]):
        gens = np.atleast_2d(np.asarray(generators, dtype=float))
        if gens.ndim != 2 or gens.shape[0] < 1 or gens.shape[1] < 1:
            raise ValueError("need at least one generator vector")
        norms = np.linalg.norm(gens, axis=1)
        if np.any(norms <= 0.0) or not np.all(np.isfinite(norms)):
            raise ValueError("generators must be finite and nonzero")
        gens = gens / norms[:, None]
        kept: list[np.ndarray] = []
        for g in gens:
            if any(np.max(np.abs(g - k)) <= DEDUP_TOL for k in kept):
                logger.warning("dropping duplicate cone generator %s", g)
                continue
            kept.append(g)
        gens = np.array(kept)
        gens.setflags(write=False)
        self.generators = gens
        self.p = gens.shape[1]
        if len(gens) <= 4:
            dist, _ = min_norm_in_hull(gens)
            if dist <= 1e-10:
                raise ValueError(
                    "generators contain the origin in their convex hull; "
                    "the ordering cone would have empty interior"
                )
        else:
            logger.warning(
                "pointedness not checked for %d generators", len(gens)
            )

    @classmethod
    def orthant(cls, p: int) -> "OrderingCone":
        return cls(np.eye(p))

    @classmethod
    def r2_cone(cls) -> "OrderingCone":
        """Bi-objective cone ``{y >= 0 : y1 <= 3 y2, y2 <= 3 y1}``."""
        return cls([[-1.0, 3.0], [3.0, -1.0]])

    @property
    def n_generators(self) -> int:
        return self.generators.shape[0]

    def __repr__(self) -> str:
        return f"OrderingCone(p={self.p}, generators={self.generators.tolist()})"

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.p,):
            raise ValueError(f"expected vector of length {self.p}, got shape {u.shape}")
        return u

    def scalarize(self, u) -> np.ndarray:
        """All inner products ``<u, xi>``, one per generator."""
        return self.generators @ self._check(u)

    def in_cone(self, u) -> bool:
        return bool(np.all(self.scalarize(u) >= -MEMBERSHIP_TOL))

    def in_interior(self, u) -> bool:
        return bool(np.all(self.scalarize(u) > MEMBERSHIP_TOL))

    def precedes(self, u, v) -> bool:
        """``u <= v`` in the cone order, i.e. ``v - u`` in ``K``."""
        return self.in_cone(self._check(v) - self._check(u))

    def strictly_precedes(self, u, v) -> bool:
        """``u < v``: ``v - u`` in the interior of ``K``."""
        return self.in_interior(self._check(v) - self._check(u))

    def max_scalarization(self, u) -> tuple[float, int]:
        """Largest ``<u, xi>`` over generators and its (lowest) index."""
        vals = self.scalarize(u)
        i = int(np.argmax(vals))
        return float(vals[i]), i

    def min_generator_norm(self, rows) -> tuple[float, int]:
        """Smallest ``||xi^T J||`` over generators for a ``p x n`` matrix ``J``."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != self.p:
            raise ValueError(f"expected a {self.p} x n matrix, got shape {rows.shape}")
        norms = np.linalg.norm(self.generators @ rows, axis=1)
        i = int(np.argmin(norms))
        return float(norms[i]), i

    def combine(self, weights) -> np.ndarray:
        """``eta = sum_i weights_i xi^i``."""
        return np.asarray(weights, dtype=float) @ self.generators


def cone_from_spec(spec, p: int) -> OrderingCone:
    """Build a cone from a preset name or a list of generators.

    Presets: ``"orthant"``, ``"r2-cone"``, and ``"auto"`` (r2-cone for two
    objectives, orthant otherwise).
    """
    if isinstance(spec, OrderingCone):
        return spec
    if isinstance(spec, str):
        if spec == "orthant":
            return OrderingCone.orthant(p)
        if spec == "r2-cone":
            if p != 2:
                raise ValueError("r2-cone requires exactly two objectives")
            return OrderingCone.r2_cone()
        if spec == "auto":
            return OrderingCone.r2_cone() if p == 2 else OrderingCone.orthant(p)
        raise ValueError(f"unknown cone preset {spec!r}")
    cone = OrderingCone(spec)
    if cone.p != p:
        raise ValueError(f"cone dimension {cone.p} does not match {p} objectives")
    return cone
