"""Dense symmetric linear algebra and scalar root finding.

The eigensolver has two routes: LAPACK (``numpy.linalg.eigh``) for speed and a
cyclic Jacobi sweep written out here, which doubles as an independent check of
the LAPACK route in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

MAX_SWEEPS = 100


class NumericalFailure(RuntimeError):
    """Raised when an iterative kernel does not converge."""


class SingularShiftError(ValueError):
    """Raised when ``A + shift*I`` is not safely positive definite."""


class BracketError(ValueError):
    """Raised when a root bracket has no sign change."""


def sym_matrix(entries) -> np.ndarray:
    """Return a symmetric float copy of ``entries`` (upper triangle mirrored)."""
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


@dataclass(frozen=True)
class EigDecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def order(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def _jacobi_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-15 * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NumericalFailure(f"Jacobi eigensolver did not converge for order {n} matrix")


def sym_eig(a, method: str = "lapack") -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Args:
        a: square symmetric matrix.
        method: ``"lapack"`` or ``"jacobi"``.

    Raises:
        NumericalFailure: non-finite input or no convergence within 100 sweeps.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure(f"non-finite entries in order {a.shape[0]} matrix")
    a = 0.5 * (a + a.T)
    if method == "lapack":
        try:
            w, v = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigh failed for order {a.shape[0]} matrix") from exc
    elif method == "jacobi":
        w, v = _jacobi_eig(a)
        idx = np.argsort(w, kind="stable")
        w, v = w[idx], v[:, idx]
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return EigDecomposition(np.ascontiguousarray(w), np.ascontiguousarray(v))


def solve_shifted(eig: EigDecomposition, shift: float, b, tol: float = 1e-14) -> np.ndarray:
    """Solve ``(A + shift*I) d = b`` using a precomputed decomposition of ``A``."""
    b = np.asarray(b, dtype=float)
    w = eig.eigenvalues + shift
    scale = max(1.0, float(np.max(np.abs(eig.eigenvalues))), abs(shift))
    if w[0] <= tol * scale:
        raise SingularShiftError(
            f"shifted matrix not positive definite: lambda_min + shift = {w[0]:.3e}"
        )
    q = eig.eigenvectors
    return q @ ((q.T @ b) / w)


def bisect_root(
    phi: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-14,
    dphi: Optional[Callable[[float], float]] = None,
    max_iter: int = 500,
) -> float:
    """Root of a monotone function on ``[lo, hi]``.

    Bisection, with Newton steps taken whenever ``dphi`` is supplied and the
    Newton point stays inside the current bracket.
    """
    if not lo < hi:
        raise BracketError(f"need lo < hi, got [{lo}, {hi}]")
    flo, fhi = phi(lo), phi(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: phi = ({flo}, {fhi})")
    increasing = fhi > 0.0
    r = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fr = phi(r)
        if abs(fr) <= tol or (hi - lo) <= tol * (1.0 + abs(r)):
            return r
        if (fr > 0.0) == increasing:
            hi = r
        else:
            lo = r
        nxt = None
        if dphi is not None:
            g = dphi(r)
            if g != 0.0 and math.isfinite(g):
                cand = r - fr / g
                if lo < cand < hi:
                    nxt = cand
        r = nxt if nxt is not None else 0.5 * (lo + hi)
    return r
