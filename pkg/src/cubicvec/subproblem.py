"""Cubic-regularized Newton subproblem for a finitely generated cone.

For an evaluation point and regularization ``M`` the subproblem is

    min_d  q(d) = max_i { <J d, xi_i> + 1/2 <d^T H d, xi_i> } + M/6 |d|^3

with one smooth piece ``psi_i`` per cone generator. The solver keeps two
numbers apart:

* a primal value: the best ``q`` found over every candidate direction
  generated (inner minimizers along dual ascent, local minimizers of each
  single-generator model, active-set Newton refinements), and
* a dual value: ``max_lambda D(lambda)`` where ``D`` is the global minimum of
  the ``lambda``-weighted model. ``D`` is concave and never exceeds the
  primal optimum, so ``primal - dual`` certifies the returned direction.

The weighted inner problems are scalar cubic models solved exactly through the
eigendecomposition of the weighted Hessian and the secular equation for the
step length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cone import OrderingCone, min_norm_in_hull, project_simplex
from .numkernel import EigDecomposition, bisect_root, sym_eig

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ACTIVE_TOL = 1e-9


@dataclass(frozen=True)
class ScalarCubicModel:
    """``m(d) = g^T d + 1/2 d^T H d + M/6 |d|^3``."""

    g: np.ndarray
    H: np.ndarray
    M: float

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"regularization M must be positive, got {self.M}")
        n = self.g.shape[0]
        if self.H.shape != (n, n):
            raise ValueError(f"H has shape {self.H.shape}, expected {(n, n)}")

    def value(self, d) -> float:
        d = np.asarray(d, dtype=float)
        r = float(np.linalg.norm(d))
        return float(self.g @ d + 0.5 * d @ self.H @ d + self.M / 6.0 * r**3)

    def kkt_residual(self, d) -> float:
        """``|(H + M/2 |d| I) d + g|``."""
        d = np.asarray(d, dtype=float)
        r = float(np.linalg.norm(d))
        return float(np.linalg.norm(self.H @ d + 0.5 * self.M * r * d + self.g))


@dataclass
class SubproblemSolution:
    d: np.ndarray
    r: float
    weights: np.ndarray
    primal: float
    dual: float
    gap: float
    active_set: tuple
    certified: bool
    inner_solves: int = 0
    eta: np.ndarray = field(default=None, repr=False)


def _hardcase_sign(v: np.ndarray, g: np.ndarray) -> float:
    vg = float(v @ g)
    if abs(vg) > 1e-14 * (1.0 + float(np.linalg.norm(g))):
        return -1.0 if vg > 0 else 1.0
    nz = np.flatnonzero(np.abs(v) > 1e-14)
    return 1.0 if v[nz[0]] > 0 else -1.0


def solve_scalar_cubic(model: ScalarCubicModel, eig: EigDecomposition | None = None):
    """Global minimizer of a scalar cubic model.

    Returns ``(d, r)`` with ``r = |d|``. The minimizer satisfies
    ``(H + M r/2 I) d = -g`` with ``lambda_min(H) + M r/2 >= 0``; the step
    length is the root of ``|d(r)| - r`` on the interval where the shifted
    Hessian is positive definite.

    When ``g`` has no component along the lowest eigenspace and the partial
    solution at the eigenvalue barrier is too short (the hard case), the lowest
    eigenvector is added to reach the barrier radius. Its sign makes
    ``v^T g <= 0`` (ties: positive leading component).
    """
    g, M = model.g, model.M
    if eig is None:
        eig = sym_eig(model.H)
    mu, q = eig.eigenvalues, eig.eigenvectors
    n = mu.shape[0]
    sigma = -(q.T @ g)
    gnorm = float(np.linalg.norm(g))
    hnorm = float(np.max(np.abs(mu)))
    if gnorm == 0.0 and mu[0] >= 0.0:
        return np.zeros(n), 0.0

    r_lb = max(0.0, -2.0 * mu[0] / M)
    low = mu <= mu[0] + 1e-12 * max(1.0, hnorm)
    hc_tol = 1e-12 * max(1.0, gnorm)
    if mu[0] < 0.0 and np.all(np.abs(sigma[low]) <= hc_tol):
        den = mu[~low] + 0.5 * M * r_lb
        y = np.zeros(n)
        y[~low] = sigma[~low] / den
        rest = float(np.linalg.norm(y))
        if rest <= r_lb:
            alpha = math.sqrt(max(r_lb**2 - rest**2, 0.0))
            d = q @ y
            v = q[:, 0]
            d = d + _hardcase_sign(v, g) * alpha * v
            return d, float(np.linalg.norm(d))

    s2 = sigma**2

    nz = s2 > 0.0

    # overflow near a pole only means phi is +inf there, which is the right sign
    def phi(r):
        den = mu + 0.5 * M * r
        if np.any(den <= 0.0):
            return math.inf
        with np.errstate(over="ignore", divide="ignore"):
            return math.sqrt(float(np.sum(s2[nz] / den[nz] ** 2))) - r

    def dphi(r):
        den = mu + 0.5 * M * r
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            nrm = math.sqrt(float(np.sum(s2[nz] / den[nz] ** 2)))
            if nrm == 0.0 or not math.isfinite(nrm):
                return -1.0
            return -0.5 * M * float(np.sum(s2[nz] / den[nz] ** 3)) / nrm - 1.0

    # the bound is tight for n = 1; widen until the sign change is visible
    r_hi = (hnorm + math.sqrt(hnorm**2 + 2.0 * M * gnorm)) / M * (1.0 + 1e-12) + 1e-300
    while phi(r_hi) > 0.0:
        r_hi *= 2.0
    r = bisect_root(phi, r_lb, r_hi, tol=1e-15, dphi=dphi)
    den = mu + 0.5 * M * r
    y = sigma / den
    # near the hard case phi is very steep at the root; rebuilding the
    # low-eigenspace part from the radius keeps |d| = r to rounding
    steep = den <= 1e-6 * max(1.0, hnorm, 0.5 * M * r)
    if np.any(steep) and not np.all(steep):
        rest = float(np.linalg.norm(y[~steep]))
        low_norm = float(np.linalg.norm(y[steep]))
        if low_norm > 0.0 and rest < r:
            y[steep] *= math.sqrt(r * r - rest * rest) / low_norm
    d = q @ y
    return d, float(np.linalg.norm(d))


def scalar_cubic_stationary_points(model: ScalarCubicModel, eig: EigDecomposition | None = None,
                                   samples: int = 64) -> list[np.ndarray]:
    """Stationary points of a scalar cubic model with ``r > 0`` away from the poles.

    Roots of ``|d(r)|^2 - r^2`` are bracketed on a grid within every interval
    between consecutive eigenvalue poles and refined by bisection.
    """
    g, M = model.g, model.M
    if eig is None:
        eig = sym_eig(model.H)
    mu, q = eig.eigenvalues, eig.eigenvectors
    sigma = -(q.T @ g)
    s2 = sigma**2
    hnorm = float(np.max(np.abs(mu)))
    gnorm = float(np.linalg.norm(g))
    r_hi = (hnorm + math.sqrt(hnorm**2 + 2.0 * M * gnorm)) / M + 1.0
    poles = sorted({float(-2.0 * m / M) for m in mu if m < 0.0})
    edges = [0.0] + poles + [r_hi]

    def F(r):
        den = mu + 0.5 * M * r
        return float(np.sum(s2 / den**2)) - r * r

    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 1e-14 * (1.0 + b):
            continue
        w = b - a
        # cluster samples toward both poles
        t = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, samples))
        grid = a + w * (1e-9 + (1 - 2e-9) * t)
        vals = [F(r) for r in grid]
        for i in range(len(grid) - 1):
            if vals[i] == 0.0:
                roots = [grid[i]]
            elif vals[i] * vals[i + 1] < 0.0:
                roots = [bisect_root(F, grid[i], grid[i + 1], tol=1e-15)]
            else:
                continue
            for r in roots:
                den = mu + 0.5 * M * r
                if np.all(np.abs(den) > 0.0):
                    out.append(q @ (sigma / den))
    return out


class _Pieces:
    """Per-generator linear and quadratic terms at one evaluation point."""

    def __init__(self, J: np.ndarray, H: np.ndarray, K: OrderingCone, M: float):
        G = K.generators
        self.M = float(M)
        self.gs = G @ J
        self.Hs = np.einsum("ip,pjk->ijk", G, H)
        self.n_gen, self.n = self.gs.shape

    def psi(self, d: np.ndarray) -> np.ndarray:
        """Smooth pieces including the shared cubic term."""
        r = float(np.linalg.norm(d))
        quad = np.einsum("j,ijk,k->i", d, self.Hs, d)
        return self.gs @ d + 0.5 * quad + self.M / 6.0 * r**3

    def q(self, d: np.ndarray) -> float:
        return float(np.max(self.psi(d)))

    def weighted(self, lam: np.ndarray) -> ScalarCubicModel:
        H = np.tensordot(lam, self.Hs, axes=1)
        return ScalarCubicModel(lam @ self.gs, 0.5 * (H + H.T), self.M)


def q_value(point, K: OrderingCone, M: float, d) -> float:
    """Subproblem objective ``q_M(x, d)``."""
    if not M > 0:
        raise ValueError(f"regularization M must be positive, got {M}")
    return _Pieces(point.J, point.H, K, M).q(np.asarray(d, dtype=float))


class _Search:
    """Book-keeping for dual ascent with primal-best tracking."""

    def __init__(self, pieces: _Pieces):
        self.pieces = pieces
        self.best_d = np.zeros(pieces.n)
        self.best_primal = 0.0
        self.best_primal_weights = None
        self.best_dual = -math.inf
        self.best_dual_weights = None
        self.inner = 0

    def offer(self, d: np.ndarray, weights=None) -> float:
        val = self.pieces.q(d)
        if val < self.best_primal:
            self.best_primal, self.best_d = val, d
            self.best_primal_weights = weights
        return val

    def dual(self, lam: np.ndarray):
        """``D(lam)`` and a supergradient, offering the inner minimizer(s)."""
        model = self.pieces.weighted(lam)
        eig = sym_eig(model.H)
        d, _ = solve_scalar_cubic(model, eig)
        self.inner += 1
        val = model.value(d)
        self.offer(d, lam)
        # in the hard case the mirrored minimizer is equally optimal
        if eig.eigenvalues[0] < 0 and abs(float(eig.eigenvectors[:, 0] @ model.g)) <= 1e-12 * (
            1 + float(np.linalg.norm(model.g))
        ):
            v = eig.eigenvectors[:, 0]
            self.offer(d - 2 * float(v @ d) * v, lam)
        if val > self.best_dual:
            self.best_dual, self.best_dual_weights = val, lam.copy()
        return val, self.pieces.psi(d)

    def gap(self) -> float:
        return self.best_primal - self.best_dual


def _gap_tol(primal: float, gap_tol: float | None) -> float:
    return (1e-8 if gap_tol is None else gap_tol) * (1.0 + abs(primal))


def _golden(search: _Search, gap_tol, max_iter: int) -> None:
    def D(t):
        return search.dual(np.array([1.0 - t, t]))[0]

    for t in (0.0, 1.0):
        D(t)
        if search.gap() <= _gap_tol(search.best_primal, gap_tol):
            return
    a, b = 0.0, 1.0
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = D(c), D(e)
    for _ in range(max_iter):
        if search.gap() <= _gap_tol(search.best_primal, gap_tol) or b - a < 1e-15:
            return
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = D(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = D(e)


def _projected_ascent(search: _Search, gap_tol, max_iter: int) -> None:
    m = search.pieces.n_gen
    for i in range(m):
        search.dual(np.eye(m)[i])
        if search.gap() <= _gap_tol(search.best_primal, gap_tol):
            return
    lam = np.full(m, 1.0 / m)
    val, s = search.dual(lam)
    c = float(np.max(np.abs(s))) or 1.0
    step = 1.0 / c
    for t in range(1, max_iter + 1):
        if search.gap() <= _gap_tol(search.best_primal, gap_tol):
            return
        # backtracking on the concave dual; falls back to 1/(c sqrt(t)) steps
        trial_step = 2.0 * step
        accepted = False
        for _ in range(30):
            cand = project_simplex(lam + trial_step * s)
            move = cand - lam
            if float(np.max(np.abs(move))) < 1e-15:
                break
            cval, cs = search.dual(cand)
            if cval >= val + float(s @ move) - float(move @ move) / (2.0 * trial_step):
                lam, val, s, step = cand, cval, cs, trial_step
                accepted = True
                break
            trial_step *= 0.5
        if not accepted:
            cand = project_simplex(lam + s / (c * math.sqrt(t)))
            if np.array_equal(cand, lam):
                return
            lam = cand
            val, s = search.dual(lam)


def _active_set_newton(pieces: _Pieces, d0: np.ndarray, active: list[int], iters: int = 40):
    """Newton on the KKT system of ``min max_{i in A} psi_i`` with equal active pieces.

    Returns ``(d, weights_on_active)`` or ``None`` when it fails.
    """
    n, a, M = pieces.n, len(active), pieces.M
    gs, Hs = pieces.gs[active], pieces.Hs[active]
    d = d0.astype(float).copy()

    def grads(d):
        r = float(np.linalg.norm(d))
        return gs + np.einsum("ijk,k->ij", Hs, d) + 0.5 * M * r * d

    gr = grads(d)
    if a == 1:
        lam = np.ones(1)
    else:
        A = np.vstack([gr.T, np.ones(a)])
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        lam, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    psi = pieces.psi(d)[active]
    t = float(np.max(psi))
    for _ in range(iters):
        r = float(np.linalg.norm(d))
        gr = grads(d)
        psi = pieces.psi(d)[active]
        res = np.concatenate([lam @ gr, psi - t, [lam.sum() - 1.0]])
        if float(np.max(np.abs(res))) <= 1e-14 * (1.0 + float(np.max(np.abs(gs)))):
            break
        if r > 1e-300:
            curv = 0.5 * M * (r * np.eye(n) + np.outer(d, d) / r)
        else:
            curv = np.zeros((n, n))
        hess = np.tensordot(lam, Hs, axes=1) + curv
        jac = np.zeros((n + a + 1, n + a + 1))
        jac[:n, :n] = hess
        jac[:n, n:n + a] = gr.T
        jac[n:n + a, :n] = gr
        jac[n:n + a, n + a] = -1.0
        jac[n + a, n:n + a] = 1.0
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            return None
        d = d + step[:n]
        lam = lam + step[n:n + a]
        t = t + step[n + a]
        if not np.all(np.isfinite(d)):
            return None
    if np.any(lam < -1e-10):
        return None
    return d, np.maximum(lam, 0.0)


def _refine(search: _Search, starts: list[np.ndarray]) -> None:
    pieces = search.pieces
    m = pieces.n_gen
    for d0 in starts:
        psi = pieces.psi(d0)
        order = list(np.argsort(-psi, kind="stable"))
        for size in range(1, min(m, pieces.n + 1) + 1):
            active = sorted(int(i) for i in order[:size])
            out = _active_set_newton(pieces, d0, active)
            if out is None:
                continue
            d, lam_a = out
            w = np.zeros(m)
            w[active] = lam_a
            search.offer(d, w / w.sum() if w.sum() > 0 else None)


def _weights_at(pieces: _Pieces, d: np.ndarray) -> np.ndarray | None:
    """KKT weights on the active pieces at ``d`` (least squares), if consistent."""
    psi = pieces.psi(d)
    top = float(np.max(psi))
    active = np.flatnonzero(psi >= top - ACTIVE_TOL * (1.0 + abs(top)))
    r = float(np.linalg.norm(d))
    gr = pieces.gs[active] + np.einsum("ijk,k->ij", pieces.Hs[active], d) + 0.5 * pieces.M * r * d
    a = len(active)
    if a == 1:
        w_a = np.ones(1)
    else:
        A = np.vstack([gr.T, np.ones(a)])
        rhs = np.zeros(A.shape[0])
        rhs[-1] = 1.0
        w_a, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        w_a = np.maximum(w_a, 0.0)
        if w_a.sum() <= 0:
            return None
        w_a /= w_a.sum()
    w = np.zeros(pieces.n_gen)
    w[active] = w_a
    return w


def _best_weights(pieces: _Pieces, d: np.ndarray, candidates) -> np.ndarray:
    """Candidate simplex weights with the smallest stationarity residual at ``d``."""
    r = float(np.linalg.norm(d))
    best, best_res = None, math.inf
    for w in candidates:
        if w is None:
            continue
        w = np.asarray(w, dtype=float)
        model = pieces.weighted(w)
        res = float(np.linalg.norm(model.H @ d + 0.5 * pieces.M * r * d + model.g))
        if res < best_res:
            best, best_res = w, res
    if best is None:
        best = np.full(pieces.n_gen, 1.0 / pieces.n_gen)
    return best


def solve_direction(point, K: OrderingCone, M: float, gap_tol: float | None = None,
                    max_iter: int = 500) -> SubproblemSolution:
    """Cubic-regularized Newton direction at ``point``.

    Dual ascent over the generator simplex (golden section for two generators,
    projected supergradient ascent with backtracking otherwise) produces
    inner minimizers; every one is scored on the true objective. If the gap is
    not closed, local minimizers of each single-generator model and
    active-set Newton refinements of the best candidates are added.

    The reported ``primal`` is ``q`` at the returned direction; ``certified``
    is true when ``primal - dual <= gap_tol * (1 + |primal|)``.
    """
    if not M > 0:
        raise ValueError(f"regularization M must be positive, got {M}")
    pieces = _Pieces(point.J, point.H, K, M)
    search = _Search(pieces)
    m = pieces.n_gen
    if m == 1:
        search.dual(np.ones(1))
    elif m == 2:
        _golden(search, gap_tol, max_iter)
    else:
        _projected_ascent(search, gap_tol, max_iter)

    if search.gap() > _gap_tol(search.best_primal, gap_tol):
        starts = [search.best_d]
        for i in range(m):
            model = ScalarCubicModel(pieces.gs[i], pieces.Hs[i], pieces.M)
            for d in scalar_cubic_stationary_points(model):
                search.offer(d)
                starts.append(d)
        starts.sort(key=pieces.q)
        uniq = []
        for d in starts:
            if all(np.linalg.norm(d - u) > 1e-8 * (1 + np.linalg.norm(u)) for u in uniq):
                uniq.append(d)
        _refine(search, uniq[:4])
    # final polish of the best point
    _refine(search, [search.best_d])
    # at a KKT point the multipliers attain the dual optimum in the convex case
    if search.gap() > _gap_tol(search.best_primal, gap_tol):
        for w in (_weights_at(pieces, search.best_d), search.best_primal_weights):
            if w is not None:
                search.dual(np.asarray(w, dtype=float))

    d = search.best_d
    primal = search.best_primal
    weights = _best_weights(
        pieces, d, [_weights_at(pieces, d), search.best_dual_weights, search.best_primal_weights]
    )
    dual = min(search.best_dual, primal)
    gap = primal - dual
    psi = pieces.psi(d)
    top = float(np.max(psi)) if d.any() else 0.0
    active = tuple(int(i) for i in np.flatnonzero(psi >= top - ACTIVE_TOL * (1.0 + abs(top))))
    return SubproblemSolution(
        d=d,
        r=float(np.linalg.norm(d)),
        weights=weights,
        primal=primal,
        dual=dual,
        gap=gap,
        active_set=active,
        certified=gap <= _gap_tol(primal, gap_tol),
        inner_solves=search.inner,
        eta=K.combine(weights),
    )


def h_value(point, K: OrderingCone, M: float, sol: SubproblemSolution) -> float:
    """``h_M(x) = max_xi <f(x), xi> + beta_M(x)``."""
    return K.max_scalarization(point.f)[0] + sol.primal


def min_lambda_per_generator(point, K: OrderingCone) -> np.ndarray:
    """``lambda_min(<Hess f(x), xi>)`` for each generator."""
    Hs = np.einsum("ip,pjk->ijk", K.generators, point.H)
    return np.array([sym_eig(h).lambda_min for h in Hs])


def mu_value(point, K: OrderingCone, M: float, L: float, measure: str = "generator") -> float:
    """Stopping measure ``mu_M(x)``.

    ``max{ sqrt(2/(M+L) min_xi |<Jf, xi>|), -2/(M+2pL) max_xi lambda_min(<Hf, xi>) }``

    With ``measure="hull"`` the gradient term takes the minimum of
    ``|<Jf, eta>|`` over ``eta`` in the convex hull of the generators instead of
    over the generators alone. That variant vanishes at every Pareto-critical
    point, including ones balanced between several generators.
    """
    if not (M > 0 and L > 0):
        raise ValueError("mu_value requires M > 0 and L > 0")
    p = point.f.shape[0]
    if measure == "generator":
        gmin, _ = K.min_generator_norm(point.J)
    elif measure == "hull":
        gmin, _ = min_norm_in_hull(K.generators @ point.J)
    else:
        raise ValueError(f"unknown stationarity measure {measure!r}")
    first = math.sqrt(2.0 / (M + L) * gmin)
    second = -2.0 / (M + 2.0 * p * L) * float(np.max(min_lambda_per_generator(point, K)))
    return max(first, second)
