"""Cubic-regularized Newton iteration, the steepest-descent baseline, and
local-rate diagnostics."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cone import OrderingCone, project_simplex
from .problems import VectorProblem
from .subproblem import min_lambda_per_generator, mu_value, solve_direction

logger = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITERATIONS = "MaxIterations"
MAX_DOUBLINGS = "MaxDoublings"
NUMERICAL_FAILURE = "NumericalFailure"
STALLED = "Stalled"


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the cubic Newton loop.

    Defaults are the benchmark settings ``L0 = 1, L = 1.5, M0 = 3, eps = 1e-3``.
    """

    L0: float = 1.0
    L: float = 1.5
    M0: float = 3.0
    eps: float = 1e-3
    max_iter: int = 1000
    max_doublings: int = 60
    gap_tol: float = 1e-8
    stall_tol: float = 1e-13
    measure: str = "generator"

    def __post_init__(self):
        if not (self.L0 > 0 and self.L > 0 and self.eps > 0):
            raise ValueError("L0, L and eps must be positive")
        if not self.L0 <= self.M0:
            raise ValueError(f"M0={self.M0} must not be below L0={self.L0}")
        if self.max_iter < 1 or self.max_doublings < 1:
            raise ValueError("max_iter and max_doublings must be positive")
        if self.measure not in ("generator", "hull"):
            raise ValueError(f"unknown stationarity measure {self.measure!r}")

    def warm_start(self, previous_m: float) -> float:
        lo, hi = self.L0, max(self.L0, 2.0 * self.L)
        return min(max(self.L0, 0.5 * previous_m, lo), hi)


@dataclass(frozen=True)
class SDConfig:
    beta: float = 1e-4
    eps: float = 1e-3
    max_iter: int = 1000
    max_backtracks: int = 60


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    f: np.ndarray
    M: float
    r: float
    mu: float
    beta: float
    doublings: int
    elapsed: float
    h: float = math.nan
    f_next: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = field(default=None, repr=False)
    certified: bool = True


@dataclass
class SolverTrace:
    iterations: list = field(default_factory=list)
    status: str = MAX_ITERATIONS
    final_x: Optional[np.ndarray] = None
    final_f: Optional[np.ndarray] = None
    final_mu: float = math.nan
    message: str = ""
    wall_time: float = 0.0

    @property
    def n_iter(self) -> int:
        """Number of steps taken (the converged iterate's index)."""
        return max(len(self.iterations) - 1, 0) if self.status == CONVERGED else len(self.iterations)

    @property
    def doublings_total(self) -> int:
        return sum(rec.doublings for rec in self.iterations)


def _finite(pt) -> bool:
    return pt.is_finite()


def run_cubic_newton(prob: VectorProblem, K: OrderingCone, x0, cfg: SolverConfig = SolverConfig()) -> SolverTrace:
    """Cubic-regularized Newton method for ``min f`` in the order of ``K``.

    Each iteration takes a trial ``M`` (``M0`` first, then half the previous
    accepted value clamped to ``[L0, 2L]``), solves the subproblem, and doubles
    ``M`` until ``max_xi <f(x + d), xi> <= h_M(x)``. The iteration stops once
    ``mu_M(x) < eps``.
    """
    if K.p != prob.p:
        raise ValueError(f"cone dimension {K.p} does not match {prob.p} objectives")
    t0 = time.perf_counter()
    trace = SolverTrace()
    x = np.array(x0, dtype=float).reshape(prob.n)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial point must be finite")
    pt = prob.evaluate(x)
    if not _finite(pt):
        trace.status = NUMERICAL_FAILURE
        trace.message = f"non-finite evaluation at x={x.tolist()}"
        trace.final_x, trace.final_f = x, pt.f
        return trace
    M_prev = None
    for k in range(cfg.max_iter):
        M = cfg.M0 if M_prev is None else cfg.warm_start(M_prev)
        fmax = K.max_scalarization(pt.f)[0]
        doublings = 0
        while True:
            sol = solve_direction(pt, K, M, gap_tol=cfg.gap_tol)
            h = fmax + sol.primal
            x_new = x + sol.d
            pt_new = prob.evaluate(x_new)
            if not _finite(pt_new):
                accepted = False
                numerically_bad = True
            else:
                numerically_bad = False
                accepted = K.max_scalarization(pt_new.f)[0] <= h + 1e-12 * (1.0 + abs(h))
            if accepted:
                break
            if doublings >= cfg.max_doublings:
                break
            M *= 2.0
            doublings += 1
        mu = mu_value(pt, K, M, cfg.L, cfg.measure)
        rec = IterationRecord(
            k=k, x=x, f=pt.f, M=M, r=sol.r, mu=mu, beta=sol.primal,
            doublings=doublings, elapsed=time.perf_counter() - t0, h=h,
            f_next=pt_new.f if accepted else None, eta=sol.eta, certified=sol.certified,
        )
        trace.iterations.append(rec)
        if mu < cfg.eps:
            trace.status = CONVERGED
            trace.message = f"x^{k} is an eps-precise weakly efficient point (mu={mu:.3e} < eps={cfg.eps:g})"
            break
        if not accepted:
            if numerically_bad:
                trace.status = NUMERICAL_FAILURE
                trace.message = f"non-finite evaluation at x={x_new.tolist()}"
            else:
                trace.status = MAX_DOUBLINGS
                trace.message = (
                    f"acceptance failed after {cfg.max_doublings} doublings at iteration {k}; "
                    f"the Lipschitz estimate L={cfg.L:g} is probably too small"
                )
                logger.warning(trace.message)
            break
        if sol.r <= cfg.stall_tol * (1.0 + float(np.linalg.norm(x))):
            trace.status = STALLED
            trace.message = f"step length {sol.r:.2e} vanished at iteration {k} with mu={mu:.3e}"
            break
        x, pt, M_prev = x_new, pt_new, M
    else:
        trace.status = MAX_ITERATIONS
        trace.message = f"no convergence within {cfg.max_iter} iterations"
    last = trace.iterations[-1] if trace.iterations else None
    trace.final_x = x
    trace.final_f = pt.f
    trace.final_mu = last.mu if last is not None else math.nan
    trace.wall_time = time.perf_counter() - t0
    return trace


def steepest_direction(J: np.ndarray, K: OrderingCone, iters: int = 5000):
    """``argmin_d max_xi <J d, xi> + |d|^2 / 2`` through its dual.

    The dual minimizes ``|sum_i w_i J^T xi_i|^2`` over the simplex; solved by
    accelerated projected gradient. Returns ``(d, weights)``.
    """
    V = K.generators @ J
    m = V.shape[0]
    gram = V @ V.T
    lip = float(np.linalg.eigvalsh(gram)[-1]) if m > 1 else float(gram[0, 0])
    if m == 1 or lip <= 0.0:
        w = np.full(m, 1.0 / m)
        return -(w @ V), w
    w = np.full(m, 1.0 / m)
    y, t = w.copy(), 1.0
    for _ in range(iters):
        w_new = project_simplex(y - (gram @ y) / lip)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = w_new + (t - 1.0) / t_new * (w_new - w)
        if float(np.max(np.abs(w_new - w))) <= 1e-15:
            w = w_new
            break
        w, t = w_new, t_new
    return -(w @ V), w


def run_steepest_descent(prob: VectorProblem, K: OrderingCone, x0, cfg: SDConfig = SDConfig()) -> SolverTrace:
    """K-steepest descent with Armijo backtracking (halving from a unit step)."""
    if K.p != prob.p:
        raise ValueError(f"cone dimension {K.p} does not match {prob.p} objectives")
    t0 = time.perf_counter()
    trace = SolverTrace()
    x = np.array(x0, dtype=float).reshape(prob.n)
    f = prob.eval_f(x)
    for k in range(cfg.max_iter + 1):
        J = prob.eval_jac(x)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(J))):
            trace.status = NUMERICAL_FAILURE
            trace.message = f"non-finite evaluation at x={x.tolist()}"
            break
        d, w = steepest_direction(J, K)
        r = float(np.linalg.norm(d))
        slope = float(np.max(K.generators @ (J @ d)))
        rec = IterationRecord(
            k=k, x=x, f=f, M=math.nan, r=r, mu=r, beta=slope + 0.5 * r * r,
            doublings=0, elapsed=time.perf_counter() - t0, eta=K.combine(w),
        )
        trace.iterations.append(rec)
        if r < cfg.eps:
            trace.status = CONVERGED
            trace.message = f"|d|={r:.3e} < eps={cfg.eps:g} at iteration {k}"
            break
        if k == cfg.max_iter:
            trace.status = MAX_ITERATIONS
            trace.message = f"no convergence within {cfg.max_iter} iterations"
            break
        alpha = 1.0
        fmax_ref = f
        for nb in range(cfg.max_backtracks + 1):
            x_try = x + alpha * d
            f_try = prob.eval_f(x_try)
            if np.all(np.isfinite(f_try)) and float(
                np.max(K.generators @ (f_try - fmax_ref))
            ) <= cfg.beta * alpha * slope:
                break
            alpha *= 0.5
        else:
            trace.status = MAX_ITERATIONS
            trace.message = f"Armijo backtracking failed at iteration {k}"
            break
        rec.doublings = nb
        x, f = x_try, f_try
    trace.final_x = x
    trace.final_f = f
    trace.final_mu = trace.iterations[-1].mu if trace.iterations else math.nan
    trace.wall_time = time.perf_counter() - t0
    return trace


@dataclass
class GammaDiagnostics:
    gamma: np.ndarray
    eig_ratio: np.ndarray
    quadratic_ok: np.ndarray

    def defined(self) -> np.ndarray:
        return np.isfinite(self.gamma)


def gamma_diagnostics(trace: SolverTrace, prob: VectorProblem, K: OrderingCone, L: float) -> GammaDiagnostics:
    """Local-rate quantity ``gamma_k = L |<Jf(x^k), eta^k>| / (min_xi lambda_min)^2``.

    Entries are NaN where the smallest generator-wise eigenvalue is not
    positive. ``quadratic_ok[k]`` reports ``gamma_{k+1} <= 8/3 gamma_k^2``
    (NaN-safe: undefined pairs count as True).
    """
    if not trace.iterations:
        raise ValueError("empty trace")
    gam, lam_min = [], []
    for rec in trace.iterations:
        pt = prob.evaluate(rec.x)
        lm = float(np.min(min_lambda_per_generator(pt, K)))
        lam_min.append(lm)
        if lm > 0.0 and rec.eta is not None:
            gam.append(L * float(np.linalg.norm(rec.eta @ pt.J)) / lm**2)
        else:
            gam.append(math.nan)
    gam = np.array(gam)
    lam_min = np.array(lam_min)
    ratio = lam_min / lam_min[0] if lam_min[0] > 0 else np.full_like(lam_min, math.nan)
    ok = np.ones(len(gam), dtype=bool)
    for k in range(len(gam) - 1):
        if np.isfinite(gam[k]) and np.isfinite(gam[k + 1]):
            ok[k] = gam[k + 1] <= 8.0 / 3.0 * gam[k] ** 2 + 1e-9
    return GammaDiagnostics(gam, ratio, ok)
