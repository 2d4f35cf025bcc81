"""Vector-valued test problems with exact first and second derivatives.

Each benchmark problem is written once as a sympy expression; its Jacobian and
Hessians are derived symbolically when the problem is first requested and then
compiled to plain float code. ``check_derivatives`` compares the compiled
derivatives against central finite differences.

Problem formulas follow the usual literature statements (Huband et al. 2006
review; the proximal-gradient multiobjective test set). Only the name, the
objective/variable counts and the box domain are fixed by the benchmark table;
the formula chosen for each problem is written next to its builder below.

Initial points come from a splitmix64 stream: the state starts at the seed,
each draw adds ``0x9E3779B97F4A7C15`` and mixes with the two standard
multiply-xorshift rounds, and the top 53 bits give a double in ``[0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sp

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def uniform_stream(seed: int, count: int) -> np.ndarray:
    """``count`` doubles in ``[0, 1)`` from the splitmix64 stream for ``seed``."""
    state = seed & _MASK64
    out = np.empty(count)
    for i in range(count):
        state, z = splitmix64(state)
        out[i] = (z >> 11) * (1.0 / (1 << 53))
    return out


@dataclass(frozen=True)
class EvalPoint:
    """Objective values and derivatives at one point.

    ``H`` has shape ``(p, n, n)``; ``H[i]`` is the Hessian of objective ``i``.
    """

    x: np.ndarray
    f: np.ndarray
    J: np.ndarray
    H: np.ndarray

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.J)) and np.all(np.isfinite(self.H))
        )


@dataclass(frozen=True)
class VectorProblem:
    name: str
    n: int
    p: int
    lower: np.ndarray
    upper: np.ndarray
    eval_f: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    eval_jac: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    eval_hess: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz_hint: Optional[float] = None
    convex: Optional[bool] = None
    formula: str = ""

    def __post_init__(self):
        if self.lower.shape != (self.n,) or self.upper.shape != (self.n,):
            raise ValueError(f"{self.name}: box bounds must have length {self.n}")
        if not np.all(self.lower < self.upper):
            raise ValueError(f"{self.name}: lower bounds must be below upper bounds")

    def evaluate(self, x) -> EvalPoint:
        x = np.array(x, dtype=float).reshape(self.n)
        return EvalPoint(x, self.eval_f(x), self.eval_jac(x), self.eval_hess(x))


def _compile(name, n, exprs, symbols, lower, upper, lipschitz_hint, convex, formula):
    p = len(exprs)
    jac = [[sp.diff(e, s) for s in symbols] for e in exprs]
    hess = [[[sp.diff(dj, s) for s in symbols] for dj in row] for row in jac]
    flat_j = [e for row in jac for e in row]
    flat_h = [e for blk in hess for row in blk for e in row]
    f_fun = sp.lambdify(symbols, list(exprs), modules="math")
    j_fun = sp.lambdify(symbols, flat_j, modules="math")
    h_fun = sp.lambdify(symbols, flat_h, modules="math")

    def eval_f(x):
        return np.array(f_fun(*x.tolist()), dtype=float)

    def eval_jac(x):
        return np.array(j_fun(*x.tolist()), dtype=float).reshape(p, n)

    def eval_hess(x):
        h = np.array(h_fun(*x.tolist()), dtype=float).reshape(p, n, n)
        return 0.5 * (h + h.transpose(0, 2, 1))

    return VectorProblem(
        name=name,
        n=n,
        p=p,
        lower=np.full(n, lower, dtype=float) if np.isscalar(lower) else np.asarray(lower, float),
        upper=np.full(n, upper, dtype=float) if np.isscalar(upper) else np.asarray(upper, float),
        eval_f=eval_f,
        eval_jac=eval_jac,
        eval_hess=eval_hess,
        lipschitz_hint=lipschitz_hint,
        convex=convex,
        formula=formula,
    )


def symbolic_problem(name, n, build, lower, upper, lipschitz_hint=None, convex=None, formula=""):
    """Make a problem from ``build(symbols) -> list of sympy objectives``."""
    x = sp.symbols(f"x0:{n}", real=True)
    exprs = build(x)
    return _compile(name, n, exprs, x, lower, upper, lipschitz_hint, convex, formula)


# --- benchmark formulas -----------------------------------------------------


def _rem1(x):
    (t,) = x
    return [t**2 + 4 * sp.sin(t), t**3 - 2 * t**2]


def _mlf1(x):
    (t,) = x
    return [(1 + t / 20) * sp.sin(t), (1 + t / 20) * sp.cos(t)]


def _far1(x):
    a, b = x
    e = sp.exp
    f1 = (
        -2 * e(15 * (-((a - 0.1) ** 2) - b**2))
        - e(20 * (-((a - 0.6) ** 2) - (b - 0.6) ** 2))
        + e(20 * (-((a + 0.6) ** 2) - (b - 0.6) ** 2))
        + e(20 * (-((a - 0.6) ** 2) - (b + 0.6) ** 2))
        + e(20 * (-((a + 0.6) ** 2) - (b + 0.6) ** 2))
    )
    f2 = (
        2 * e(20 * (-(a**2) - b**2))
        + e(20 * (-((a - 0.4) ** 2) - (b - 0.6) ** 2))
        - e(20 * (-((a + 0.5) ** 2) - (b - 0.7) ** 2))
        - e(20 * (-((a - 0.5) ** 2) - (b + 0.7) ** 2))
        + e(20 * (-((a + 0.4) ** 2) - (b + 0.8) ** 2))
    )
    return [f1, f2]


def _pnr(x):
    a, b = x
    return [a**4 + b**4 - a**2 + b**2 - 10 * a * b + 20, a**2 + b**2]


def _hil1(x):
    a, b = x
    ang = 2 * sp.pi / 360 * (45 + 40 * sp.sin(2 * sp.pi * a) + 25 * sp.sin(sp.pi * a))
    rad = 1 + sp.Rational(1, 2) * sp.cos(2 * sp.pi * b)
    return [sp.cos(ang) * rad, sp.sin(ang) * rad]


def _kw2(x):
    a, b = x
    e = sp.exp
    f1 = (
        -3 * (1 - a) ** 2 * e(-(a**2) - (b + 1) ** 2)
        + 10 * (a / 5 - a**3 - b**5) * e(-(a**2) - b**2)
        + 3 * e(-((a + 2) ** 2) - b**2)
        - sp.Rational(1, 2) * (2 * a + b)
    )
    f2 = (
        -3 * (1 + b) ** 2 * e(-(b**2) - (1 - a) ** 2)
        + 10 * (-b / 5 + a**5 + b**3) * e(-(a**2) - b**2)
        + 3 * e(-((2 - b) ** 2) - a**2)
    )
    return [f1, f2]


def _slcdt1(x):
    a, b = x
    lam = sp.Rational(85, 100)
    base = sp.sqrt(1 + (a + b) ** 2) + sp.sqrt(1 + (a - b) ** 2)
    bump = lam * sp.exp(-((a - b) ** 2))
    return [sp.Rational(1, 2) * (base + a - b) + bump, sp.Rational(1, 2) * (base - a + b) + bump]


def _mop3(x):
    a, b = x
    s, c = sp.sin, sp.cos
    a1 = sp.Rational(1, 2) * s(1) - 2 * c(1) + s(2) - sp.Rational(3, 2) * c(2)
    a2 = sp.Rational(3, 2) * s(1) - c(1) + 2 * s(2) - sp.Rational(1, 2) * c(2)
    b1 = sp.Rational(1, 2) * s(a) - 2 * c(a) + s(b) - sp.Rational(3, 2) * c(b)
    b2 = sp.Rational(3, 2) * s(a) - c(a) + 2 * s(b) - sp.Rational(1, 2) * c(b)
    return [1 + (a1 - b1) ** 2 + (a2 - b2) ** 2, (a + 3) ** 2 + (b + 1) ** 2]


def _vu1(x):
    a, b = x
    return [1 / (a**2 + b**2 + 1), a**2 + 3 * b**2 + 1]


def _fon(x):
    k = 1 / sp.sqrt(len(x))
    return [
        1 - sp.exp(-sum((xi - k) ** 2 for xi in x)),
        1 - sp.exp(-sum((xi + k) ** 2 for xi in x)),
    ]


def _toi4(x):
    return [
        x[0] ** 2 + x[1] ** 2 + 1,
        sp.Rational(1, 2) * ((x[0] - x[1]) ** 2 + (x[2] - x[3]) ** 2) + 1,
    ]


def _jos1(x):
    n = len(x)
    return [sum(xi**2 for xi in x) / n, sum((xi - 2) ** 2 for xi in x) / n]


def _ikk1(x):
    a, b = x
    return [a**2, (a - 20) ** 2, b**2]


def _vfm1(x):
    a, b = x
    return [a**2 + (b - 1) ** 2, a**2 + (b + 1) ** 2 + 1, (a - 1) ** 2 + b**2 + 2]


def _mop5(x):
    a, b = x
    r2 = a**2 + b**2
    return [
        sp.Rational(1, 2) * r2 + sp.sin(r2),
        (3 * a - 2 * b + 4) ** 2 / 8 + (a - b + 1) ** 2 / 27 + 15,
        1 / (r2 + 1) - sp.Rational(11, 10) * sp.exp(-r2),
    ]


def _mop7(x):
    a, b = x
    return [
        (a - 2) ** 2 / 2 + (b + 1) ** 2 / 13 + 3,
        (a + b - 3) ** 2 / 36 + (-a + b + 2) ** 2 / 8 - 17,
        (a + 2 * b - 1) ** 2 / 175 + (2 * b - a) ** 2 / 17 - 13,
    ]


def _slcdt2(x):
    n = len(x)
    f1 = (x[0] - 1) ** 4 + sum((x[j] - 1) ** 2 for j in range(n) if j != 0)
    f2 = (x[1] + 1) ** 4 + sum((x[j] + 1) ** 2 for j in range(n) if j != 1)
    f3 = (x[2] - 1) ** 4 + sum((x[j] - 1) ** 2 for j in range(n) if j != 2)
    return [f1, f2, f3]


# name -> (n, builder, lower, upper, lipschitz_hint, convex label, formula)
_SUITE = {
    "MLF1": (1, _mlf1, 0.0, 20.0, None, False, "f=((1+x/20) sin x, (1+x/20) cos x)"),
    "Far1": (2, _far1, -1.0, 1.0, None, False, "sums of Gaussian bumps (Farhang-Mehr & Azarm)"),
    "PNR": (2, _pnr, -2.0, 2.0, None, True, "f=(x1^4+x2^4-x1^2+x2^2-10x1x2+20, x1^2+x2^2)"),
    "Hil1": (2, _hil1, 0.0, 1.0, None, False, "Hillermeier: (cos a(x1) b(x2), sin a(x1) b(x2))"),
    "KW2": (2, _kw2, -3.0, 3.0, None, True, "Kim & de Weck peaks-type pair"),
    "SLCDT1": (2, _slcdt1, -1.5, 1.5, None, False, "Schuetze et al. with lambda=0.85"),
    "MOP3": (2, _mop3, -math.pi, math.pi, None, False, "Poloni: (1+(A1-B1)^2+(A2-B2)^2, (x1+3)^2+(x2+1)^2)"),
    "VU1": (2, _vu1, -3.0, 3.0, None, False, "f=(1/(x1^2+x2^2+1), x1^2+3x2^2+1)"),
    "FON": (3, _fon, -4.0, 4.0, None, False, "Fonseca-Fleming, shift 1/sqrt(n)"),
    "Toi4": (4, _toi4, -2.0, 5.0, 0.0, True, "f=(x1^2+x2^2+1, ((x1-x2)^2+(x3-x4)^2)/2+1)"),
    "JOS1": (4, _jos1, -2.0, 2.0, 0.0, True, "f=(|x|^2/n, |x-2|^2/n)"),
    "IKK1": (2, _ikk1, -50.0, 50.0, 0.0, True, "f=(x1^2, (x1-20)^2, x2^2)"),
    "VFM1": (2, _vfm1, -2.0, 2.0, 0.0, True, "f=(x1^2+(x2-1)^2, x1^2+(x2+1)^2+1, (x1-1)^2+x2^2+2)"),
    "MOP5": (2, _mop5, -30.0, 30.0, None, False, "Viennet's three-objective problem"),
    "MOP7": (2, _mop7, -400.0, 400.0, 0.0, True, "Viennet's convex three-objective quadratic"),
    "SLCDT2": (10, _slcdt2, -1.0, 1.0, None, False, "quartic/quadratic triple (Schuetze et al.)"),
    "REM1": (1, _rem1, -1.5, 1.0, 6.0, False, "f=(x^2+4 sin x, x^3-2x^2)"),
}

BENCHMARK_NAMES = tuple(name for name in _SUITE if name != "REM1")


@lru_cache(maxsize=None)
def lookup(name: str) -> VectorProblem:
    """Problem by name; raises ``KeyError`` listing the known names."""
    try:
        n, build, lo, hi, lip, convex, formula = _SUITE[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(_SUITE)}") from None
    return symbolic_problem(name, n, build, lo, hi, lip, convex, formula)


def registry() -> list[VectorProblem]:
    """The sixteen benchmark problems followed by REM1."""
    return [lookup(name) for name in _SUITE]


def sample_initial(prob: VectorProblem, seed: int) -> np.ndarray:
    """Deterministic uniform point in the box of ``prob``."""
    u = uniform_stream(seed, prob.n)
    return prob.lower + u * (prob.upper - prob.lower)


@dataclass
class DerivativeReport:
    jac_error: np.ndarray
    hess_error: np.ndarray

    @property
    def max_error(self) -> float:
        return float(max(self.jac_error.max(), self.hess_error.max()))


def check_derivatives(prob: VectorProblem, x, h: float = 1e-5) -> DerivativeReport:
    """Compare analytic derivatives with central differences at ``x``.

    Errors are per objective, scaled as ``max|a - b| / (1 + max|a|)``.

    Raises:
        FloatingPointError: a non-finite value appeared; the message names the
            offending coordinate.
    """
    x = np.asarray(x, dtype=float)
    pt = prob.evaluate(x)
    if not pt.is_finite():
        raise FloatingPointError(f"{prob.name}: non-finite evaluation at x={x.tolist()}")
    fd_j = np.empty((prob.p, prob.n))
    fd_h = np.empty((prob.p, prob.n, prob.n))
    for k in range(prob.n):
        e = np.zeros(prob.n)
        e[k] = h
        fp, fm = prob.eval_f(x + e), prob.eval_f(x - e)
        jp, jm = prob.eval_jac(x + e), prob.eval_jac(x - e)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))
                and np.all(np.isfinite(jp)) and np.all(np.isfinite(jm))):
            raise FloatingPointError(f"{prob.name}: non-finite value perturbing coordinate {k}")
        fd_j[:, k] = (fp - fm) / (2 * h)
        fd_h[:, :, k] = (jp - jm) / (2 * h)
    jac_err = np.abs(fd_j - pt.J).max(axis=1) / (1.0 + np.abs(pt.J).max(axis=1))
    hess_err = np.abs(fd_h - pt.H).reshape(prob.p, -1).max(axis=1) / (
        1.0 + np.abs(pt.H).reshape(prob.p, -1).max(axis=1)
    )
    return DerivativeReport(jac_err, hess_err)
