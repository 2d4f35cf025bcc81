"""Cubic-regularized Newton method for vector optimization with polyhedral
ordering cones, plus a benchmark harness."""

from .cone import OrderingCone, cone_from_spec
from .metrics import FrontApproximation, hypervolume, nondominated_filter, performance_profile, purity, spreads
from .problems import BENCHMARK_NAMES, VectorProblem, lookup, registry, sample_initial
from .solver import SDConfig, SolverConfig, SolverTrace, gamma_diagnostics, run_cubic_newton, run_steepest_descent
from .subproblem import SubproblemSolution, mu_value, solve_direction, solve_scalar_cubic

__all__ = [
    "BENCHMARK_NAMES",
    "FrontApproximation",
    "OrderingCone",
    "SDConfig",
    "SolverConfig",
    "SolverTrace",
    "SubproblemSolution",
    "VectorProblem",
    "cone_from_spec",
    "gamma_diagnostics",
    "hypervolume",
    "lookup",
    "mu_value",
    "nondominated_filter",
    "performance_profile",
    "purity",
    "registry",
    "run_cubic_newton",
    "run_steepest_descent",
    "sample_initial",
    "solve_direction",
    "solve_scalar_cubic",
    "spreads",
]
