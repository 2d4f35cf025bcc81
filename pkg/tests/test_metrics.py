import itertools
import logging
import math

import numpy as np
import pytest

from cubicvec.cone import OrderingCone, cone_from_spec
from cubicvec.metrics import (
    FrontApproximation,
    hypervolume,
    nondominated_filter,
    performance_profile,
    purity,
    reference_point,
    spreads,
)

ORTH2 = OrderingCone.orthant(2)


def _hv_monte_carlo(points, ref, rng, n=400_000):
    lo = points.min(axis=0)
    samples = lo + (ref - lo) * rng.random((n, ref.size))
    covered = np.zeros(n, dtype=bool)
    for u in points:
        covered |= np.all(samples >= u, axis=1)
    return covered.mean() * np.prod(ref - lo)


class TestHypervolume:
    def test_two_points(self):
        assert hypervolume([[1, 2], [2, 1]], [3, 3]) == pytest.approx(3.0)

    def test_single_box(self):
        assert hypervolume([[0.5, 0.25, 0.0]], [1, 1, 1]) == pytest.approx(0.375)

    def test_empty_and_outside(self, caplog):
        assert hypervolume(np.zeros((0, 2)), [1, 1]) == 0.0
        with caplog.at_level(logging.WARNING):
            assert hypervolume([[2, 0], [0.5, 0.5]], [1, 1]) == pytest.approx(0.25)
        assert "outside" in caplog.text

    def test_dominated_points_do_not_add(self):
        assert hypervolume([[1, 1], [1.5, 1.5]], [2, 2]) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [2, 3])
    def test_against_monte_carlo(self, rng, p):
        pts = rng.random((12, p))
        ref = np.ones(p) * 1.2
        mc = _hv_monte_carlo(pts, ref, rng)
        assert hypervolume(pts, ref) == pytest.approx(mc, abs=5e-3)

    def test_3d_against_inclusion_exclusion(self, rng):
        pts = rng.random((5, 3))
        ref = np.ones(3)
        total = 0.0
        for k in range(1, 6):
            for sub in itertools.combinations(range(5), k):
                corner = pts[list(sub)].max(axis=0)
                total += (-1) ** (k + 1) * np.prod(ref - corner)
        assert hypervolume(pts, ref) == pytest.approx(total, abs=1e-12)

    def test_rejects_other_dimensions(self):
        with pytest.raises(ValueError):
            hypervolume([[0.0] * 4], [1.0] * 4)


class TestNondominated:
    def test_example(self):
        pts = [[1, 3], [2, 2], [3, 1], [2.5, 2.5], [1, 3]]
        out = nondominated_filter(pts, ORTH2)
        np.testing.assert_array_equal(out, [[1, 3], [2, 2], [3, 1], [1, 3]])

    def test_weak_dominance_is_kept(self):
        out = nondominated_filter([[1, 1], [1, 2]], ORTH2)
        assert len(out) == 2

    def test_brute_force(self, rng):
        K = cone_from_spec("r2-cone", 2)
        pts = rng.normal(size=(40, 2))
        out = nondominated_filter(pts, K)
        expect = [u for u in pts
                  if not any(np.all(K.generators @ (v - u) < -1e-12) for v in pts)]
        np.testing.assert_array_equal(out, np.array(expect))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            nondominated_filter(np.zeros((0, 2)), ORTH2)


class TestFront:
    def test_dedup_and_finite(self):
        fr = FrontApproximation([[0, 1], [0, 1 + 1e-12], [1, 0]])
        assert len(fr) == 2
        with pytest.raises(ValueError):
            FrontApproximation([[0, math.inf]])

    def test_reference_point(self):
        fr = [FrontApproximation([[0, 2], [1, 0]]), FrontApproximation([[2, 1]])]
        np.testing.assert_allclose(reference_point(fr), [2.2, 2.2])


class TestPurity:
    def test_cases(self):
        a = FrontApproximation([[0, 2], [2, 0]])
        b = FrontApproximation([[1, 1], [3, 3]])
        fronts = [a, b]
        assert purity(a, fronts, ORTH2) == 1.0
        assert purity(b, fronts, ORTH2) == 0.5
        assert purity(FrontApproximation(np.zeros((0, 2))), fronts, ORTH2) == 0.0

    def test_fully_dominated(self):
        a = FrontApproximation([[0, 0]])
        b = FrontApproximation([[1, 1], [2, 0.5]])
        assert purity(b, [a, b], ORTH2) == 0.0


class TestSpreads:
    def test_gamma_single_objective_gap(self):
        fr = FrontApproximation([[0, 2], [1, 1], [3, 0]])
        delta, gamma = spreads(fr)
        assert gamma == pytest.approx(2.0)
        # gaps of f1 are (1, 2): mean 1.5, deviation (0.5 + 0.5) / 3
        assert delta == pytest.approx(1.0 / 3.0)

    def test_equally_spaced(self):
        t = np.linspace(0, 1, 6)
        delta, gamma = spreads(FrontApproximation(np.c_[t, 1 - t]))
        assert delta == pytest.approx(0.0, abs=1e-12)
        assert gamma == pytest.approx(0.2)

    def test_too_few(self):
        assert all(math.isnan(v) for v in spreads(FrontApproximation([[0, 1]])))


class TestProfile:
    def test_example(self):
        costs = {"a": [1.0, 2.0, math.inf], "b": [2.0, 2.0, 4.0]}
        pc = performance_profile(costs, tau=[1.0, 2.0, 10.0])
        np.testing.assert_allclose(pc.rho["a"], [2 / 3, 2 / 3, 2 / 3])
        np.testing.assert_allclose(pc.rho["b"], [2 / 3, 1.0, 1.0])

    def test_all_failed_excluded(self, caplog):
        costs = {"a": [1.0, math.nan], "b": [3.0, math.inf]}
        with caplog.at_level(logging.WARNING):
            pc = performance_profile(costs, problems=["P", "Q"])
        assert pc.excluded == ["Q"]
        assert pc.rho["a"][0] == 1.0

    def test_monotone_and_bounded(self, rng):
        costs = {s: list(rng.uniform(1, 10, size=20)) for s in "xyz"}
        pc = performance_profile(costs)
        assert pc.tau[0] == 1.0
        for rho in pc.rho.values():
            assert np.all(np.diff(rho) >= 0) and rho[-1] == 1.0
        # every problem has at least one winner at tau = 1
        assert sum(r[0] for r in pc.rho.values()) >= 1.0 - 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            performance_profile({"a": [0.0]})
        with pytest.raises(ValueError):
            performance_profile({"a": [1.0]}, tau=[0.5])
        with pytest.raises(ValueError):
            performance_profile({})
