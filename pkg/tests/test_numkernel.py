import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubicvec.numkernel import (
    BracketError,
    NumericalFailure,
    SingularShiftError,
    bisect_root,
    solve_shifted,
    sym_eig,
    sym_matrix,
)


def _check_decomp(a, eig, tol=1e-10):
    scale = 1.0 + np.max(np.abs(a))
    assert np.max(np.abs(eig.reconstruct() - a)) <= tol * scale
    q = eig.eigenvectors
    assert np.max(np.abs(q.T @ q - np.eye(a.shape[0]))) <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) >= 0)


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
class TestSymEig:
    def test_identity(self, method):
        eig = sym_eig(np.eye(3), method)
        np.testing.assert_allclose(eig.eigenvalues, [1, 1, 1])
        _check_decomp(np.eye(3), eig)

    def test_diagonal_sorted(self, method):
        a = np.diag([3.0, 1.0, 2.0])
        eig = sym_eig(a, method)
        np.testing.assert_allclose(eig.eigenvalues, [1, 2, 3], atol=1e-14)
        assert eig.lambda_min == eig.eigenvalues.min()

    def test_two_by_two(self, method):
        eig = sym_eig([[2.0, 1.0], [1.0, 2.0]], method)
        np.testing.assert_allclose(eig.eigenvalues, [1.0, 3.0], atol=1e-14)
        v = eig.eigenvectors
        # eigenvectors only defined up to sign
        assert abs(abs(v[:, 0] @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-12
        assert abs(abs(v[:, 1] @ np.array([1, 1]) / math.sqrt(2)) - 1) < 1e-12

    def test_random_reconstruction(self, method, rng):
        for n in (1, 2, 5, 12, 20):
            b = rng.normal(size=(n, n))
            a = b + b.T
            _check_decomp(a, sym_eig(a, method), tol=1e-9)


def test_backends_agree(rng):
    for _ in range(30):
        n = int(rng.integers(1, 9))
        b = rng.normal(size=(n, n))
        a = b + b.T
        np.testing.assert_allclose(sym_eig(a).eigenvalues, sym_eig(a, "jacobi").eigenvalues, atol=1e-10)


def test_non_finite_raises():
    with pytest.raises(NumericalFailure):
        sym_eig([[1.0, np.nan], [np.nan, 1.0]])


def test_bad_shape_and_method():
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))
    with pytest.raises(ValueError):
        sym_eig(np.eye(2), "qr")


def test_sym_matrix_mirrors_upper():
    a = sym_matrix([[1, 2], [99, 3]])
    assert a[1, 0] == a[0, 1] == 2


class TestSolveShifted:
    def test_diagonal(self):
        d = solve_shifted(sym_eig(np.diag([1.0, 2.0])), 1.0, [2.0, 3.0])
        np.testing.assert_allclose(d, [1.0, 1.0])

    def test_identity_no_shift(self):
        np.testing.assert_allclose(solve_shifted(sym_eig(np.eye(2)), 0.0, [5.0, 7.0]), [5.0, 7.0])

    def test_coupled(self):
        d = solve_shifted(sym_eig([[2.0, 1.0], [1.0, 2.0]]), 1.0, [4.0, 4.0])
        np.testing.assert_allclose(d, [1.0, 1.0], atol=1e-14)

    def test_singular_shift(self):
        with pytest.raises(SingularShiftError):
            solve_shifted(sym_eig(np.diag([-1.0, 2.0])), 1.0, [1.0, 1.0])

    def test_random_residuals(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            b = rng.normal(size=(n, n))
            a = b + b.T
            eig = sym_eig(a)
            shift = -eig.lambda_min + rng.uniform(0.01, 3.0)
            rhs = rng.normal(size=n)
            d = solve_shifted(eig, shift, rhs)
            assert np.linalg.norm((a + shift * np.eye(n)) @ d - rhs) <= 1e-8 * (1 + np.linalg.norm(rhs))


class TestBisectRoot:
    def test_linear(self):
        assert abs(bisect_root(lambda r: r - 1.0, 0.0, 2.0) - 1.0) < 1e-13

    def test_quadratic(self):
        phi = lambda r: r * r + 2 * r - 2
        root = bisect_root(phi, 0.0, 2.0)
        assert abs(root - (math.sqrt(3) - 1)) < 1e-12
        root_n = bisect_root(phi, 0.0, 2.0, dphi=lambda r: 2 * r + 2)
        assert abs(root_n - (math.sqrt(3) - 1)) < 1e-12

    def test_boundary_root(self):
        assert bisect_root(lambda r: r, 0.0, 1.0) == 0.0

    def test_decreasing(self):
        assert abs(bisect_root(lambda r: 1.0 - r, 0.0, 3.0) - 1.0) < 1e-13

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            bisect_root(lambda r: r + 1.0, 0.0, 1.0)
        with pytest.raises(BracketError):
            bisect_root(lambda r: r, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=6))
def test_eig_of_diagonal_is_sorted_input(vals):
    eig = sym_eig(np.diag(vals))
    np.testing.assert_allclose(eig.eigenvalues, np.sort(vals), atol=1e-12)
