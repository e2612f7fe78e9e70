"""Tests for the Lanczos exponential and Jacobi-preconditioned CG."""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from src.errors import SolverError
from src.semigroup.krylov import expm_krylov, lanczos
from src.semigroup.pcg import solve_cg


def _spd(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((n, n))
    return b @ b.T + n * np.eye(n)


class TestLanczos:
    def test_basis_is_orthonormal(self) -> None:
        A = _spd(30)
        basis = lanczos(lambda x: A @ x, np.ones(30), 12)
        assert basis.dim == 12
        np.testing.assert_allclose(basis.V.T @ basis.V, np.eye(12), atol=1e-12)

    def test_tridiagonal_projection(self) -> None:
        A = _spd(20, seed=1)
        basis = lanczos(lambda x: A @ x, np.arange(20.0), 8)
        T = basis.V.T @ A @ basis.V
        np.testing.assert_allclose(np.diag(T), basis.alpha, atol=1e-10)
        np.testing.assert_allclose(np.diag(T, 1), basis.beta, atol=1e-10)

    def test_invariant_subspace_stops_early(self) -> None:
        A = np.diag([1.0, 2.0, 3.0, 4.0])
        basis = lanczos(lambda x: A @ x, np.array([1.0, 0.0, 0.0, 0.0]), 4)
        assert basis.dim == 1
        assert basis.alpha[0] == 1.0

    def test_zero_vector(self) -> None:
        basis = lanczos(lambda x: x, np.zeros(5), 3)
        assert basis.dim == 0 and basis.norm == 0.0


class TestExpmKrylov:
    def test_full_space_is_exact(self) -> None:
        A = _spd(15) / 15.0
        v = np.linspace(-1, 1, 15)
        step = expm_krylov(lambda x: A @ x, v, 0.7, 15)
        np.testing.assert_allclose(step.result, expm(-0.7 * A) @ v, rtol=1e-10, atol=1e-12)

    def test_error_estimate_tracks_error(self) -> None:
        n = 200
        A = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) * 100.0
        v = np.exp(-np.linspace(-3, 3, n) ** 2)
        exact = expm(-0.01 * A.toarray()) @ v
        for m in (10, 20, 40):
            step = expm_krylov(lambda x: A @ x, v, 0.01, m)
            error = np.linalg.norm(step.result - exact)
            assert error <= 100.0 * step.error_estimate + 1e-12

    def test_zero_vector(self) -> None:
        step = expm_krylov(lambda x: x, np.zeros(4), 1.0, 3)
        assert step.dim == 0
        np.testing.assert_array_equal(step.result, np.zeros(4))


class TestSolveCG:
    def test_matches_direct_solve(self) -> None:
        A = sp.csr_matrix(_spd(40, seed=2))
        b = np.random.default_rng(3).standard_normal(40)
        result = solve_cg(A, b, 1e-12)
        np.testing.assert_allclose(A @ result.x, b, atol=1e-9)
        assert result.residual <= 1e-12

    def test_zero_rhs(self) -> None:
        result = solve_cg(sp.identity(3, format="csr"), np.zeros(3), 1e-10)
        assert result.iterations == 0
        np.testing.assert_array_equal(result.x, np.zeros(3))

    def test_rejects_bad_diagonal(self) -> None:
        with pytest.raises(SolverError, match="positive diagonal"):
            solve_cg(sp.diags([1.0, 0.0, 1.0]), np.ones(3), 1e-10)

    def test_iteration_cap_carries_diagnostics(self) -> None:
        A = sp.csr_matrix(_spd(40, seed=4))
        with pytest.raises(SolverError) as info:
            solve_cg(A, np.ones(40), 1e-14, max_iter=1)
        assert info.value.diagnostics["iterations"] == 1
        assert info.value.diagnostics["relative_residual"] > 1e-14
