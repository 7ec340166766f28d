import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdcomp.errors import PreconditionError, SolverError
from rdcomp.grid import build_grid, laplacian_matrix
from rdcomp.linops import (
    ShiftedPoisson,
    discrete_lambda1,
    principal_eigenpair,
    rayleigh_quotient,
    solve_shifted_poisson,
)


def dense_lambda1(grid, q=0.0):
    A = -laplacian_matrix(grid).toarray() + np.diag(np.broadcast_to(q, (grid.size,)))
    return np.linalg.eigvalsh(A)[0]


def test_zero_rhs(grid):
    assert np.all(solve_shifted_poisson(grid, 0.0, np.zeros(grid.size)) == 0)


def test_poisson_sine(grid):
    x = grid.axes[0]
    w = solve_shifted_poisson(grid, 0.0, np.sin(x))
    assert np.max(np.abs(w - np.sin(x))) < grid.h[0] ** 2


def test_shift_one_on_eigenvector(small_grid):
    res = principal_eigenpair(small_grid)
    w = solve_shifted_poisson(small_grid, 1.0, res.phi1)
    lam = dense_lambda1(small_grid)
    np.testing.assert_allclose(w, res.phi1 / (lam + 1.0), rtol=1e-9)


@pytest.mark.parametrize("kind,n", [("interval", 50), ("rectangle", 10)])
def test_residual_contract(kind, n):
    g = build_grid(kind, n)
    rng = np.random.default_rng(0)
    K = rng.uniform(0, 5, g.size)
    rhs = rng.normal(size=g.size)
    solver = ShiftedPoisson(g, K)
    w = solver.solve(rhs, tol=1e-12)
    assert np.linalg.norm(solver.matvec(w) - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_negative_shift_rejected(grid):
    with pytest.raises(PreconditionError):
        ShiftedPoisson(grid, -1.0)


def test_cg_nonconvergence_reports_residual():
    g = build_grid("rectangle", 20)
    with pytest.raises(SolverError) as info:
        ShiftedPoisson(g, 0.0, max_iter=2).solve(np.ones(g.size))
    assert info.value.residual > 0


def test_lambda1_analytic(grid):
    h = grid.h[0]
    assert discrete_lambda1(grid) == pytest.approx(4 / h**2 * math.sin(h / 2) ** 2, abs=1e-10)
    assert abs(discrete_lambda1(grid) - 1.0) < 1e-3


def test_eigen_invariants(grid):
    q = np.cos(grid.axes[0])
    res = principal_eigenpair(grid, q)
    assert np.all(res.phi1 > 0)
    assert res.phi1.max() == 1.0
    assert res.residual <= 1e-10
    assert abs(res.lambda1 - rayleigh_quotient(grid, q, res.phi1)) <= 1e-9
    with pytest.raises(ValueError):
        res.phi1[0] = 2.0


def test_dense_oracle_with_potential(small_grid):
    q = np.linspace(-3, 2, small_grid.size) ** 2
    assert principal_eigenpair(small_grid, q).lambda1 == pytest.approx(dense_lambda1(small_grid, q), abs=1e-10)


def test_2d_unit_square():
    g = build_grid("rectangle", 20, 1.0)
    h = g.h[0]
    exact = 2 * 4 / h**2 * math.sin(math.pi * h / 2) ** 2
    assert principal_eigenpair(g).lambda1 == pytest.approx(exact, abs=1e-9)


def test_constant_shift(grid):
    q = np.sin(3 * grid.axes[0])
    base = principal_eigenpair(grid, q)
    shifted = principal_eigenpair(grid, q + 2.5)
    assert shifted.lambda1 - base.lambda1 == pytest.approx(2.5, abs=1e-10)
    np.testing.assert_allclose(shifted.phi1, base.phi1, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_monotone_in_potential(seed):
    g = build_grid("interval", 40)
    rng = np.random.default_rng(seed)
    q1 = rng.normal(size=g.size)
    q2 = q1 + rng.uniform(0.01, 1.0, g.size)
    assert principal_eigenpair(g, q1).lambda1 < principal_eigenpair(g, q2).lambda1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rayleigh_minimal(seed):
    g = build_grid("interval", 40)
    rng = np.random.default_rng(seed)
    q = np.cos(g.axes[0])
    lam = principal_eigenpair(g, q).lambda1
    z = rng.normal(size=g.size)
    assert rayleigh_quotient(g, q, z) >= lam - 1e-9
