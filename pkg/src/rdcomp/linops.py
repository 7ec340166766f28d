"""Solves with -Lap + K and the principal Dirichlet eigenpair of -Lap + q."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import PreconditionError, SolverError
from .grid import Grid, apply_laplacian, laplacian_matrix

EIG_TOL = 1e-10
EIG_MAX_ITER = 500


def _coefficient(grid: Grid, K) -> np.ndarray:
    K = np.broadcast_to(np.asarray(K, dtype=float), (grid.size,))
    return grid.check(K)


class ShiftedPoisson:
    """Reusable solver for ``(-Lap + K) w = rhs`` with K >= 0.

    In 1D the tridiagonal matrix is Cholesky-factored once; in 2D every solve
    runs Jacobi-preconditioned conjugate gradients.
    """

    def __init__(self, grid: Grid, K, max_iter: int | None = None):
        K = _coefficient(grid, K)
        if not np.all(np.isfinite(K)):
            raise PreconditionError("shift coefficient must be finite")
        if np.any(K < 0):
            raise PreconditionError(f"shift coefficient must be >= 0 (min {K.min():.3g})")
        self.grid = grid
        self.K = K
        self.max_iter = max_iter or 10 * grid.size
        if grid.dim == 1:
            (hx,) = grid.h
            ab = np.empty((2, grid.n))
            ab[0, 0] = 0.0
            ab[0, 1:] = -1.0 / hx**2
            ab[1] = 2.0 / hx**2 + K
            self._chol = sla.cholesky_banded(ab, lower=False)
        else:
            self._diag = sum(2.0 / hx**2 for hx in grid.h) + K

    def matvec(self, w: np.ndarray) -> np.ndarray:
        return -apply_laplacian(self.grid, w) + self.K * w

    def solve(self, rhs: np.ndarray, tol: float = 1e-13) -> np.ndarray:
        rhs = self.grid.check(rhs)
        bnorm = np.linalg.norm(rhs)
        if bnorm == 0.0:
            return np.zeros_like(rhs)
        if self.grid.dim == 1:
            w = sla.cho_solve_banded((self._chol, False), rhs, check_finite=False)
            res = np.linalg.norm(self.matvec(w) - rhs)
            if res > max(tol, 1e-10) * bnorm:
                raise SolverError("banded solve lost accuracy", residual=res / bnorm)
            return w
        return self._pcg(rhs, tol, bnorm)

    def _pcg(self, b, tol, bnorm):
        x = np.zeros_like(b)
        r = b.copy()
        z = r / self._diag
        p = z.copy()
        rz = r @ z
        for it in range(1, self.max_iter + 1):
            Ap = self.matvec(p)
            alpha = rz / (p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            rn = np.linalg.norm(r)
            if rn <= tol * bnorm:
                return x
            z = r / self._diag
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise SolverError(
            f"conjugate gradients did not converge in {self.max_iter} iterations",
            residual=rn / bnorm,
            iterations=self.max_iter,
        )


def solve_shifted_poisson(grid: Grid, K, rhs, tol: float = 1e-13) -> np.ndarray:
    """Return w with ``||(-Lap + K) w - rhs||_2 <= tol ||rhs||_2``."""
    return ShiftedPoisson(grid, K).solve(rhs, tol)


def operator_matrix(grid: Grid, q) -> sp.csc_matrix:
    """Sparse ``-Lap + diag(q)`` for arbitrary-sign q (Newton systems)."""
    q = _coefficient(grid, q)
    return sp.csc_matrix(-laplacian_matrix(grid) + sp.diags(q))


@dataclass(frozen=True)
class EigenResult:
    lambda1: float
    phi1: np.ndarray
    iterations: int
    residual: float


def rayleigh_quotient(grid: Grid, q, z: np.ndarray) -> float:
    """(<-Lap z, z> + <q z, z>) / <z, z>, the discrete variational functional."""
    z = grid.check(z)
    q = _coefficient(grid, q)
    return float((z @ (-apply_laplacian(grid, z)) + z @ (q * z)) / (z @ z))


def principal_eigenpair(
    grid: Grid, q=0.0, eig_tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER
) -> EigenResult:
    """Smallest eigenvalue of -Lap + q by shifted inverse power iteration.

    The shift makes -Lap + q + sigma an M-matrix, so iterates started from the
    all-ones vector stay strictly positive.  Stops once the Rayleigh quotient
    moves by less than ``eig_tol`` and the eigen-residual is below it too.
    """
    q = _coefficient(grid, q)
    if not np.all(np.isfinite(q)):
        raise PreconditionError("potential q must be finite")
    sigma = max(0.0, -float(q.min())) + 1.0
    solver = ShiftedPoisson(grid, q + sigma)
    # round-off floor of the residual for this operator norm
    opnorm = sum(4.0 / hx**2 for hx in grid.h) + float(np.abs(q).max()) + sigma
    res_tol = max(eig_tol, 8.0 * np.finfo(float).eps * opnorm)

    x = np.ones(grid.size)
    lam_old = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        y = solver.solve(x, tol=1e-13)
        x = y / np.max(np.abs(y))
        Ax = -apply_laplacian(grid, x) + q * x
        lam = float((x @ Ax) / (x @ x))
        res = float(np.max(np.abs(Ax - lam * x)))
        if abs(lam - lam_old) < eig_tol and res <= res_tol:
            if x.min() <= 0.0:
                raise SolverError("principal eigenvector lost positivity", residual=res)
            x.setflags(write=False)
            return EigenResult(lam, x, it, res)
        lam_old = lam
    raise SolverError(
        f"inverse power iteration did not converge in {max_iter} iterations",
        residual=res,
        iterations=max_iter,
    )


@lru_cache(maxsize=32)
def dirichlet_eigenpair(grid: Grid) -> EigenResult:
    """Cached principal eigenpair of -Lap alone (the discrete lambda_1)."""
    return principal_eigenpair(grid, 0.0)


def discrete_lambda1(grid: Grid) -> float:
    return dirichlet_eigenpair(grid).lambda1
