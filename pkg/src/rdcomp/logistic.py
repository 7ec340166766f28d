"""Positive solutions of the scalar logistic problem Lap z + z f(z) = 0, z = 0 on the boundary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, InternalError, SolverError
from .grid import Grid, apply_laplacian
from .linops import EIG_TOL, ShiftedPoisson, discrete_lambda1, operator_matrix, principal_eigenpair

LOG_TOL = 1e-9
MAX_ITER = 200_000
NEWTON_EVERY = 8


@dataclass(frozen=True)
class ScalarGrowth:
    """Per-capita growth f with derivative f_prime and a cap c0 where f(c0) <= 0."""

    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]
    c0: float

    def __post_init__(self):
        if not self.c0 > 0:
            raise ConfigurationError(f"cap c0 must be positive, got {self.c0}")
        if float(self.f(np.float64(self.c0))) > 0:
            raise ConfigurationError("f(c0) must be <= 0")
        z = np.linspace(0.0, self.c0, 257)
        fz = self.f(z) * np.ones_like(z)
        if np.any(np.diff(fz) >= 0):
            raise ConfigurationError("f must be strictly decreasing on [0, c0]")

    def source(self, z):
        return z * self.f(z)

    def source_prime(self, z):
        return self.f(z) + z * self.f_prime(z)


def linear_growth(a: float, b: float = 1.0, c0: float | None = None) -> ScalarGrowth:
    """f(z) = a - b z."""
    if c0 is None:
        c0 = a / b if a > 0 else 1.0
        while a - b * c0 > 0:  # round-off in a / b
            c0 = float(np.nextafter(c0, np.inf))
    return ScalarGrowth(lambda z: a - b * z, lambda z: -b + 0.0 * z, c0)


@dataclass(frozen=True)
class Theta:
    field: np.ndarray
    is_zero: bool
    residual: float
    iterations: int

    @property
    def max(self) -> float:
        return float(np.max(self.field))


def logistic_residual(grid: Grid, fg: ScalarGrowth, z: np.ndarray) -> np.ndarray:
    return apply_laplacian(grid, z) + fg.source(z)


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


def zero_theta(grid: Grid) -> Theta:
    return Theta(_frozen(np.zeros(grid.size)), True, 0.0, 0)


def solve_logistic(
    grid: Grid,
    fg: ScalarGrowth,
    log_tol: float = LOG_TOL,
    eig_tol: float = EIG_TOL,
    max_iter: int = MAX_ITER,
    accelerate: bool = True,
) -> Theta:
    """Monotone iteration downward from the constant supersolution c0.

    ``z <- (-Lap + K)^{-1} (K z + z f(z))`` with K above the Lipschitz constant
    of z f(z) on [0, c0], so every iterate is a supersolution below the last.
    With ``accelerate`` a Newton candidate is tried periodically and kept only
    if it is itself a supersolution lying between 0 and the current iterate,
    which preserves the monotone sequence while removing the slow
    contraction near f(0) = lambda_1.

    Returns the zero solution when f(0) <= lambda_1 (ties within ``eig_tol``
    count as zero).
    """
    lam1 = discrete_lambda1(grid)
    if float(fg.f(np.float64(0.0))) < lam1 + eig_tol:
        return zero_theta(grid)
    zs = np.linspace(0.0, fg.c0, 1024)
    K = 1.05 * float(np.max(np.abs(fg.source_prime(zs))))
    return _descend(grid, fg.source, fg.source_prime, fg.c0, K, log_tol, max_iter, accelerate)


def solve_logistic_field(
    grid: Grid,
    f: Callable[[np.ndarray], np.ndarray],
    f_prime: Callable[[np.ndarray], np.ndarray],
    c0: float,
    log_tol: float = LOG_TOL,
    eig_tol: float = EIG_TOL,
    max_iter: int = MAX_ITER,
    accelerate: bool = True,
) -> Theta:
    """Logistic problem whose growth also depends on position.

    ``f`` maps a field z to the field f(x, z(x)); it must be decreasing in z
    with f(x, c0) <= 0 at every node.  A positive solution exists exactly when
    lambda_1(-f(., 0)) < 0.
    """
    zero = np.zeros(grid.size)
    if principal_eigenpair(grid, -f(zero), eig_tol=eig_tol).lambda1 > -eig_tol:
        return zero_theta(grid)
    ones = np.ones(grid.size)
    K = 1.05 * max(
        float(np.max(np.abs(f(z * ones) + z * ones * f_prime(z * ones))))
        for z in np.linspace(0.0, c0, 1024)
    )
    return _descend(
        grid, lambda z: z * f(z), lambda z: f(z) + z * f_prime(z), c0, K, log_tol, max_iter, accelerate
    )


def _descend(grid, source, source_prime, c0, K, log_tol, max_iter, accelerate):
    solver = ShiftedPoisson(grid, K)
    lap = operator_matrix(grid, 0.0) if accelerate else None
    slack = log_tol

    def resid(z):
        return apply_laplacian(grid, z) + source(z)

    z = np.full(grid.size, float(c0))
    try_newton = accelerate
    step = res = np.inf
    for it in range(1, max_iter + 1):
        z_new = solver.solve(K * z + source(z))
        if np.any(z_new > z + slack):
            raise InternalError(f"logistic iterate increased by {np.max(z_new - z):.3e}; coupling constant too small")
        if np.any(z_new < -slack) or np.any(z_new > c0 + slack):
            raise InternalError("logistic iterate left [0, c0]; coupling constant too small")

        if accelerate and (try_newton or it % NEWTON_EVERY == 0):
            cand = _newton_candidate(lap, source_prime, resid, z_new)
            try_newton = cand is not None and _is_lower_super(resid, cand, z_new, log_tol)
            if try_newton:
                z_new = cand

        step = float(np.max(np.abs(z_new - z)))
        z = z_new
        res = float(np.max(np.abs(resid(z))))
        if step < log_tol and res <= log_tol:
            z = np.clip(z, 0.0, c0)
            if np.any(z <= 0.0):
                raise SolverError("logistic limit is not strictly positive", residual=res, iterations=it)
            return Theta(_frozen(z), False, res, it)
    raise SolverError(
        f"logistic iteration did not converge in {max_iter} steps (last step {step:.2e})",
        residual=res,
        iterations=max_iter,
    )


def _newton_candidate(lap, source_prime, resid, z):
    jac = lap - sp.diags(source_prime(z))
    try:
        dz = spla.spsolve(sp.csc_matrix(jac), resid(z))
    except RuntimeError:
        return None
    cand = z + dz
    return cand if np.all(np.isfinite(cand)) else None


def _is_lower_super(resid, cand, z, log_tol):
    """cand is a supersolution with 0 <= cand <= z (up to round-off)."""
    tiny = 1e-3 * log_tol
    if np.any(cand < -tiny) or np.any(cand > z + tiny):
        return False
    return bool(np.all(resid(cand) <= tiny))
