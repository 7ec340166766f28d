"""Super/sub brackets, coupled monotone iteration and the linearized operator.

The two species compete, so the reaction terms are quasi-monotone
nonincreasing: u(a - g(u, v)) decreases in v and v(d - h(u, v)) decreases in u.
The monotone scheme therefore pairs an upper u with a lower v ("upper
corner") and a lower u with an upper v ("lower corner").  Each corner
sequence converges monotonically to a solution; when the two limits agree
every solution inside the brackets coincides with them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InternalError, SolverError
from .grid import Grid, apply_laplacian, laplacian_matrix
from .linops import EIG_TOL, ShiftedPoisson, discrete_lambda1, operator_matrix, principal_eigenpair
from .logistic import LOG_TOL, ScalarGrowth, Theta, solve_logistic, solve_logistic_field
from .model import GrowthModel, Thresholds, compute_thresholds, coupling_bound, derivative_bounds

SYS_TOL = 1e-8
MAX_OUTER = 10_000
NEWTON_EVERY = 8


class Start(str, Enum):
    FROM_UPPER = "upper"
    FROM_LOWER = "lower"


@dataclass(frozen=True)
class Brackets:
    """The four logistic solutions bounding every positive steady state."""

    u_upper: Theta
    u_lower: Theta
    v_upper: Theta
    v_lower: Theta
    thresholds: Thresholds

    @property
    def degraded(self) -> bool:
        """True when a lower bracket vanishes (the existence hypothesis fails)."""
        return self.u_lower.is_zero or self.v_lower.is_zero


def super_sub_pair(
    m: GrowthModel, t: Thresholds | None, grid: Grid, log_tol: float = LOG_TOL, eig_tol: float = EIG_TOL
) -> Brackets:
    t = t or compute_thresholds(m)
    a, d, k1, k2 = m.a, m.d, t.k1, t.k2
    solve = lambda fg: solve_logistic(grid, fg, log_tol=log_tol, eig_tol=eig_tol)  # noqa: E731
    return Brackets(
        u_upper=solve(ScalarGrowth(lambda z: a - m.g(z, 0.0), lambda z: -m.gu(z, 0.0), k1)),
        u_lower=solve(ScalarGrowth(lambda z: a - m.g(z, k2), lambda z: -m.gu(z, k2), k1)),
        v_upper=solve(ScalarGrowth(lambda z: d - m.h(0.0, z), lambda z: -m.hv(0.0, z), k2)),
        v_lower=solve(ScalarGrowth(lambda z: d - m.h(k1, z), lambda z: -m.hv(k1, z), k2)),
        thresholds=t,
    )


@dataclass(frozen=True)
class SteadyState:
    u: np.ndarray
    v: np.ndarray
    residual_u: float
    residual_v: float
    iterations: int
    start: Start
    a: float
    d: float
    newton_steps: int = 0

    @property
    def max_u(self) -> float:
        return float(np.max(self.u))

    @property
    def max_v(self) -> float:
        return float(np.max(self.v))


def residual(m: GrowthModel, grid: Grid, u, v):
    """(Lap u + u(a - g), Lap v + v(d - h)) on the interior nodes."""
    ru, rv = m.reaction(u, v)
    return apply_laplacian(grid, u) + ru, apply_laplacian(grid, v) + rv


class FrechetOperator:
    """Linearization at (u, v) of (u, v) -> (-Lap u - u(a - g), -Lap v - v(d - h)).

    Block form::

        [ -Lap + g + u g_u - a        u g_v           ]
        [       v h_u           -Lap + h + v h_v - d  ]

    i.e. minus the derivative of :func:`residual`.
    """

    def __init__(self, m: GrowthModel, grid: Grid, u, v):
        self.grid = grid
        ones = np.ones(grid.size)
        self.u = grid.check(u)
        self.v = grid.check(v)
        g, h = m.g(u, v), m.h(u, v)
        self.d11 = (g + u * m.gu(u, v) - m.a) * ones
        self.b12 = u * m.gv(u, v) * ones
        self.b21 = v * m.hu(u, v) * ones
        self.d22 = (h + v * m.hv(u, v) - m.d) * ones

    def apply(self, phi, psi):
        lap = apply_laplacian
        return (
            -lap(self.grid, phi) + self.d11 * phi + self.b12 * psi,
            self.b21 * phi - lap(self.grid, psi) + self.d22 * psi,
        )

    def apply_adjoint(self, phi, psi):
        lap = apply_laplacian
        return (
            -lap(self.grid, phi) + self.d11 * phi + self.b21 * psi,
            self.b12 * phi - lap(self.grid, psi) + self.d22 * psi,
        )

    def matrix(self) -> sp.csc_matrix:
        L = -laplacian_matrix(self.grid)
        return sp.csc_matrix(
            sp.bmat(
                [
                    [L + sp.diags(self.d11), sp.diags(self.b12)],
                    [sp.diags(self.b21), L + sp.diags(self.d22)],
                ]
            )
        )


def assemble_frechet_apply(m: GrowthModel, state_or_grid, u=None, v=None, grid: Grid | None = None) -> FrechetOperator:
    """Build the operator at a SteadyState (pass ``grid=``) or at explicit fields."""
    if isinstance(state_or_grid, SteadyState):
        return FrechetOperator(m, grid, state_or_grid.u, state_or_grid.v)
    return FrechetOperator(m, state_or_grid, u, v)


@dataclass(frozen=True)
class InvertibilityResult:
    condition_holds: bool
    sigma_min: float | None
    margin: float


def pointwise_condition(m: GrowthModel, t: Thresholds, u, v, samples_per_axis: int = 256):
    """Nodewise margin 4 inf g_u inf h_v u v - (sup g_v u + sup h_u v)^2."""
    db = derivative_bounds(m, t, samples_per_axis)
    return 4.0 * db.inf_gu * db.inf_hv * u * v - (db.sup_gv * u + db.sup_hu * v) ** 2


def smallest_singular_value(op: FrechetOperator, tol: float = 1e-8, max_iter: int = 200) -> float | None:
    """Inverse power iteration on A^T A; None if it does not settle."""
    try:
        lu = spla.splu(op.matrix())
    except RuntimeError:
        return 0.0
    x = np.ones(2 * op.grid.size)
    x /= np.linalg.norm(x)
    sigma_old = np.inf
    for _ in range(max_iter):
        y = lu.solve(lu.solve(x, trans="T"))
        ny = np.linalg.norm(y)
        if not np.isfinite(ny):
            return 0.0
        sigma = 1.0 / np.sqrt(ny)
        x = y / ny
        if abs(sigma - sigma_old) <= tol * sigma:
            return float(sigma)
        sigma_old = sigma
    return None


def invertibility_check(
    m: GrowthModel, t: Thresholds, state: SteadyState, grid: Grid, samples_per_axis: int = 256, with_sigma: bool = True
) -> InvertibilityResult:
    margin = pointwise_condition(m, t, state.u, state.v, samples_per_axis)
    sigma = smallest_singular_value(FrechetOperator(m, grid, state.u, state.v)) if with_sigma else None
    return InvertibilityResult(bool(np.all(margin > 0.0)), sigma, float(np.min(margin)))


# ---------------------------------------------------------------------------
# coupled monotone iteration


@dataclass
class _Corner:
    kind: Start
    u: np.ndarray
    v: np.ndarray
    iterations: int = 0
    newton_steps: int = 0
    done: bool = False
    try_newton: bool = True
    res: tuple = (np.inf, np.inf)


def frozen_partner_u(m: GrowthModel, grid: Grid, t: Thresholds, v, log_tol=LOG_TOL, eig_tol=EIG_TOL) -> Theta:
    """Largest solution of the u-equation with v held fixed."""
    return solve_logistic_field(
        grid, lambda z: m.a - m.g(z, v), lambda z: -m.gu(z, v), t.k1, log_tol=log_tol, eig_tol=eig_tol
    )


def frozen_partner_v(m: GrowthModel, grid: Grid, t: Thresholds, u, log_tol=LOG_TOL, eig_tol=EIG_TOL) -> Theta:
    """Largest solution of the v-equation with u held fixed."""
    return solve_logistic_field(
        grid, lambda z: m.d - m.h(u, z), lambda z: -m.hv(u, z), t.k2, log_tol=log_tol, eig_tol=eig_tol
    )


def corner_starts(m: GrowthModel, grid: Grid, br: Brackets, log_tol: float = LOG_TOL, eig_tol: float = EIG_TOL):
    """Starting pairs (u, v) for the upper and lower corner sequences.

    A vanishing lower bracket is replaced by the logistic solution with the
    partner species frozen at its upper bracket, which is the largest valid
    subsolution of that form and is positive exactly when the species can
    invade the partner's single-species state.
    """
    t = br.thresholds
    uu, vu = br.u_upper.field, br.v_upper.field
    vl = br.v_lower.field
    if br.v_lower.is_zero:
        vl = frozen_partner_v(m, grid, t, uu, log_tol, eig_tol).field
    ul = br.u_lower.field
    if br.u_lower.is_zero:
        ul = frozen_partner_u(m, grid, t, vu, log_tol, eig_tol).field
    return (np.array(uu), np.array(vl)), (np.array(ul), np.array(vu))


def _warm_lower(lower, warm: SteadyState | None, m: GrowthModel):
    """Tighten the lower corner with a state solved at a <= m.a, d >= m.d.

    Such a state is a sub/super pair for the new rates, and the max/min with
    the bracket corner remains one.
    """
    if warm is None or warm.a > m.a or warm.d < m.d:
        return lower
    return np.maximum(lower[0], warm.u), np.minimum(lower[1], warm.v)


class _CornerIteration:
    def __init__(self, m, grid, t, sys_tol, max_outer, accelerate):
        self.m, self.grid, self.t = m, grid, t
        self.sys_tol = sys_tol
        self.max_outer = max_outer
        self.accelerate = accelerate
        self.K = 1.05 * coupling_bound(m, t)
        self.solver = ShiftedPoisson(grid, self.K)
        self.slack = sys_tol

    def picard(self, u, v):
        ru, rv = self.m.reaction(u, v)
        return self.solver.solve(self.K * u + ru), self.solver.solve(self.K * v + rv)

    def check_step(self, c: _Corner, u_new, v_new):
        s = self.slack
        if c.kind is Start.FROM_UPPER:
            ok = np.all(u_new <= c.u + s) and np.all(v_new >= c.v - s)
        else:
            ok = np.all(u_new >= c.u - s) and np.all(v_new <= c.v + s)
        if not ok:
            raise InternalError(f"{c.kind.value}-corner iterate not monotone; coupling constant too small")
        if (
            np.any(u_new < -s)
            or np.any(v_new < -s)
            or np.any(u_new > self.t.k1 + s)
            or np.any(v_new > self.t.k2 + s)
        ):
            raise InternalError("iterate left the [0, k1] x [0, k2] envelope; coupling constant too small")

    def newton_candidate(self, u, v):
        op = FrechetOperator(self.m, self.grid, u, v)
        ru, rv = residual(self.m, self.grid, u, v)
        try:
            delta = spla.spsolve(op.matrix(), np.concatenate([ru, rv]))
        except RuntimeError:
            return None
        n = self.grid.size
        un, vn = u + delta[:n], v + delta[n:]
        if not (np.all(np.isfinite(un)) and np.all(np.isfinite(vn))):
            return None
        return un, vn

    def block_candidate(self, u, v):
        """One nonlinear block Gauss-Seidel sweep: u solved with v frozen, then v with the new u.

        Both corner types are preserved by this sweep, and its contraction is
        set by the cross-coupling rather than by K, so it escapes the slow
        exponential phase near an invasion threshold.
        """
        tol = 0.1 * self.sys_tol
        try:
            un = frozen_partner_u(self.m, self.grid, self.t, v, log_tol=tol).field
            vn = frozen_partner_v(self.m, self.grid, self.t, un, log_tol=tol).field
        except (SolverError, InternalError):
            return None
        return np.array(un), np.array(vn)

    def repair(self, c: _Corner, un, vn, rounds: int = 2):
        """Push residual signs of a Newton candidate back to the corner type.

        Cross-coupling leaves O(delta^2) residuals of the wrong sign.  Each
        offending component is corrected with its own diagonal Newton block,
        whose inverse is positive near a stable state, so the correction moves
        it in the right direction.
        """
        m, tiny = self.m, 1e-3 * self.sys_tol
        sign = 1.0 if c.kind is Start.FROM_UPPER else -1.0
        for _ in range(rounds):
            ru, rv = residual(m, self.grid, un, vn)
            bad_u = np.maximum(sign * ru, 0.0)
            bad_v = np.maximum(-sign * rv, 0.0)
            if bad_u.max() <= tiny and bad_v.max() <= tiny:
                break
            if bad_u.max() > tiny:
                q = -(m.a - m.g(un, vn) - un * m.gu(un, vn))
                un = un + sign * spla.spsolve(operator_matrix(self.grid, q), bad_u)
            if bad_v.max() > tiny:
                q = -(m.d - m.h(un, vn) - vn * m.hv(un, vn))
                vn = vn - sign * spla.spsolve(operator_matrix(self.grid, q), bad_v)
        return un, vn

    def admissible(self, c: _Corner, un, vn, other: _Corner):
        """Candidate keeps the corner type and stays between c and the other corner."""
        tiny = 1e-3 * self.sys_tol
        ru, rv = residual(self.m, self.grid, un, vn)
        if c.kind is Start.FROM_UPPER:
            return bool(
                np.all(un <= c.u + tiny)
                and np.all(un >= other.u - tiny)
                and np.all(vn >= c.v - tiny)
                and np.all(vn <= other.v + tiny)
                and np.all(ru <= tiny)
                and np.all(rv >= -tiny)
            )
        return bool(
            np.all(un >= c.u - tiny)
            and np.all(un <= other.u + tiny)
            and np.all(vn <= c.v + tiny)
            and np.all(vn >= other.v - tiny)
            and np.all(ru >= -tiny)
            and np.all(rv <= tiny)
        )

    def advance(self, c: _Corner, other: _Corner):
        u_new, v_new = self.picard(c.u, c.v)
        self.check_step(c, u_new, v_new)
        c.iterations += 1
        if self.accelerate and (c.try_newton or c.iterations % NEWTON_EVERY == 0):
            cand = self.newton_candidate(u_new, v_new)
            if cand is not None:
                cand = self.repair(c, *cand)
            c.try_newton = cand is not None and self.admissible(c, *cand, other)
            if not c.try_newton and c.iterations % NEWTON_EVERY == 0:
                cand = self.block_candidate(u_new, v_new)
                if cand is not None:
                    cand = self.repair(c, *cand)
                    if not self.admissible(c, *cand, other):
                        cand = None
            elif not c.try_newton:
                cand = None
            if cand is not None:
                u_new, v_new = cand
                c.newton_steps += 1
        step = max(np.max(np.abs(u_new - c.u)), np.max(np.abs(v_new - c.v)))
        c.u, c.v = u_new, v_new
        ru, rv = residual(self.m, self.grid, c.u, c.v)
        c.res = (float(np.max(np.abs(ru))), float(np.max(np.abs(rv))))
        c.done = step < self.sys_tol and max(c.res) <= self.sys_tol

    def check_order(self, up: _Corner, lo: _Corner):
        s = self.slack
        if np.any(lo.u > up.u + s) or np.any(up.v > lo.v + s):
            raise InternalError("corner sequences crossed; brackets are not ordered")

    def run(self, corners):
        for _ in range(self.max_outer):
            if all(c.done for c in corners):
                break
            for i, c in enumerate(corners):
                if not c.done:
                    partner = corners[1 - i] if len(corners) == 2 else _Unbounded(c)
                    self.advance(c, partner)
            if len(corners) == 2:
                self.check_order(*corners)
        else:
            if not all(c.done for c in corners):
                worst = max(max(c.res) for c in corners)
                raise SolverError(
                    f"monotone iteration did not converge in {self.max_outer} outer steps",
                    residual=worst,
                    iterations=self.max_outer,
                )

    def state(self, c: _Corner) -> SteadyState:
        u = np.clip(c.u, 0.0, None)
        v = np.clip(c.v, 0.0, None)
        ru, rv = residual(self.m, self.grid, u, v)
        for x in (u, v):
            x.setflags(write=False)
        return SteadyState(
            u, v, float(np.max(np.abs(ru))), float(np.max(np.abs(rv))), c.iterations, c.kind, self.m.a, self.m.d, c.newton_steps
        )


class _Unbounded:
    """Stand-in partner for a corner run on its own: no cross-corner bound."""

    def __init__(self, c: _Corner):
        big = np.inf
        if c.kind is Start.FROM_UPPER:
            self.u, self.v = np.full_like(c.u, -big), np.full_like(c.v, big)
        else:
            self.u, self.v = np.full_like(c.u, big), np.full_like(c.v, -big)


@dataclass(frozen=True)
class CornerPair:
    upper: SteadyState
    lower: SteadyState
    brackets: Brackets

    @property
    def corner_gap(self) -> float:
        return float(np.max(np.abs(self.upper.u - self.lower.u)) + np.max(np.abs(self.upper.v - self.lower.v)))


def solve_corners(
    m: GrowthModel,
    grid: Grid,
    brackets: Brackets | None = None,
    sys_tol: float = SYS_TOL,
    max_outer: int = MAX_OUTER,
    warm: SteadyState | None = None,
    accelerate: bool = True,
    log_tol: float = LOG_TOL,
    eig_tol: float = EIG_TOL,
) -> CornerPair:
    """Run both corner sequences in lockstep, checking the squeeze ordering every step."""
    br = brackets or super_sub_pair(m, None, grid, log_tol=log_tol, eig_tol=eig_tol)
    upper, lower = corner_starts(m, grid, br, log_tol=log_tol, eig_tol=eig_tol)
    lower = _warm_lower(lower, warm, m)
    it = _CornerIteration(m, grid, br.thresholds, sys_tol, max_outer, accelerate)
    cu = _Corner(Start.FROM_UPPER, *upper, try_newton=accelerate)
    cl = _Corner(Start.FROM_LOWER, *lower, try_newton=accelerate)
    it.check_order(cu, cl)
    it.run([cu, cl])
    return CornerPair(it.state(cu), it.state(cl), br)


def monotone_solve(
    m: GrowthModel,
    grid: Grid,
    brackets: Brackets | None = None,
    start: Start | str = Start.FROM_UPPER,
    sys_tol: float = SYS_TOL,
    max_outer: int = MAX_OUTER,
    warm: SteadyState | None = None,
    accelerate: bool = True,
) -> SteadyState:
    """Monotone limit from one bracket corner.

    ``FROM_UPPER`` starts at (upper u, lower v) and produces the solution with
    the largest u and smallest v inside the brackets; ``FROM_LOWER`` the reverse.
    """
    start = Start(start)
    br = brackets or super_sub_pair(m, None, grid)
    upper, lower = corner_starts(m, grid, br)
    if start is Start.FROM_LOWER:
        lower = _warm_lower(lower, warm, m)
    it = _CornerIteration(m, grid, br.thresholds, sys_tol, max_outer, accelerate)
    c = _Corner(start, *(upper if start is Start.FROM_UPPER else lower), try_newton=accelerate)
    it.run([c])
    return it.state(c)


def newton_refine(m: GrowthModel, grid: Grid, state: SteadyState, max_steps: int = 10) -> SteadyState:
    """Optional Newton polish of a converged state, halving the step until the residual drops."""
    u, v = np.array(state.u), np.array(state.v)

    def norm(u, v):
        ru, rv = residual(m, grid, u, v)
        return max(np.max(np.abs(ru)), np.max(np.abs(rv)))

    r = norm(u, v)
    n = grid.size
    steps = 0
    for _ in range(max_steps):
        ru, rv = residual(m, grid, u, v)
        try:
            delta = spla.spsolve(FrechetOperator(m, grid, u, v).matrix(), np.concatenate([ru, rv]))
        except RuntimeError:
            break
        lam = 1.0
        while lam > 1e-4:
            un, vn = u + lam * delta[:n], v + lam * delta[n:]
            rn = norm(un, vn)
            if rn < r:
                break
            lam *= 0.5
        else:
            break
        u, v, r = un, vn, rn
        steps += 1
    ru, rv = residual(m, grid, u, v)
    for x in (u, v):
        x.setflags(write=False)
    return SteadyState(
        u, v, float(np.max(np.abs(ru))), float(np.max(np.abs(rv))), state.iterations, state.start, state.a, state.d,
        state.newton_steps + steps,
    )


def eigen_identity(m: GrowthModel, grid: Grid, state: SteadyState):
    """(lambda_1(g(u,v) - a), lambda_1(h(u,v) - d)); both vanish at a coexistence state."""
    u, v = state.u, state.v
    ones = np.ones(grid.size)
    return (
        principal_eigenpair(grid, (m.g(u, v) - m.a) * ones).lambda1,
        principal_eigenpair(grid, (m.h(u, v) - m.d) * ones).lambda1,
    )


__all__ = [
    "Brackets",
    "CornerPair",
    "FrechetOperator",
    "InvertibilityResult",
    "Start",
    "SteadyState",
    "assemble_frechet_apply",
    "corner_starts",
    "discrete_lambda1",
    "eigen_identity",
    "invertibility_check",
    "monotone_solve",
    "newton_refine",
    "pointwise_condition",
    "residual",
    "smallest_singular_value",
    "solve_corners",
    "super_sub_pair",
]
