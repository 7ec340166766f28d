"""Time-dependent competition system, used as an independent check on the steady-state solvers.

Diffusion is implicit and reaction explicit::

    (I - dt Lap) u_{n+1} = u_n + dt u_n (a - g(u_n, v_n))

so a fixed point of the stepping map is exactly a discrete steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, PreconditionError, StabilityError
from .grid import Grid
from .linops import ShiftedPoisson
from .model import GrowthModel, Thresholds, compute_thresholds, coupling_bound

BLOWUP_FACTOR = 10.0


@dataclass(frozen=True)
class EvolutionResult:
    u_final: np.ndarray
    v_final: np.ndarray
    t_final: float
    step_count: int
    final_change_rate: float
    clip_count: int


def stability_cap(m: GrowthModel, t: Thresholds | None = None) -> float:
    """Largest admissible dt: 1 / (2 * max reaction slope over the state box)."""
    t = t or compute_thresholds(m)
    return 1.0 / (2.0 * coupling_bound(m, t))


def random_positive(grid: Grid, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Strictly positive random initial data with values in (0.05, 1] * scale."""
    return scale * rng.uniform(0.05, 1.0, grid.size)


def evolve(
    m: GrowthModel,
    grid: Grid,
    u0,
    v0,
    dt: float,
    T: float,
    t: Thresholds | None = None,
) -> EvolutionResult:
    """Integrate to time T with ceil(T / dt) equal steps no larger than dt.

    ``final_change_rate`` is the sup-norm change of (u, v) over the last step
    divided by the step size.
    """
    u = np.array(grid.check(u0), dtype=float)
    v = np.array(grid.check(v0), dtype=float)
    if np.any(u < 0) or np.any(v < 0):
        raise PreconditionError("initial data must be nonnegative")
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if not (T > 0 and math.isfinite(T)):
        raise ConfigurationError(f"T must be positive, got {T}")
    t = t or compute_thresholds(m)
    cap = stability_cap(m, t)
    if dt > cap:
        raise ConfigurationError(f"dt = {dt} exceeds the stability cap {cap:.6g}")

    steps = max(1, math.ceil(T / dt - 1e-12))
    tau = T / steps
    solver = ShiftedPoisson(grid, 1.0 / tau)
    clips = 0
    rate = math.inf
    for n in range(steps):
        ru, rv = m.reaction(u, v)
        u_new = solver.solve((u + tau * ru) / tau)
        v_new = solver.solve((v + tau * rv) / tau)
        for x in (u_new, v_new):
            neg = x < 0
            clips += int(np.count_nonzero(neg))
            x[neg] = 0.0
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
            raise StabilityError(f"non-finite values at step {n + 1}")
        if np.max(u_new) > BLOWUP_FACTOR * t.k1 or np.max(v_new) > BLOWUP_FACTOR * t.k2:
            raise StabilityError(f"solution exceeded {BLOWUP_FACTOR:g} x threshold at t = {(n + 1) * tau:.6g}")
        rate = max(np.max(np.abs(u_new - u)), np.max(np.abs(v_new - v))) / tau
        u, v = u_new, v_new
    for x in (u, v):
        x.setflags(write=False)
    return EvolutionResult(u, v, steps * tau, steps, float(rate), clips)
