"""Coexistence/extinction map over a rectangle of reproduction rates (a, d).

Each d-row is swept left to right.  The coexistence state found at one point
is handed to the next as a warm start, which is valid because raising a
(with d fixed) turns a solution into a lower-corner pair for the new rates.
Rows are independent and may run on a thread pool; the map is assembled in
(d, a) order so its CSV is identical whatever the completion order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coexistence import SYS_TOL, SteadyState, invertibility_check, solve_corners
from .errors import BracketError, ConfigurationError, RdcompError
from .grid import Grid
from .linops import principal_eigenpair
from .logistic import ScalarGrowth, solve_logistic
from .model import GrowthModel, compute_thresholds, make_model

POS_TOL = 1e-6
MIN_BISECTION_STEPS = 10

COEXIST = "Coexist"
EXTINCT_U = "ExtinctU"
EXTINCT_V = "ExtinctV"
EXTINCT_BOTH = "ExtinctBoth"
FAILED = "Failed"

CSV_HEADER = ("a", "d", "class", "max_u", "max_v", "corner_gap", "condition_holds", "iterations")


@dataclass(frozen=True)
class RegionSpec:
    a_min: float
    a_max: float
    d_min: float
    d_max: float
    na: int
    nd: int

    def __post_init__(self):
        if not (self.a_min < self.a_max and self.d_min < self.d_max):
            raise ConfigurationError(f"empty rate rectangle: {self}")
        if self.na < 2 or self.nd < 2:
            raise ConfigurationError(f"need at least 2 points per axis, got na={self.na}, nd={self.nd}")

    def a_values(self) -> np.ndarray:
        return np.linspace(self.a_min, self.a_max, self.na)

    def d_values(self) -> np.ndarray:
        return np.linspace(self.d_min, self.d_max, self.nd)


@dataclass(frozen=True)
class ModelFamily:
    """A model type with fixed shape parameters; calling it fixes the rates."""

    kind: str
    params: dict = field(default_factory=dict)

    def __call__(self, a: float, d: float) -> GrowthModel:
        return make_model(self.kind, a, d, dict(self.params))


@dataclass(frozen=True)
class PointRecord:
    a: float
    d: float
    cls: str
    max_u: float
    max_v: float
    corner_gap: float
    condition_holds: bool
    iterations: int
    sigma_min: float | None = None
    message: str = ""
    state: SteadyState | None = field(default=None, compare=False, repr=False)

    def csv_row(self) -> list[str]:
        return [
            _fmt(self.a),
            _fmt(self.d),
            self.cls,
            _fmt(self.max_u),
            _fmt(self.max_v),
            _fmt(self.corner_gap),
            "true" if self.condition_holds else "false",
            str(self.iterations),
        ]


def _fmt(x: float) -> str:
    return "nan" if x is None or math.isnan(x) else f"{x:.17g}"


def classify(max_u: float, max_v: float, pos_tol: float = POS_TOL) -> str:
    u_alive, v_alive = max_u > pos_tol, max_v > pos_tol
    if u_alive and v_alive:
        return COEXIST
    if v_alive:
        return EXTINCT_U
    if u_alive:
        return EXTINCT_V
    return EXTINCT_BOTH


def classify_point(
    m: GrowthModel,
    grid: Grid,
    warm: SteadyState | None = None,
    sys_tol: float = SYS_TOL,
    pos_tol: float = POS_TOL,
    with_sigma: bool = True,
    **solve_kw,
) -> PointRecord:
    """Run both corner sequences at (m.a, m.d) and classify the outcome.

    The reported state is the upper-corner limit unless only the lower-corner
    limit has both species present, in which case that one is reported; the
    class follows the reported state.  Solver failures give a ``Failed``
    record instead of an exception.
    """
    try:
        pair = solve_corners(m, grid, sys_tol=sys_tol, warm=warm, **solve_kw)
    except RdcompError as exc:
        nan = math.nan
        return PointRecord(m.a, m.d, FAILED, nan, nan, nan, False, 0, None, f"{type(exc).__name__}: {exc}")
    up, lo = pair.upper, pair.lower
    state = up
    if classify(up.max_u, up.max_v, pos_tol) != COEXIST and classify(lo.max_u, lo.max_v, pos_tol) == COEXIST:
        state = lo
    cls = classify(state.max_u, state.max_v, pos_tol)
    holds, sigma = False, None
    if cls == COEXIST:
        inv = invertibility_check(m, pair.brackets.thresholds, state, grid, with_sigma=with_sigma)
        holds, sigma = inv.condition_holds, inv.sigma_min
    return PointRecord(
        m.a,
        m.d,
        cls,
        state.max_u,
        state.max_v,
        pair.corner_gap,
        holds,
        up.iterations + lo.iterations,
        sigma,
        state=state,
    )


@dataclass(frozen=True)
class RegionMap:
    spec: RegionSpec
    records: tuple

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in self.records:
            w.writerow(rec.csv_row())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def classes(self) -> list[str]:
        return [r.cls for r in self.records]

    def row(self, d: float) -> list[PointRecord]:
        return [r for r in self.records if r.d == d]

    def counts(self) -> dict:
        out: dict = {}
        for r in self.records:
            out[r.cls] = out.get(r.cls, 0) + 1
        return dict(sorted(out.items()))

    def monotonicity_violations(self) -> list[tuple[float, float]]:
        """(a, d) points classed ExtinctU after Coexist was reached in the same row."""
        bad = []
        for d in self.spec.d_values():
            seen = False
            for r in self.row(float(d)):
                seen = seen or r.cls == COEXIST
                if seen and r.cls == EXTINCT_U:
                    bad.append((r.a, r.d))
        return bad


def _sweep_row(family, grid, d, a_values, warm_start, point_kw) -> list[PointRecord]:
    records, warm = [], None
    for a in a_values:
        rec = classify_point(family(float(a), float(d)), grid, warm=warm if warm_start else None, **point_kw)
        records.append(rec)
        warm = rec.state if rec.cls == COEXIST else None
    return records


def sweep_region(
    spec: RegionSpec,
    family,
    grid: Grid,
    threads: int = 1,
    warm_start: bool = True,
    **point_kw,
) -> RegionMap:
    """Classify every (a, d) on the region lattice; rows sorted by (d, a)."""
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")
    a_values = [float(a) for a in spec.a_values()]
    d_values = [float(d) for d in spec.d_values()]

    def task(d):
        return _sweep_row(family, grid, d, a_values, warm_start, point_kw)

    if threads == 1:
        rows = [task(d) for d in d_values]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(task, d_values))
    return RegionMap(spec, tuple(rec for row in rows for rec in row))


def extinction_threshold(
    d: float,
    family,
    grid: Grid,
    bracket: tuple[float, float],
    steps: int = 16,
    **point_kw,
) -> float:
    """Bisect in a for the ExtinctU -> Coexist transition at fixed d.

    Returns the midpoint of the final bracket, whose half-width is
    ``(a_hi - a_lo) / 2**(steps + 1)``.
    """
    if steps < MIN_BISECTION_STEPS:
        raise ConfigurationError(f"need at least {MIN_BISECTION_STEPS} bisection steps, got {steps}")
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError(f"bracket must satisfy a_lo < a_hi, got {bracket}")

    def cls(a):
        return classify_point(family(a, d), grid, with_sigma=False, **point_kw).cls

    c_lo, c_hi = cls(lo), cls(hi)
    if c_lo != EXTINCT_U or c_hi != COEXIST:
        raise BracketError(f"bracket ({lo}, {hi}) does not straddle ExtinctU -> Coexist (got {c_lo}, {c_hi})")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        c = cls(mid)
        if c == COEXIST:
            hi = mid
        elif c == EXTINCT_U:
            lo = mid
        else:
            raise BracketError(f"unexpected class {c} at a={mid} while bisecting")
    return 0.5 * (lo + hi)


def invasion_threshold(d: float, family, grid: Grid, a_probe: float = 1.0) -> float:
    """lambda_1(g(0, theta_v)) with theta_v the single-species state of v.

    The rate a at which u can invade v alone.  It does not depend on a, so
    the model is built at ``a_probe`` only to fix its shape.
    """
    m = family(a_probe, d)
    k2 = compute_thresholds(m).k2
    theta_v = solve_logistic(grid, ScalarGrowth(lambda z: m.d - m.h(0.0, z), lambda z: -m.hv(0.0, z), k2))
    return principal_eigenpair(grid, m.g(0.0, theta_v.field) * np.ones(grid.size)).lambda1
