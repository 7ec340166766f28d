"""Numerical evaluation of the sufficient conditions for existence, uniqueness and nonexistence.

Every continuum principal eigenvalue is replaced by its discrete counterpart
on the given grid; the report records the spacing so the O(h^2) gap can be
judged.  Each condition is evaluated independently: a failure inside one
(a vanishing lower bracket, an eigen solve that does not settle) marks that
record "unevaluable" and the rest of the report is still produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coexistence import Brackets, super_sub_pair
from .errors import ConditionError, RdcompError
from .grid import Grid
from .linops import EIG_TOL, discrete_lambda1, principal_eigenpair
from .logistic import LOG_TOL, Theta
from .model import DerivativeBounds, GrowthModel, Thresholds, compute_thresholds, derivative_bounds

EPS_RATIO = 1e-3

EVALUATED = "evaluated"
UNEVALUABLE = "unevaluable"

# "strict": holds iff lhs > rhs.  "non_strict": holds iff lhs >= rhs.
# "compound": the lhs/rhs inequality plus extra hypotheses listed in ``parts``.
STRICT, NON_STRICT, COMPOUND = "strict", "non_strict", "compound"

CONDITION_NAMES = (
    "nonexistence_C",
    "existence_A",
    "uniqueness_B",
    "perturbation_31A",
    "cor33_B",
    "cor42_C",
)


def theta_ratio_sup(numer, denom, eps_ratio: float = EPS_RATIO) -> float:
    """sup of numer/denom over nodes where denom >= eps_ratio * max(denom).

    Both fields vanish on the boundary, so the cut keeps the ratio away from
    the 0/0 layer next to it.
    """
    if not eps_ratio > 0:
        raise ConditionError(f"eps_ratio must be positive, got {eps_ratio}")
    num = np.asarray(numer.field if isinstance(numer, Theta) else numer, dtype=float)
    den = np.asarray(denom.field if isinstance(denom, Theta) else denom, dtype=float)
    top = float(np.max(den)) if den.size else 0.0
    if not top > 0:
        raise ConditionError("ratio undefined: lower theta vanishes")
    keep = den >= eps_ratio * top
    return float(np.max(num[keep] / den[keep]))


@dataclass(frozen=True)
class ConditionRecord:
    name: str
    lhs: float
    rhs: float
    holds: bool
    kind: str = STRICT
    status: str = EVALUATED
    message: str = ""
    parts: dict = field(default_factory=dict)
    inputs_summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": _json_real(self.lhs),
            "rhs": _json_real(self.rhs),
            "holds": self.holds,
            "kind": self.kind,
            "status": self.status,
            "message": self.message,
            "parts": {k: _json_value(v) for k, v in self.parts.items()},
            "inputs_summary": {k: _json_value(v) for k, v in self.inputs_summary.items()},
        }


def _json_real(x):
    return float(x) if x is not None and math.isfinite(x) else None


def _json_value(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return _json_real(float(x))
    return x


@dataclass(frozen=True)
class ConditionReport:
    records: dict
    a: float
    d: float
    lambda1: float
    h: tuple
    eps_ratio: float
    samples_per_axis: int

    def __getitem__(self, name: str) -> ConditionRecord:
        return self.records[name]

    def holds(self, name: str) -> bool:
        return self.records[name].holds

    def to_dict(self) -> dict:
        out = {
            "a": self.a,
            "d": self.d,
            "lambda1": self.lambda1,
            "h": list(self.h),
            "eps_ratio": self.eps_ratio,
            "samples_per_axis": self.samples_per_axis,
            "conditions": {name: rec.to_dict() for name, rec in self.records.items()},
        }
        out.update({name: rec.holds for name, rec in self.records.items()})
        return out


def _unevaluable(name: str, exc: Exception, kind: str) -> ConditionRecord:
    return ConditionRecord(name, math.nan, math.nan, False, kind=kind, status=UNEVALUABLE, message=str(exc))


class _Evaluator:
    """Lazily shared ingredients: brackets, derivative bounds and ratio sups."""

    def __init__(self, m, t, grid, log_tol, eig_tol, eps_ratio, samples_per_axis):
        self.m, self.t, self.grid = m, t, grid
        self.log_tol, self.eig_tol = log_tol, eig_tol
        self.eps_ratio = eps_ratio
        self.samples_per_axis = samples_per_axis
        self.lam1 = discrete_lambda1(grid)
        self._brackets: Brackets | None = None
        self._bounds: DerivativeBounds | None = None

    @property
    def brackets(self) -> Brackets:
        if self._brackets is None:
            self._brackets = super_sub_pair(self.m, self.t, self.grid, log_tol=self.log_tol, eig_tol=self.eig_tol)
        return self._brackets

    @property
    def bounds(self) -> DerivativeBounds:
        if self._bounds is None:
            self._bounds = derivative_bounds(self.m, self.t, self.samples_per_axis)
        return self._bounds

    def ratios(self):
        """(sup u_upper / v_lower, sup v_upper / u_lower)."""
        br = self.brackets
        return (
            theta_ratio_sup(br.u_upper, br.v_lower, self.eps_ratio),
            theta_ratio_sup(br.v_upper, br.u_lower, self.eps_ratio),
        )

    def nonexistence_C(self) -> ConditionRecord:
        m, lam = self.m, self.lam1
        lhs, rhs = lam, min(m.a, m.d)
        return ConditionRecord(
            "nonexistence_C",
            lhs,
            rhs,
            bool(lhs >= rhs),
            kind=NON_STRICT,
            inputs_summary={"a": m.a, "d": m.d, "lambda1": lam},
        )

    def existence_A(self) -> ConditionRecord:
        m, t, lam = self.m, self.t, self.lam1
        g0k2 = float(m.g(0.0, t.k2))
        hk10 = float(m.h(t.k1, 0.0))
        margin_u = m.a - (lam + g0k2)
        margin_v = m.d - (lam + hk10)
        lhs = min(margin_u, margin_v)
        return ConditionRecord(
            "existence_A",
            lhs,
            0.0,
            bool(lhs > 0.0),
            parts={"margin_u": margin_u, "margin_v": margin_v},
            inputs_summary={"a": m.a, "d": m.d, "lambda1": lam, "g(0,k2)": g0k2, "h(k1,0)": hk10, "k1": t.k1, "k2": t.k2},
        )

    def uniqueness_B(self, existence: ConditionRecord) -> ConditionRecord:
        db = self.bounds
        r1, r2 = self.ratios()
        lhs = 4.0 * db.inf_gu * db.inf_hv
        rhs = r1 * db.sup_gv**2 + r2 * db.sup_hu**2 + 2.0 * db.sup_gv * db.sup_hu
        return ConditionRecord(
            "uniqueness_B",
            lhs,
            rhs,
            bool(existence.holds and lhs > rhs),
            kind=COMPOUND,
            parts={"existence_A": existence.holds, "inequality": bool(lhs > rhs)},
            inputs_summary=self._bounds_summary(r1, r2),
        )

    def perturbation_31A(self) -> ConditionRecord:
        m, br, grid = self.m, self.brackets, self.grid
        ones = np.ones(grid.size)
        lam_u = principal_eigenpair(grid, m.g(0.0, br.v_upper.field) * ones, eig_tol=self.eig_tol).lambda1
        lam_v = principal_eigenpair(grid, m.h(br.u_upper.field, 0.0) * ones, eig_tol=self.eig_tol).lambda1
        margin_u, margin_v = m.a - lam_u, m.d - lam_v
        lhs = min(margin_u, margin_v)
        return ConditionRecord(
            "perturbation_31A",
            lhs,
            0.0,
            bool(lhs > 0.0),
            parts={"margin_u": margin_u, "margin_v": margin_v},
            inputs_summary={"a": m.a, "d": m.d, "lambda1_g0v": lam_u, "lambda1_hu0": lam_v},
        )

    def cor33_B(self) -> ConditionRecord:
        db = self.bounds
        r1, r2 = self.ratios()
        lhs = 4.0 * db.inf_gu * db.inf_hv
        rhs = (db.sup_gv + db.sup_hu * r2) * (db.sup_gv * r1 + db.sup_hu)
        return ConditionRecord("cor33_B", lhs, rhs, bool(lhs > rhs), inputs_summary=self._bounds_summary(r1, r2))

    def cor42_C(self, existence: ConditionRecord, cor33: ConditionRecord) -> ConditionRecord:
        if cor33.status == UNEVALUABLE:
            raise ConditionError(f"depends on cor33_B: {cor33.message}")
        m, t = self.m, self.t
        sign_u = m.a - float(m.g(t.k1, 0.0))
        sign_v = m.d - float(m.h(0.0, t.k2))
        holds = existence.holds and sign_u < 0 and sign_v < 0 and cor33.holds
        return ConditionRecord(
            "cor42_C",
            cor33.lhs,
            cor33.rhs,
            bool(holds),
            kind=COMPOUND,
            parts={
                "existence_A": existence.holds,
                "a-g(k1,0)": sign_u,
                "d-h(0,k2)": sign_v,
                "inequality": cor33.holds,
            },
            inputs_summary=dict(cor33.inputs_summary),
        )

    def _bounds_summary(self, r1, r2) -> dict:
        db = self.bounds
        return {
            "inf_gu": db.inf_gu,
            "inf_hv": db.inf_hv,
            "sup_gv": db.sup_gv,
            "sup_hu": db.sup_hu,
            "ratio_u_upper_v_lower": r1,
            "ratio_v_upper_u_lower": r2,
            "eps_ratio": self.eps_ratio,
        }


def condition_report(
    m: GrowthModel,
    t: Thresholds | None,
    grid: Grid,
    eps_ratio: float = EPS_RATIO,
    log_tol: float = LOG_TOL,
    eig_tol: float = EIG_TOL,
    samples_per_axis: int = 256,
) -> ConditionReport:
    """Evaluate all six conditions at the model's rates (a, d)."""
    t = t or compute_thresholds(m)
    ev = _Evaluator(m, t, grid, log_tol, eig_tol, eps_ratio, samples_per_axis)
    records = {}

    def run(name, kind, fn, *args):
        try:
            records[name] = fn(*args)
        except RdcompError as exc:
            records[name] = _unevaluable(name, exc, kind)
        return records[name]

    run("nonexistence_C", NON_STRICT, ev.nonexistence_C)
    existence = run("existence_A", STRICT, ev.existence_A)
    run("uniqueness_B", COMPOUND, ev.uniqueness_B, existence)
    run("perturbation_31A", STRICT, ev.perturbation_31A)
    cor33 = run("cor33_B", STRICT, ev.cor33_B)
    run("cor42_C", COMPOUND, ev.cor42_C, existence, cor33)
    return ConditionReport(records, m.a, m.d, ev.lam1, grid.h, eps_ratio, samples_per_axis)
