"""Competition growth structure: rates (a, d), growth functions g, h and their partials."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ModelError

Fn2 = Callable[[np.ndarray, np.ndarray], np.ndarray]

THRESHOLD_CAP = 1e6
THRESHOLD_RTOL = 1e-12


@dataclass(frozen=True)
class GrowthModel:
    """Right-hand side u(a - g(u,v)), v(d - h(u,v)) of the competition system.

    All callables take and return broadcastable numpy arrays.
    """

    a: float
    d: float
    g: Fn2
    h: Fn2
    gu: Fn2
    gv: Fn2
    hu: Fn2
    hv: Fn2
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.a > 0 and self.d > 0):
            raise ModelError(f"reproduction rates must be positive, got a={self.a}, d={self.d}")
        g0 = float(self.g(np.float64(0.0), np.float64(0.0)))
        h0 = float(self.h(np.float64(0.0), np.float64(0.0)))
        if g0 != 0.0 or h0 != 0.0:
            raise ModelError(f"need g(0,0) = h(0,0) = 0, got {g0}, {h0}")

    def with_rates(self, a: float, d: float) -> GrowthModel:
        return dataclasses.replace(self, a=float(a), d=float(d))

    def mirrored(self) -> GrowthModel:
        """Swap the roles of the two species."""
        g, h, gu, gv, hu, hv = self.g, self.h, self.gu, self.gv, self.hu, self.hv
        return GrowthModel(
            a=self.d,
            d=self.a,
            g=lambda u, v: h(v, u),
            h=lambda u, v: g(v, u),
            gu=lambda u, v: hv(v, u),
            gv=lambda u, v: hu(v, u),
            hu=lambda u, v: gv(v, u),
            hv=lambda u, v: gu(v, u),
            name=f"mirrored({self.name})",
            params=dict(self.params),
        )

    def reaction(self, u, v):
        return u * (self.a - self.g(u, v)), v * (self.d - self.h(u, v))


def classical_lv(a, b, c, d, e, f) -> GrowthModel:
    """g = b u + c v, h = e u + f v.

    Competition coefficients c, e may be zero (the decoupled system).
    """
    vals = dict(a=a, b=b, c=c, d=d, e=e, f=f)
    if any(not np.isfinite(x) for x in vals.values()):
        raise ConfigurationError(f"non-finite LV parameter in {vals}")
    if min(a, b, d, f) <= 0 or min(c, e) < 0:
        raise ConfigurationError(f"LV parameters must be positive, got {vals}")
    b, c, e, f = map(float, (b, c, e, f))
    return GrowthModel(
        a=float(a),
        d=float(d),
        g=lambda u, v: b * u + c * v,
        h=lambda u, v: e * u + f * v,
        gu=lambda u, v: b + 0.0 * (u + v),
        gv=lambda u, v: c + 0.0 * (u + v),
        hu=lambda u, v: e + 0.0 * (u + v),
        hv=lambda u, v: f + 0.0 * (u + v),
        name="classical_lv",
        params=dict(b=b, c=c, e=e, f=f),
    )


def nonlinear_demo(a, d, b=1.0, c=0.1, e=0.1, f=1.0, eps=0.1) -> GrowthModel:
    """g = b u + c v + eps (u^2 + u v), h = e u + f v + eps (v^2 + u v)."""
    vals = dict(a=a, b=b, c=c, d=d, e=e, f=f, eps=eps)
    if any(not np.isfinite(x) for x in vals.values()):
        raise ConfigurationError(f"non-finite parameter in {vals}")
    if min(a, b, d, f) <= 0 or min(c, e, eps) < 0:
        raise ConfigurationError(f"nonlinear demo parameters must be positive, got {vals}")
    b, c, e, f, eps = map(float, (b, c, e, f, eps))
    return GrowthModel(
        a=float(a),
        d=float(d),
        g=lambda u, v: b * u + c * v + eps * (u * u + u * v),
        h=lambda u, v: e * u + f * v + eps * (v * v + u * v),
        gu=lambda u, v: b + eps * (2 * u + v),
        gv=lambda u, v: c + eps * u,
        hu=lambda u, v: e + eps * v,
        hv=lambda u, v: f + eps * (2 * v + u),
        name="nonlinear_demo",
        params=dict(b=b, c=c, e=e, f=f, eps=eps),
    )


MODEL_TYPES = {"classical_lv": classical_lv, "nonlinear_demo": nonlinear_demo}


def make_model(kind: str, a: float, d: float, params: dict) -> GrowthModel:
    if kind not in MODEL_TYPES:
        raise ConfigurationError(f"unknown model type {kind!r}; expected one of {sorted(MODEL_TYPES)}")
    try:
        return MODEL_TYPES[kind](a=a, d=d, **params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from None


@dataclass(frozen=True)
class Thresholds:
    k1: float
    k2: float


def _smallest_crossing(fn, target, cap, what):
    """Smallest x > 0 with fn(x) > target, to relative tolerance THRESHOLD_RTOL."""
    lo, hi = 0.0, 1.0
    while not fn(hi) > target:
        lo = hi
        if hi >= cap:
            raise ModelError(f"species has no self-limitation cap: {what} never exceeds {target} on (0, {cap:g}]")
        hi = min(2.0 * hi, cap)
    for _ in range(200):
        if hi - lo <= THRESHOLD_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            hi = mid
        else:
            lo = mid
    return hi


def compute_thresholds(m: GrowthModel, cap: float = THRESHOLD_CAP) -> Thresholds:
    """Caps k1, k2 with g(u, 0) > a for u >= k1 and h(0, v) > d for v >= k2."""
    k1 = _smallest_crossing(lambda x: float(m.g(x, 0.0)), m.a, cap, "g(u, 0)")
    k2 = _smallest_crossing(lambda x: float(m.h(0.0, x)), m.d, cap, "h(0, v)")
    return Thresholds(k1, k2)


@dataclass(frozen=True)
class DerivativeBounds:
    inf_gu: float
    inf_hv: float
    sup_gv: float
    sup_hu: float
    samples_per_axis: int


def box_lattice(t: Thresholds, samples_per_axis: int):
    U, V = np.meshgrid(
        np.linspace(0.0, t.k1, samples_per_axis),
        np.linspace(0.0, t.k2, samples_per_axis),
        indexing="ij",
    )
    return U.ravel(), V.ravel()


def derivative_bounds(m: GrowthModel, t: Thresholds, samples_per_axis: int = 256) -> DerivativeBounds:
    if samples_per_axis < 2:
        raise ConfigurationError("samples_per_axis must be >= 2")
    U, V = box_lattice(t, samples_per_axis)
    ones = np.ones_like(U)
    return DerivativeBounds(
        inf_gu=float(np.min(m.gu(U, V) * ones)),
        inf_hv=float(np.min(m.hv(U, V) * ones)),
        sup_gv=float(np.max(m.gv(U, V) * ones)),
        sup_hu=float(np.max(m.hu(U, V) * ones)),
        samples_per_axis=samples_per_axis,
    )


def coupling_bound(m: GrowthModel, t: Thresholds, samples_per_axis: int = 64) -> float:
    """Max over B of the row sums of |Jacobian| of the reaction terms."""
    U, V = box_lattice(t, samples_per_axis)
    row_u = np.abs(m.a - m.g(U, V)) + U * np.abs(m.gu(U, V)) + U * np.abs(m.gv(U, V))
    row_v = V * np.abs(m.hu(U, V)) + np.abs(m.d - m.h(U, V)) + V * np.abs(m.hv(U, V))
    return float(max(np.max(row_u), np.max(row_v)))


def validate_model(m: GrowthModel, t: Thresholds, samples_per_axis: int = 32, n_fd: int = 32, seed: int = 0) -> None:
    """Check monotonicity on B and the supplied partials against finite differences.

    Self-limitation partials must be strictly positive; competition partials
    only nonnegative so that decoupled systems remain admissible.
    """
    U, V = box_lattice(t, samples_per_axis)
    ones = np.ones_like(U)
    if np.any(m.gu(U, V) * ones <= 0) or np.any(m.hv(U, V) * ones <= 0):
        raise ModelError("g must be strictly increasing in u and h strictly increasing in v on B")
    if np.any(m.gv(U, V) * ones < 0) or np.any(m.hu(U, V) * ones < 0):
        raise ModelError("g must be nondecreasing in v and h nondecreasing in u on B")

    rng = np.random.default_rng(seed)
    pu = rng.uniform(0.0, t.k1, n_fd)
    pv = rng.uniform(0.0, t.k2, n_fd)
    step = 1e-6 * max(t.k1, t.k2, 1.0)
    checks = {
        "gu": (m.gu, (m.g(pu + step, pv) - m.g(pu - step, pv)) / (2 * step)),
        "gv": (m.gv, (m.g(pu, pv + step) - m.g(pu, pv - step)) / (2 * step)),
        "hu": (m.hu, (m.h(pu + step, pv) - m.h(pu - step, pv)) / (2 * step)),
        "hv": (m.hv, (m.h(pu, pv + step) - m.h(pu, pv - step)) / (2 * step)),
    }
    for name, (fn, fd) in checks.items():
        exact = fn(pu, pv) * np.ones(n_fd)
        scale = np.maximum(np.abs(exact), 1e-3)
        err = np.max(np.abs(exact - fd) / scale)
        if err > 1e-5:
            raise ModelError(f"partial {name} disagrees with finite differences (rel err {err:.2e})")
