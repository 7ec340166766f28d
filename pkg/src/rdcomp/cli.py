"""Command-line front end: ``rdcomp <command> --config run.json [--out DIR] [--threads N]``.

Every command prints one JSON line on stdout and writes its fields or tables
to the output directory.  Exit codes: 0 success, 1 generic failure,
2 nonexistence verdict (``check``), 3 configuration error, 4 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coexistence, conditions, linops, logistic, parabolic, sweep
from .errors import ConfigurationError, ModelError, PreconditionError, RdcompError, SolverError
from .grid import build_grid, write_field_csv
from .model import compute_thresholds, make_model

EXIT_OK, EXIT_FAIL, EXIT_NONEXISTENCE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3, 4

COMMANDS = ("eigen", "logistic", "solve", "check", "sweep", "evolve")


@dataclass
class GridSection:
    kind: str = "interval"
    n: int = 200
    lengths: list | float | None = None


@dataclass
class ModelSection:
    type: str = "classical_lv"
    params: dict = field(default_factory=lambda: {"b": 1.0, "c": 0.1, "e": 0.1, "f": 1.0})
    a: float = 5.0
    d: float = 5.0


@dataclass
class SolverSection:
    eig_tol: float = linops.EIG_TOL
    log_tol: float = logistic.LOG_TOL
    sys_tol: float = coexistence.SYS_TOL
    pos_tol: float = sweep.POS_TOL
    eps_ratio: float = conditions.EPS_RATIO
    max_outer: int = coexistence.MAX_OUTER
    eig_max_iter: int = linops.EIG_MAX_ITER
    log_max_iter: int = logistic.MAX_ITER
    samples_per_axis: int = 256


@dataclass
class SweepSection:
    a_min: float = 0.5
    a_max: float = 5.0
    d_min: float = 0.5
    d_max: float = 5.0
    na: int = 10
    nd: int = 10
    warm_start: bool = True


@dataclass
class EvolveSection:
    dt: float | None = None
    T: float = 50.0
    init: str = "random"
    scale: float = 1.0
    seed: int = 0


@dataclass
class LogisticSection:
    species: str = "u"
    other: float = 0.0


@dataclass
class EigenSection:
    q: float = 0.0


@dataclass
class OutputSection:
    dir: str = "."


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    model: ModelSection = field(default_factory=ModelSection)
    solver: SolverSection = field(default_factory=SolverSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    evolve: EvolveSection = field(default_factory=EvolveSection)
    logistic: LogisticSection = field(default_factory=LogisticSection)
    eigen: EigenSection = field(default_factory=EigenSection)
    output: OutputSection = field(default_factory=OutputSection)


def _section(cls, data, name):
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    return cls(**data)


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from a decoded JSON object, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    types = {f.name: f.default_factory for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - set(types))
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {', '.join(unknown)}")
    sections = {name: _section(type(factory()), data.get(name, {}), name) for name, factory in types.items()}
    cfg = RunConfig(**sections)
    _validate(cfg)
    return cfg


def _real(name, val, positive=False, optional=False):
    if optional and val is None:
        return
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigurationError(f"{name} must be a finite number, got {val!r}")
    if positive and not val > 0:
        raise ConfigurationError(f"{name} must be positive, got {val!r}")


def _integer(name, val, minimum=1):
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise ConfigurationError(f"{name} must be an integer >= {minimum}, got {val!r}")


def _validate(cfg: RunConfig) -> None:
    _integer("grid.n", cfg.grid.n, 2)
    if not isinstance(cfg.grid.kind, str):
        raise ConfigurationError("grid.kind must be a string")
    lengths = cfg.grid.lengths
    for L in lengths if isinstance(lengths, list) else [lengths]:
        _real("grid.lengths", L, positive=True, optional=True)
    _real("model.a", cfg.model.a)
    _real("model.d", cfg.model.d)
    for key, val in (cfg.model.params.items() if isinstance(cfg.model.params, dict) else []):
        _real(f"model.params.{key}", val)
    sw = cfg.sweep
    for name in ("a_min", "a_max", "d_min", "d_max"):
        _real(f"sweep.{name}", getattr(sw, name))
    _integer("sweep.na", sw.na, 2)
    _integer("sweep.nd", sw.nd, 2)
    ev = cfg.evolve
    _real("evolve.dt", ev.dt, positive=True, optional=True)
    _real("evolve.T", ev.T, positive=True)
    _real("evolve.scale", ev.scale, positive=True)
    _integer("evolve.seed", ev.seed, 0)
    _real("logistic.other", cfg.logistic.other)
    _real("eigen.q", cfg.eigen.q)
    if not isinstance(cfg.output.dir, str):
        raise ConfigurationError("output.dir must be a string")
    s = cfg.solver
    for name in ("eig_tol", "log_tol", "sys_tol", "pos_tol", "eps_ratio"):
        val = getattr(s, name)
        if not isinstance(val, (int, float)) or not (val > 0 and math.isfinite(val)):
            raise ConfigurationError(f"solver.{name} must be a positive number, got {val!r}")
    for name in ("max_outer", "eig_max_iter", "log_max_iter", "samples_per_axis"):
        val = getattr(s, name)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ConfigurationError(f"solver.{name} must be a positive integer, got {val!r}")
    if cfg.model.type not in ("classical_lv", "nonlinear_demo"):
        raise ConfigurationError(f"unknown model type {cfg.model.type!r}")
    if not isinstance(cfg.model.params, dict):
        raise ConfigurationError("model.params must be an object")
    if cfg.logistic.species not in ("u", "v"):
        raise ConfigurationError(f"logistic.species must be 'u' or 'v', got {cfg.logistic.species!r}")
    if cfg.evolve.init not in ("random", "phi1"):
        raise ConfigurationError(f"evolve.init must be 'random' or 'phi1', got {cfg.evolve.init!r}")


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(data)


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite reals to null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def emit(summary: dict) -> None:
    print(json.dumps(_clean(summary), sort_keys=True, allow_nan=False))


class _Run:
    def __init__(self, cfg: RunConfig, out: Path, threads: int):
        self.cfg, self.out, self.threads = cfg, out, threads
        g = cfg.grid
        lengths = tuple(g.lengths) if isinstance(g.lengths, list) else g.lengths
        self.grid = build_grid(g.kind, g.n, lengths)

    def model(self, a=None, d=None):
        mc = self.cfg.model
        return make_model(mc.type, mc.a if a is None else a, mc.d if d is None else d, dict(mc.params))

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def eigen(self):
        s = self.cfg.solver
        res = linops.principal_eigenpair(self.grid, self.cfg.eigen.q, eig_tol=s.eig_tol, max_iter=s.eig_max_iter)
        path = self.path("phi1.csv")
        write_field_csv(path, self.grid, res.phi1)
        emit({"lambda1": res.lambda1, "iterations": res.iterations, "residual": res.residual, "phi1_csv": str(path)})
        return EXIT_OK

    def logistic(self):
        s, lc = self.cfg.solver, self.cfg.logistic
        m = self.model()
        t = compute_thresholds(m)
        other = float(lc.other)
        if lc.species == "u":
            fg = logistic.ScalarGrowth(lambda z: m.a - m.g(z, other), lambda z: -m.gu(z, other), t.k1)
        else:
            fg = logistic.ScalarGrowth(lambda z: m.d - m.h(other, z), lambda z: -m.hv(other, z), t.k2)
        th = logistic.solve_logistic(self.grid, fg, log_tol=s.log_tol, eig_tol=s.eig_tol, max_iter=s.log_max_iter)
        path = self.path("theta.csv")
        write_field_csv(path, self.grid, th.field)
        emit(
            {
                "is_zero": th.is_zero,
                "max_theta": th.max,
                "residual": th.residual,
                "iterations": th.iterations,
                "theta_csv": str(path),
            }
        )
        return EXIT_OK

    def solve(self):
        s = self.cfg.solver
        m = self.model()
        t = compute_thresholds(m)
        br = coexistence.super_sub_pair(m, t, self.grid, log_tol=s.log_tol, eig_tol=s.eig_tol)
        pair = coexistence.solve_corners(
            m, self.grid, br, sys_tol=s.sys_tol, max_outer=s.max_outer, log_tol=s.log_tol, eig_tol=s.eig_tol
        )
        rec_state = pair.upper
        both = lambda st: st.max_u > s.pos_tol and st.max_v > s.pos_tol  # noqa: E731
        if not both(pair.upper) and both(pair.lower):
            rec_state = pair.lower
        inv = coexistence.invertibility_check(m, t, rec_state, self.grid, samples_per_axis=s.samples_per_axis)
        up, vp = self.path("u.csv"), self.path("v.csv")
        write_field_csv(up, self.grid, rec_state.u)
        write_field_csv(vp, self.grid, rec_state.v)
        emit(
            {
                "residual_u": rec_state.residual_u,
                "residual_v": rec_state.residual_v,
                "iterations": pair.upper.iterations + pair.lower.iterations,
                "corner_agreement": pair.corner_gap,
                "condition_holds": inv.condition_holds,
                "sigma_min": inv.sigma_min,
                "class": sweep.classify(rec_state.max_u, rec_state.max_v, s.pos_tol),
                "max_u": rec_state.max_u,
                "max_v": rec_state.max_v,
                "brackets_degraded": br.degraded,
                "u_csv": str(up),
                "v_csv": str(vp),
            }
        )
        return EXIT_OK

    def check(self):
        s = self.cfg.solver
        m = self.model()
        rep = conditions.condition_report(
            m,
            compute_thresholds(m),
            self.grid,
            eps_ratio=s.eps_ratio,
            log_tol=s.log_tol,
            eig_tol=s.eig_tol,
            samples_per_axis=s.samples_per_axis,
        )
        emit(rep.to_dict())
        if rep.holds("existence_A"):
            return EXIT_OK
        if rep.holds("nonexistence_C"):
            return EXIT_NONEXISTENCE
        return EXIT_FAIL

    def sweep(self):
        s, sw, mc = self.cfg.solver, self.cfg.sweep, self.cfg.model
        spec = sweep.RegionSpec(sw.a_min, sw.a_max, sw.d_min, sw.d_max, sw.na, sw.nd)
        family = sweep.ModelFamily(mc.type, dict(mc.params))
        region = sweep.sweep_region(
            spec,
            family,
            self.grid,
            threads=self.threads,
            warm_start=sw.warm_start,
            sys_tol=s.sys_tol,
            pos_tol=s.pos_tol,
            max_outer=s.max_outer,
            log_tol=s.log_tol,
            eig_tol=s.eig_tol,
        )
        path = self.path("region.csv")
        region.write_csv(path)
        emit(
            {
                "points": len(region.records),
                "counts": region.counts(),
                "failed": region.counts().get(sweep.FAILED, 0),
                "monotonicity_violations": region.monotonicity_violations(),
                "region_csv": str(path),
            }
        )
        return EXIT_OK

    def evolve(self):
        ec = self.cfg.evolve
        m = self.model()
        t = compute_thresholds(m)
        dt = parabolic.stability_cap(m, t) if ec.dt is None else ec.dt
        if ec.init == "random":
            rng = np.random.default_rng(ec.seed)
            u0 = parabolic.random_positive(self.grid, rng, ec.scale)
            v0 = parabolic.random_positive(self.grid, rng, ec.scale)
        else:
            phi = linops.dirichlet_eigenpair(self.grid).phi1
            u0 = v0 = ec.scale * np.asarray(phi)
        res = parabolic.evolve(m, self.grid, u0, v0, dt, ec.T, t)
        up, vp = self.path("u_final.csv"), self.path("v_final.csv")
        write_field_csv(up, self.grid, res.u_final)
        write_field_csv(vp, self.grid, res.v_final)
        emit(
            {
                "t_final": res.t_final,
                "final_change_rate": res.final_change_rate,
                "clip_count": res.clip_count,
                "step_count": res.step_count,
                "dt": dt,
                "max_u": float(np.max(res.u_final)),
                "max_v": float(np.max(res.v_final)),
                "u_csv": str(up),
                "v_csv": str(vp),
            }
        )
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdcomp", description="Steady states of a two-species competition system.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for sweep rows")
    return p


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.threads < 1:
            raise ConfigurationError(f"--threads must be >= 1, got {args.threads}")
        cfg = load_config(args.config)
        out = Path(args.out if args.out is not None else cfg.output.dir)
        return getattr(_Run(cfg, out, args.threads), args.command)()
    except (ConfigurationError, ModelError, PreconditionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (RdcompError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
