"""The eleven acceptance criteria, one test each, at their stated tolerances.

The terminal summary (see conftest.py) prints one PASS/FAIL line per criterion.
"""

import json
import math

import numpy as np
import pytest
from cases import DEMO_UNIQUE, LV_UNIQUE, acceptance_models
from conftest import LV_FAMILY

from rdcomp.cli import run_command
from rdcomp.coexistence import FrechetOperator, invertibility_check, monotone_solve, residual, solve_corners
from rdcomp.conditions import condition_report
from rdcomp.grid import build_grid, laplacian_matrix
from rdcomp.linops import discrete_lambda1, principal_eigenpair, rayleigh_quotient
from rdcomp.logistic import linear_growth, logistic_residual, solve_logistic
from rdcomp.model import classical_lv, compute_thresholds, nonlinear_demo
from rdcomp.parabolic import evolve, random_positive, stability_cap
from rdcomp.sweep import ModelFamily, extinction_threshold, invasion_threshold, sweep_region

CRITERIA = {
    1: "eigenvalue matches analytic, continuum and dense values",
    2: "eigenvalue shift, monotonicity and Rayleigh minimality",
    3: "logistic dichotomy and comparison",
    4: "coexistence state lies between its logistic brackets",
    5: "nonexistence for low rates, elliptic and parabolic",
    6: "corner agreement and parabolic limit where uniqueness holds",
    7: "symmetric system reduces to the scalar logistic",
    8: "linearization matches finite differences, sigma_min positive",
    9: "extinction threshold matches lambda1 and invasion rate",
    10: "existence and product conditions imply the invasion conditions",
    11: "sweep is deterministic across runs, threads and warm starts",
}


def test_c01_eigenvalue(grid, small_grid):
    h = grid.h[0]
    lam = discrete_lambda1(grid)
    assert abs(lam - 4 / h**2 * math.sin(h / 2) ** 2) <= 1e-10
    assert abs(lam - 1.0) <= 1e-3
    dense = np.linalg.eigvalsh(-laplacian_matrix(small_grid).toarray())[0]
    assert abs(principal_eigenpair(small_grid).lambda1 - dense) <= 1e-10


def test_c02_eigen_laws(grid):
    rng = np.random.default_rng(2)
    q = np.sin(2 * grid.axes[0])
    base = principal_eigenpair(grid, q).lambda1
    assert abs(principal_eigenpair(grid, q + 3.0).lambda1 - base - 3.0) <= 1e-10
    for _ in range(20):
        q1 = rng.normal(size=grid.size)
        q2 = q1 + rng.uniform(1e-3, 1.0, grid.size)
        assert principal_eigenpair(grid, q1).lambda1 < principal_eigenpair(grid, q2).lambda1
    for _ in range(100):
        z = rng.normal(size=grid.size)
        assert rayleigh_quotient(grid, q, z) >= base - 1e-12


def test_c03_logistic(grid):
    for a in (0.5, 0.99):
        th = solve_logistic(grid, linear_growth(a))
        assert th.is_zero and np.all(th.field == 0)
    for a in (1.5, 5.0):
        fg = linear_growth(a)
        th = solve_logistic(grid, fg)
        assert np.max(np.abs(logistic_residual(grid, fg, th.field))) <= 1e-9
        assert np.all(th.field > 0) and np.all(th.field < a)
    rng = np.random.default_rng(3)
    for _ in range(10):
        # f = a1 - b1 z dominates g = (a1 - da) - (b1 + db) z on z >= 0
        a1, b1 = rng.uniform(1.5, 6.0), rng.uniform(0.5, 2.0)
        da, db = rng.uniform(0.0, 0.4), rng.uniform(0.0, 1.0)
        th_f = solve_logistic(grid, linear_growth(a1, b1))
        th_g = solve_logistic(grid, linear_growth(a1 - da, b1 + db))
        assert np.all(th_g.field <= th_f.field + 1e-9)


def test_c04_sandwich(grid):
    m = classical_lv(5, 1, 0.1, 5, 0.1, 1)
    pair = solve_corners(m, grid)
    br = pair.brackets
    t = compute_thresholds(m)
    # lower brackets are the logistic states at the worst-case competitor
    assert np.max(np.abs(br.u_lower.field - solve_logistic(grid, linear_growth(5 - 0.1 * t.k2)).field)) < 1e-9
    for st in (pair.upper, pair.lower):
        assert np.all(br.u_lower.field - 1e-7 <= st.u) and np.all(st.u <= br.u_upper.field + 1e-7)
        assert np.all(br.v_lower.field - 1e-7 <= st.v) and np.all(st.v <= br.v_upper.field + 1e-7)


@pytest.mark.parametrize("a,d", [(0.5, 5.0), (5.0, 0.5), (0.5, 0.5)])
def test_c05_nonexistence(grid, a, d):
    m = classical_lv(a, 1, 0.1, d, 0.1, 1)
    st = monotone_solve(m, grid)
    rng = np.random.default_rng(5)
    ev = evolve(m, grid, random_positive(grid, rng), random_positive(grid, rng), stability_cap(m), 50.0)
    if a < 1:
        assert st.max_u < 1e-6 and np.max(ev.u_final) < 1e-4
    if d < 1:
        assert st.max_v < 1e-6 and np.max(ev.v_final) < 1e-4


UNIQUE_MODELS = [classical_lv(*p) for p in LV_UNIQUE] + [nonlinear_demo(**k) for k in DEMO_UNIQUE]


@pytest.mark.parametrize("idx", range(len(UNIQUE_MODELS)))
def test_c06_uniqueness(grid, idx):
    m = UNIQUE_MODELS[idx]
    assert condition_report(m, None, grid).holds("uniqueness_B")
    pair = solve_corners(m, grid)
    assert pair.corner_gap < 1e-6
    rng = np.random.default_rng(100 + idx)
    k = compute_thresholds(m)
    u0, v0 = random_positive(grid, rng, k.k1), random_positive(grid, rng, k.k2)
    ev = evolve(m, grid, u0, v0, stability_cap(m), 50.0)
    assert ev.clip_count == 0
    assert np.max(np.abs(ev.u_final - pair.upper.u)) < 1e-4
    assert np.max(np.abs(ev.v_final - pair.upper.v)) < 1e-4


def test_c07_symmetric(grid):
    st = monotone_solve(classical_lv(5, 1, 0.1, 5, 0.1, 1), grid)
    assert np.max(np.abs(st.u - st.v)) <= 1e-7
    theta = solve_logistic(grid, linear_growth(5.0, 1.1))
    assert np.max(np.abs(st.u - theta.field)) <= 1e-6


@pytest.mark.parametrize("m", [classical_lv(3, 1, 0.3, 4, 0.2, 1), nonlinear_demo(3.0, 4.0, c=0.2, e=0.3)])
def test_c08_frechet(grid, m):
    st = monotone_solve(m, grid)
    op = FrechetOperator(m, grid, st.u, st.v)
    rng = np.random.default_rng(8)
    eps = 1e-6
    for _ in range(10):
        phi, psi = rng.normal(size=(2, grid.size))
        au, av = op.apply(phi, psi)
        pu, pv = residual(m, grid, st.u + eps * phi, st.v + eps * psi)
        mu, mv = residual(m, grid, st.u - eps * phi, st.v - eps * psi)
        fd = -np.concatenate([pu - mu, pv - mv]) / (2 * eps)
        exact = np.concatenate([au, av])
        assert np.max(np.abs(exact - fd)) / np.max(np.abs(exact)) <= 1e-5
    inv = invertibility_check(m, compute_thresholds(m), st, grid)
    assert inv.condition_holds
    assert inv.sigma_min >= 1e-6


def test_c09_thresholds(grid):
    decoupled = ModelFamily("classical_lv", dict(b=1.0, c=0.0, e=0.0, f=1.0))
    lo, hi, steps = 0.5, 1.5, 12
    width = (hi - lo) / 2**steps
    a_star = extinction_threshold(5.0, decoupled, grid, (lo, hi), steps=steps)
    assert abs(a_star - discrete_lambda1(grid)) <= width
    a_star = extinction_threshold(5.0, LV_FAMILY, grid, (1.0, 2.0))
    assert abs(a_star - invasion_threshold(5.0, LV_FAMILY, grid)) < 1e-2


def test_c10_implication_chain(grid):
    checked = 0
    for label, m in acceptance_models():
        rep = condition_report(m, None, grid)
        if rep.holds("existence_A") and rep.holds("cor33_B"):
            assert rep.holds("perturbation_31A"), label
            checked += 1
    assert checked >= len(UNIQUE_MODELS)


def test_c11_sweep_determinism(grid, lv_sweep, tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"grid": {"kind": "interval", "n": 200}, "sweep": {"na": 10, "nd": 10}}))
    texts = []
    for threads in (1, 4):
        out = tmp_path / f"threads{threads}"
        assert run_command(["sweep", "--config", str(cfg), "--out", str(out), "--threads", str(threads)]) == 0
        texts.append((out / "region.csv").read_bytes())
    capsys.readouterr()
    assert texts[0] == texts[1] == lv_sweep.csv_text().encode()
    cold = sweep_region(lv_sweep.spec, LV_FAMILY, grid, warm_start=False)
    assert cold.classes() == lv_sweep.classes()
