import numpy as np
import pytest

from rdcomp.coexistence import residual, solve_corners
from rdcomp.errors import ConfigurationError, PreconditionError, StabilityError
from rdcomp.grid import build_grid
from rdcomp.linops import dirichlet_eigenpair
from rdcomp.logistic import linear_growth, solve_logistic
from rdcomp.model import GrowthModel, Thresholds, classical_lv
from rdcomp.parabolic import evolve, random_positive, stability_cap


def test_zero_stays_zero(grid, lv):
    m = lv()
    z = np.zeros(grid.size)
    res = evolve(m, grid, z, z, stability_cap(m), 5.0)
    assert np.all(res.u_final == 0) and np.all(res.v_final == 0)
    assert res.final_change_rate == 0.0


def test_lv_reaches_elliptic_state(grid, lv):
    m = lv()
    phi = dirichlet_eigenpair(grid).phi1
    res = evolve(m, grid, 0.1 * phi, 0.1 * phi, stability_cap(m), 50.0)
    st = solve_corners(m, grid).upper
    assert np.max(np.abs(res.u_final - st.u)) < 1e-4
    assert np.max(np.abs(res.v_final - st.v)) < 1e-4
    assert res.clip_count == 0
    assert res.t_final == pytest.approx(50.0)


def test_exclusion_limit(grid, lv):
    m = lv(a=0.5, d=5.0)
    rng = np.random.default_rng(1)
    res = evolve(m, grid, random_positive(grid, rng), random_positive(grid, rng), stability_cap(m), 50.0)
    assert np.max(res.u_final) < 1e-4
    theta = solve_logistic(grid, linear_growth(5.0))
    assert np.max(np.abs(res.v_final - theta.field)) < 1e-4


def test_dynamic_consistency(grid, lv):
    m = lv(a=3.0, d=4.0, c=0.3, e=0.2)
    rng = np.random.default_rng(2)
    res = evolve(m, grid, random_positive(grid, rng, 3.0), random_positive(grid, rng, 3.0), stability_cap(m), 50.0)
    assert res.final_change_rate < 1e-8
    ru, rv = residual(m, grid, res.u_final, res.v_final)
    assert max(np.max(np.abs(ru)), np.max(np.abs(rv))) <= 1e-6


def test_steps_fill_horizon(small_grid, lv):
    m = lv()
    res = evolve(m, small_grid, np.ones(20), np.ones(20), 0.07, 1.0)
    assert res.step_count == 15
    assert res.t_final == pytest.approx(1.0)


def test_outputs_nonnegative_and_frozen(small_grid, lv):
    m = lv()
    res = evolve(m, small_grid, np.ones(20), np.zeros(20), 0.05, 2.0)
    assert np.all(res.u_final >= 0) and np.all(res.v_final == 0)
    with pytest.raises(ValueError):
        res.u_final[0] = 1.0


def test_dt_cap(small_grid, lv):
    m = lv()
    assert stability_cap(m) == pytest.approx(1 / 12)
    with pytest.raises(ConfigurationError, match="stability cap"):
        evolve(m, small_grid, np.ones(20), np.ones(20), 0.1, 1.0)
    with pytest.raises(ConfigurationError):
        evolve(m, small_grid, np.ones(20), np.ones(20), -0.01, 1.0)
    with pytest.raises(ConfigurationError):
        evolve(m, small_grid, np.ones(20), np.ones(20), 0.01, 0.0)


def test_negative_data_rejected(small_grid, lv):
    u0 = np.ones(20)
    u0[3] = -1e-3
    with pytest.raises(PreconditionError):
        evolve(lv(), small_grid, u0, np.ones(20), 0.01, 1.0)


def test_blowup_detected(small_grid):
    # g = -u feeds growth instead of limiting it, so u runs away past 10 k1
    zero = lambda u, v: 0 * u  # noqa: E731
    grow = GrowthModel(
        a=5.0,
        d=5.0,
        g=lambda u, v: -u,
        h=lambda u, v: v + 0 * u,
        gu=lambda u, v: -1 + 0 * u,
        gv=zero,
        hu=zero,
        hv=lambda u, v: 1 + 0 * u,
    )
    with pytest.raises(StabilityError):
        evolve(grow, small_grid, np.ones(20), np.ones(20), 0.01, 20.0, t=Thresholds(1.0, 5.0))


def test_2d_evolution():
    g = build_grid("rectangle", 12)
    m = classical_lv(30, 1, 0.1, 30, 0.1, 1)
    rng = np.random.default_rng(4)
    res = evolve(m, g, random_positive(g, rng), random_positive(g, rng), stability_cap(m), 10.0)
    st = solve_corners(m, g).upper
    assert np.max(np.abs(res.u_final - st.u)) < 1e-4
