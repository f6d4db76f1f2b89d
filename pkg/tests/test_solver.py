import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from flab import reference as ref
from flab.mesh import Field, integral, make_mesh, neumann_laplacian
from flab.nonlinearity import build_two_power, pure_power
from flab.solver import (
    SolverAbort,
    SolverConfig,
    StepFailure,
    apply_diffusion,
    run,
    step_backward_euler,
)


def three_cell_oracle(u_old, nl, dt, h):
    """Backward Euler on three cells by nested bisection.

    Given the middle value c, the outer equations are monotone in their own
    unknown; total mass is then monotone in c.
    """
    k = dt / h**2
    lo, hi = u_old.min() - 1.0, u_old.max() + 1.0

    def side(c, old):
        return brentq(lambda v: v - old - k * (nl.phi(c) - nl.phi(v)), lo, hi, xtol=1e-15, rtol=1e-15)

    def excess(c):
        return side(c, u_old[0]) + c + side(c, u_old[2]) - u_old.sum()

    c = brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15)
    return np.array([side(c, u_old[0]), c, side(c, u_old[2])])


@pytest.mark.parametrize(
    "u_old, dt",
    [([0.0, 1.0, 0.2], 0.1), ([2.0, -1.0, 0.5], 0.5), ([0.1, 0.1, 3.0], 0.01)],
)
def test_newton_step_matches_three_cell_oracle(u_old, dt):
    nl = build_two_power(2.5, 1.8)
    mesh = make_mesh(1, 1.5, None, 3)
    u_old = np.asarray(u_old, dtype=float)
    cfg = SolverConfig(t_end=1.0, dt0=dt, newton_tol=1e-13)
    new, rep = step_backward_euler(Field(mesh, u_old), nl, dt, cfg)
    np.testing.assert_allclose(new.values, three_cell_oracle(u_old, nl, dt, mesh.h[0]), atol=1e-8)
    assert new.time == pytest.approx(dt)
    assert rep.final_residual <= 1e-13


def test_apply_diffusion_matches_assembled_laplacian():
    nl = pure_power(2.0)
    mesh = make_mesh(2, (1.0, 2.0), None, (6, 5))
    rng = np.random.default_rng(0)
    f = Field(mesh, rng.uniform(-1, 1, mesh.size))
    np.testing.assert_allclose(apply_diffusion(f, nl), neumann_laplacian(mesh) @ nl.phi(f.values), atol=1e-10)


def test_constant_state_is_stationary():
    mesh = make_mesh(1, 1.0, None, 16)
    s = run(Field(mesh, np.full(16, 0.7)), pure_power(2.0), SolverConfig(t_end=1.0, dt0=0.01, record_times=5))
    np.testing.assert_allclose(s.final.values, 0.7, rtol=0, atol=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, dt0=2.0)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, dt_growth=0.9)
    with pytest.raises(ValueError):
        SolverConfig(t_end=1.0, newton_tol=0.0)
    assert SolverConfig(t_end=5.0).dt_max == pytest.approx(0.05)


def test_records_land_exactly_on_requested_times():
    mesh = make_mesh(1, 1.0, None, 16)
    times = [0.013, 0.1, 0.35]
    cfg = SolverConfig(t_end=0.5, dt0=1e-3, record_times=times)
    u0 = ref.delta_like(mesh, 0.5, 0.2, 1.0)
    s = run(u0, pure_power(2.0), cfg)
    np.testing.assert_array_equal(s.t, [0.0] + times + [0.5])


def test_record_grid_starts_after_initial_time():
    cfg = SolverConfig(t_end=1.0, dt0=1e-3, record_times=10)
    grid = cfg.record_grid(0.25)
    assert grid[0] > 0.25 and grid[-1] == 1.0
    assert np.all(np.diff(grid) > 0)


def test_repeated_step_failure_aborts(monkeypatch):
    from flab import solver

    def fail(self, f, dt, tol):
        raise StepFailure("forced")

    monkeypatch.setattr(solver._Stepper, "step", fail)
    mesh = make_mesh(1, 1.0, None, 8)
    with pytest.raises(SolverAbort):
        run(Field(mesh, np.ones(8)), pure_power(2.0), SolverConfig(t_end=1.0, dt0=0.1))


random_data = st.lists(st.floats(-2.0, 2.0), min_size=12, max_size=12)


@settings(max_examples=20, deadline=None)
@given(vals=random_data, dt=st.floats(1e-4, 1.0))
def test_single_step_conserves_mass_and_respects_bounds(vals, dt):
    nl = build_two_power(2.5, 1.8)
    mesh = make_mesh(1, 1.0, None, 12)
    f = Field(mesh, vals)
    g, _ = step_backward_euler(f, nl, dt, SolverConfig(t_end=10.0, dt0=1e-4))
    assert integral(g) == pytest.approx(integral(f), abs=1e-12)
    assert g.values.max() <= f.values.max() + 1e-9
    assert g.values.min() >= f.values.min() - 1e-9


@settings(max_examples=10, deadline=None)
@given(vals=st.lists(st.floats(-1.0, 1.0), min_size=16, max_size=16))
def test_2d_step_conserves_mass(vals):
    nl = build_two_power(3.0, 2.0)
    mesh = make_mesh(2, (1.0, 1.0), None, (4, 4))
    f = Field(mesh, vals)
    g, _ = step_backward_euler(f, nl, 0.05, SolverConfig(t_end=1.0, dt0=1e-3))
    assert integral(g) == pytest.approx(integral(f), abs=1e-10)


def test_mirror_symmetry_preserved():
    mesh = make_mesh(1, 2.0, -1.0, 64)
    u0 = ref.delta_like(mesh, 0.0, 0.3, 1.0)
    s = run(u0, build_two_power(3.0, 2.0), SolverConfig(t_end=0.1, dt0=1e-4, record_times=3))
    np.testing.assert_allclose(s.final.values, s.final.values[::-1], atol=1e-12)


def test_2d_solution_independent_of_y_matches_1d():
    nl = pure_power(2.0)
    m1 = make_mesh(1, 1.0, None, 24)
    m2 = make_mesh(2, (1.0, 0.5), None, (24, 4))
    prof = 1.0 + 0.5 * np.cos(np.pi * m1.axis_centers(0))
    cfg = SolverConfig(t_end=0.05, dt0=1e-3, record_times=3)
    a = run(Field(m1, prof), nl, cfg).final.values
    b = run(Field(m2, np.repeat(prof, 4)), nl, cfg).final.grid()
    np.testing.assert_allclose(b, np.tile(a[:, None], (1, 4)), atol=1e-9)


def test_barenblatt_error_decreases_under_refinement():
    nl = pure_power(2.0)
    p = ref.make_zkb(2.0, 1, 1.0)
    errs = []
    for n in (64, 128, 256):
        mesh = make_mesh(1, 8.0, -4.0, n)
        u0 = ref.zkb_field(mesh, p, 0.05)
        cfg = SolverConfig(t_end=0.3, dt0=1e-4, dt_max=2e-3, record_times=2)
        u = run(u0, nl, cfg).final.values
        exact = ref.zkb_eval(p, mesh.centers(), 0.3)
        errs.append(np.max(np.abs(u - exact)))
    assert errs[2] < errs[1] < errs[0]


def test_keep_fields_and_meta():
    mesh = make_mesh(1, 1.0, None, 8)
    s = run(Field(mesh, np.linspace(0, 1, 8)), pure_power(2.0), SolverConfig(t_end=0.1, dt0=0.01, record_times=4), keep_fields=True)
    assert len(s.fields) == len(s)
    assert s.meta["steps"] > 0 and s.meta["newton_iters"] >= s.meta["steps"]
