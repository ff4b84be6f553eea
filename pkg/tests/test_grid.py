from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qcfd.grid import (
    BlowUpError,
    Boundary,
    BurgersConfig,
    Field,
    GridSpec,
    StabilityError,
    derivative_matrices,
    fdm_rhs,
    fdm_solve,
    fdm_step,
    n_steps,
    snapshot_steps,
    stability_bound,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_gridspec_basics():
    spec = GridSpec(3)
    assert spec.N == 8
    assert spec.dx == pytest.approx(0.125)
    np.testing.assert_allclose(spec.x, np.arange(8) / 8)
    assert spec.bc_values is None


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_gridspec_rejects_bad_L(bad):
    with pytest.raises(ValueError):
        GridSpec(bad)


def test_gridspec_boundary_values():
    assert GridSpec(3, boundary="dirichlet").bc_values == (0.0, 0.0)
    with pytest.raises(ValueError):
        GridSpec(3, bc_values=(1.0, 2.0))


def test_field_is_read_only_and_sized():
    spec = GridSpec(2)
    f = Field(spec, [1, 2, 3, 4])
    with pytest.raises(ValueError):
        f.values[0] = 5.0
    with pytest.raises(ValueError):
        Field(spec, [1.0, 2.0])


def test_d1_row_zero_small_grid():
    d1, d2 = derivative_matrices(GridSpec(2))
    np.testing.assert_array_equal(d1[0], [0.0, 2.0, 0.0, -2.0])
    np.testing.assert_array_equal(d2[0], [-32.0, 16.0, 0.0, 16.0])


@pytest.mark.parametrize("L", range(1, 8))
def test_periodic_symmetries(L):
    d1, d2 = derivative_matrices(GridSpec(L))
    np.testing.assert_array_equal(d1.T, -d1)
    np.testing.assert_array_equal(d2.T, d2)
    np.testing.assert_allclose(d2.sum(axis=1), 0.0, atol=1e-9)
    ones = np.ones(2**L)
    np.testing.assert_allclose(d1 @ ones, 0.0, atol=1e-12)
    np.testing.assert_allclose(d2 @ ones, 0.0, atol=1e-9)


def test_dirichlet_drops_wrap_entries():
    d1, d2 = derivative_matrices(GridSpec(3, boundary=Boundary.DIRICHLET))
    assert d1[0, -1] == 0 and d1[-1, 0] == 0
    assert d2[0, -1] == 0 and d2[-1, 0] == 0


def test_first_derivative_second_order():
    errors = []
    for L in (6, 7):
        spec = GridSpec(L)
        d1, _ = derivative_matrices(spec)
        x = spec.x
        errors.append(np.max(np.abs(d1 @ np.sin(2 * np.pi * x) - 2 * np.pi * np.cos(2 * np.pi * x))))
    assert errors[0] < 5e-2
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.02)


def test_stability_bound_formula():
    spec = GridSpec(8)
    dx = 1 / 256
    assert stability_bound(spec, 0.05, 1.0) == pytest.approx(min(dx**2 / 0.1, dx))
    assert stability_bound(spec, 0.0, 0.0) == pytest.approx(dx / 1e-12)


def test_default_experiment_is_admissible():
    cfg = BurgersConfig(GridSpec(8), nu=0.05, dt=1e-4, t_final=0.2)
    assert cfg.n_steps == 2000


def test_unstable_dt_rejected_unless_overridden():
    spec = GridSpec(8)
    with pytest.raises(StabilityError):
        BurgersConfig(spec, nu=0.05, dt=1e-3, t_final=0.1)
    BurgersConfig(spec, nu=0.05, dt=1e-3, t_final=0.1, allow_unstable=True)
    u = BurgersConfig(spec, 0.05, 1e-4, 0.0).initial_field()
    with pytest.raises(StabilityError):
        fdm_step(u, 0.05, 1e-3)


@pytest.mark.parametrize(
    "kwargs",
    [dict(nu=-1.0, dt=1e-4, t_final=1.0), dict(nu=0.1, dt=0.0, t_final=1.0), dict(nu=0.1, dt=1e-4, t_final=-1.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BurgersConfig(GridSpec(4), **kwargs)


def test_initial_conditions():
    spec = GridSpec(4)
    x = spec.x
    np.testing.assert_allclose(BurgersConfig(spec, 0.1, 1e-4, 0).initial_field().values, np.sin(2 * np.pi * x))
    neg = BurgersConfig(spec, 0.1, 1e-4, 0, initial_condition="neg_sin_half").initial_field()
    np.testing.assert_allclose(neg.values, -np.sin(np.pi * x))
    custom = np.linspace(0, 1, 16)
    np.testing.assert_array_equal(BurgersConfig(spec, 0.1, 1e-4, 0, initial_condition=custom).initial_field().values, custom)
    with pytest.raises(ValueError):
        BurgersConfig(spec, 0.1, 1e-4, 0, initial_condition="cos")


@pytest.mark.parametrize("t_final,dt,expected", [(0.2, 1e-4, 2000), (0.0, 1e-3, 0), (0.15, 0.1, 2), (1e-3, 1e-3, 1)])
def test_n_steps(t_final, dt, expected):
    assert n_steps(t_final, dt) == expected


def test_snapshot_steps():
    assert snapshot_steps(2000) == list(range(0, 2001, 20))
    assert snapshot_steps(5) == [0, 1, 2, 3, 4, 5]
    assert snapshot_steps(10, 4) == [0, 4, 8, 10]
    assert snapshot_steps(0) == [0]


def test_zero_and_constant_fixed_points():
    spec = GridSpec(5)
    zero = Field(spec, np.zeros(spec.N))
    np.testing.assert_array_equal(fdm_step(zero, 0.1, 1e-4).values, 0.0)
    const = Field(spec, np.full(spec.N, 0.7))
    np.testing.assert_allclose(fdm_step(const, 0.1, 1e-4).values, 0.7, atol=1e-14)


def test_inviscid_step_matches_hand_computation():
    spec = GridSpec(3)
    x = spec.x
    u = np.sin(2 * np.pi * x)
    dt = 1e-3
    dudx = (np.roll(u, -1) - np.roll(u, 1)) / (2 * spec.dx)
    expected = u - dt * u * dudx
    got = fdm_step(Field(spec, u), 0.0, dt).values
    np.testing.assert_allclose(got, expected, atol=1e-14, rtol=0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, 16, elements=finite), st.floats(0, 1), st.floats(1e-6, 1e-4))
def test_step_is_deterministic_and_matches_rhs(values, nu, dt):
    spec = GridSpec(4)
    u = Field(spec, values)
    a = fdm_step(u, nu, dt, allow_unstable=True)
    b = fdm_step(u, nu, dt, allow_unstable=True)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.values, values + dt * fdm_rhs(u, nu))


def test_dirichlet_step_pins_boundary():
    spec = GridSpec(4, boundary="dirichlet", bc_values=(0.3, -0.2))
    cfg = BurgersConfig(spec, 0.05, 1e-4, 0.01, initial_condition=np.linspace(0.3, -0.2, 16))
    final, _ = fdm_solve(cfg)
    assert final.values[0] == 0.3
    assert np.all(np.isfinite(final.values))


def test_zero_time_returns_initial_condition():
    cfg = BurgersConfig(GridSpec(6), 0.05, 1e-4, 0.0)
    final, snaps = fdm_solve(cfg)
    np.testing.assert_array_equal(final.values, cfg.initial_field().values)
    assert len(snaps) == 1


def test_viscous_energy_non_increasing():
    cfg = BurgersConfig(GridSpec(8), 0.05, 1e-4, 0.2, snapshot_stride=1)
    final, snaps = fdm_solve(cfg)
    energies = np.array([s.norm() for s in snaps])
    assert len(snaps) == 2001
    assert np.all(np.diff(energies) <= 1e-12)
    assert final.norm() < cfg.initial_field().norm()


def test_refinement_self_consistency():
    coarse, _ = fdm_solve(BurgersConfig(GridSpec(7), 0.05, 1e-4, 0.2))
    fine, _ = fdm_solve(BurgersConfig(GridSpec(8), 0.05, 1e-4, 0.2))
    assert np.mean((coarse.values - fine.values[::2]) ** 2) <= 1e-4


def test_spatial_convergence_order():
    nu, dt, t_final = 0.1, 2e-6, 0.05
    ref, _ = fdm_solve(BurgersConfig(GridSpec(9), nu, dt, t_final))
    errors = []
    for L in (5, 6):
        u, _ = fdm_solve(BurgersConfig(GridSpec(L), nu, dt, t_final))
        errors.append(np.max(np.abs(u.values - ref.values[:: 2 ** (9 - L)])))
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_blow_up_detected():
    spec = GridSpec(5)
    cfg = BurgersConfig(spec, 1.0, 0.01, 10.0, allow_unstable=True)
    with pytest.raises(BlowUpError) as info:
        fdm_solve(cfg)
    assert info.value.step > 0
