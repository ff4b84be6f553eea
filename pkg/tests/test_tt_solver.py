from __future__ import annotations

import numpy as np
import pytest

from qcfd.grid import BlowUpError, BurgersConfig, Field, GridSpec, fdm_solve, fdm_step
from qcfd.tt import (
    TruncationPolicy,
    TtSolveConfig,
    derivative_mpos,
    encode_mps,
    tt_solve,
    tt_step,
)


@pytest.fixture(scope="module")
def ops6():
    spec = GridSpec(6)
    return spec, *derivative_mpos(6, spec.dx)


def test_zero_state_is_fixed(ops6):
    spec, d1, d2 = ops6
    out, discarded = tt_step(encode_mps(np.zeros(spec.N)), 0.1, 1e-4, d1, d2, TruncationPolicy(max_chi=4))
    np.testing.assert_array_equal(out.to_vector(), 0.0)
    assert discarded == 0.0


@pytest.mark.parametrize("per_op", [False, True])
def test_unlimited_step_matches_fdm(ops6, per_op):
    spec, d1, d2 = ops6
    u = np.random.default_rng(0).standard_normal(spec.N)
    out, discarded = tt_step(
        encode_mps(u, TruncationPolicy.unlimited()), 0.05, 1e-5, d1, d2, TruncationPolicy.unlimited(), per_op_truncation=per_op
    )
    expected = fdm_step(Field(spec, u), 0.05, 1e-5, allow_unstable=True).values
    np.testing.assert_allclose(out.to_vector(), expected, atol=1e-10, rtol=0)
    assert discarded == 0.0


def test_step_respects_bond_cap(ops6):
    spec, d1, d2 = ops6
    u = encode_mps(np.random.default_rng(1).standard_normal(spec.N), TruncationPolicy.unlimited())
    out, discarded = tt_step(u, 0.05, 1e-5, d1, d2, TruncationPolicy(max_chi=4))
    assert out.max_bond <= 4
    assert discarded > 0


def test_step_rejects_site_mismatch(ops6):
    _, d1, d2 = ops6
    with pytest.raises(ValueError):
        tt_step(encode_mps(np.ones(32)), 0.1, 1e-4, d1, d2, TruncationPolicy())


def test_config_rejects_dirichlet():
    spec = GridSpec(5, boundary="dirichlet")
    with pytest.raises(ValueError):
        TtSolveConfig(BurgersConfig(spec, 0.05, 1e-4, 0.01))


def test_short_solve_tracks_fdm_and_records_diagnostics():
    cfg = BurgersConfig(GridSpec(6), 0.05, 1e-4, 0.02)
    ref, ref_snaps = fdm_solve(cfg)
    final, diag = tt_solve(TtSolveConfig(cfg, TruncationPolicy.unlimited()))
    assert len(diag.max_bond) == len(diag.discarded_weight) == len(diag.seconds) == cfg.n_steps
    assert [s for s, _ in diag.snapshots] == list(range(0, 201, 2))
    for (_, m), f in zip(diag.snapshots, ref_snaps):
        np.testing.assert_allclose(m.to_vector(), f.values, atol=1e-10, rtol=0)
    assert diag.accumulated_truncation == 0.0


def test_capped_solve_obeys_cap_and_is_deterministic():
    cfg = TtSolveConfig(BurgersConfig(GridSpec(6), 0.05, 1e-4, 0.01), TruncationPolicy(max_chi=3))
    a_final, a = tt_solve(cfg)
    b_final, b = tt_solve(cfg)
    assert max(a.max_bond) <= 3
    assert a.max_bond == b.max_bond
    assert a.discarded_weight == b.discarded_weight
    np.testing.assert_array_equal(a_final.to_vector(), b_final.to_vector())
    assert a.accumulated_truncation > 0


def test_diagnostics_can_be_skipped():
    cfg = TtSolveConfig(BurgersConfig(GridSpec(5), 0.05, 1e-4, 0.001), record_diagnostics=False)
    _, diag = tt_solve(cfg)
    assert diag.max_bond == [] and diag.seconds == []


def test_blow_up_detected():
    cfg = BurgersConfig(GridSpec(5), 1.0, 0.01, 10.0, allow_unstable=True)
    with np.errstate(all="ignore"), pytest.raises(BlowUpError) as info:
        tt_solve(TtSolveConfig(cfg, TruncationPolicy(max_chi=8)))
    assert info.value.step > 0
