import numpy as np
import pytest

from chsplit.errors import StepFailure
from chsplit.propagators import SubstepControl, linear_step
from chsplit.schemes import (
    Scheme,
    SchemeConfig,
    lie_step,
    run,
    scheme_step,
    shifted_step,
    strang_compose,
    strang_step,
)
from chsplit.spectral import Grid, RealField, l2_norm
from chsplit.harness import reference_solve, strang_expansion
from conftest import trig


def cfg(tau, nu=1.0, n=64, **kw):
    return SchemeConfig(nu=nu, tau=tau, grid_points=n, **kw)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(nu=0.0, tau=0.1), dict(nu=1.0, tau=-1.0),
                                    dict(nu=1.0, tau=0.1, n_steps=-1), dict(nu=1.0, tau=0.1, grid_points=7),
                                    dict(nu=0.01, tau=0.05, scheme="imex")])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SchemeConfig(**kw)

    def test_horizon_and_coercion(self):
        c = SchemeConfig(nu=1.0, tau=0.25, scheme="lie", n_steps=8)
        assert c.scheme is Scheme.LIE
        assert c.horizon == 2.0


class TestStrang:
    def test_composition_order(self):
        calls = []
        out = strang_compose(1.0, lambda v: calls.append("L") or v * 2, lambda v: calls.append("N") or v + 1)
        assert calls == ["L", "N", "L"]
        assert out == 6.0

    def test_symmetric_when_linear_part_vanishes(self):
        # with identity half steps the step reduces to the subflow alone
        out = strang_compose(np.arange(3.0), lambda v: v, lambda v: v**2)
        np.testing.assert_array_equal(out, np.arange(3.0) ** 2)

    def test_zero_data(self, grid64):
        assert np.all(strang_step(RealField.zeros(grid64), cfg(0.1)).values == 0)

    def test_balance_mode_without_cube(self, grid64):
        # for tiny amplitude the cube is negligible and cos x is linearly neutral at nu = 1
        u = RealField(grid64, 1e-6 * np.cos(grid64.x))
        out = strang_step(u, cfg(0.01))
        assert l2_norm(out.values - u.values) < 1e-16

    def test_local_error_against_expansion(self, grid64):
        u = RealField(grid64, 0.1 * np.cos(grid64.x))
        errs = [l2_norm(strang_step(u, cfg(t)).values - strang_expansion(u, 1.0, t).values)
                for t in (2**-8, 2**-9, 2**-10)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all((orders > 2.7) & (orders < 3.3))

    def test_local_error_against_reference(self, grid64):
        u = RealField(grid64, np.cos(grid64.x))
        # amplitude-one data: the tau^3 regime sets in below about 2^-10
        taus = [2**-10, 2**-11, 2**-12, 2**-13]
        errs = [l2_norm(strang_step(u, cfg(t)).values - reference_solve(u, 1.0, t).field.values)
                for t in taus]
        slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
        assert 2.7 < slope < 3.3
        c = max(e / t**3 for e, t in zip(errs, taus))
        assert errs[-1] <= c * taus[-1] ** 3

    def test_rejects_wrong_grid(self, grid16):
        with pytest.raises(ValueError):
            strang_step(RealField.zeros(grid16), cfg(0.1))


class TestShifted:
    def test_zero(self, grid64):
        assert np.all(shifted_step(RealField.zeros(grid64), cfg(0.1)).values == 0)

    def test_strang_is_shifted_plus_half_step(self, grid64):
        u = trig(grid64, [(1, 0.4, 0.1), (3, 0.05, 0.0)])
        c = cfg(0.01)
        expected = linear_step(shifted_step(u, c), 0.005, 1.0)
        assert np.max(np.abs(strang_step(u, c).values - expected.values)) < 1e-12

    def test_growth_bound(self, grid64):
        nu = 0.5
        c_bound = 1.0 / (4.0 * nu) + 0.1
        u = trig(grid64, [(1, 0.5, 0.2), (2, 0.1, 0.3)])
        for tau in (0.05, 0.01):
            ratio = l2_norm(shifted_step(u, cfg(tau, nu=nu)).values) / l2_norm(u.values)
            assert ratio <= np.exp(c_bound * tau)


class TestLie:
    def test_analytic_cos(self, grid64):
        tau = 0.01
        x = grid64.x
        out = lie_step(RealField(grid64, np.cos(x)), cfg(tau))
        expected = (np.exp(-tau) * (1 + tau / 4) * np.cos(x)
                    - np.exp(-81 * tau) * (9 * tau / 4) * np.cos(3 * x))
        np.testing.assert_allclose(out.values, expected, atol=1e-13)

    def test_dispatch(self, grid64):
        u = RealField(grid64, 0.2 * np.cos(grid64.x))
        c = cfg(0.01, scheme=Scheme.LIE)
        np.testing.assert_array_equal(scheme_step(u, c).values, lie_step(u, c).values)


class TestRun:
    def test_zero_steps(self, grid64):
        traj = run(RealField(grid64, 0.1 * np.cos(grid64.x)), cfg(0.1, n_steps=0))
        assert len(traj) == 1 and traj.ok
        assert traj[0].step_index == 0 and traj[0].field_snapshot is not None

    def test_records_and_snapshots(self, grid64):
        traj = run(RealField(grid64, 0.1 * np.cos(grid64.x)), cfg(0.01, n_steps=10), snapshot_every=4)
        assert [r.step_index for r in traj] == list(range(11))
        assert [r.step_index for r in traj.snapshots()] == [0, 4, 8, 10]
        assert traj.final.time == pytest.approx(0.1)
        assert traj.series("mass").shape == (11,)

    def test_deterministic(self, grid64):
        u = trig(grid64, [(1, 0.3, 0.2), (2, -0.1, 0.4)])
        a = run(u, cfg(0.02, n_steps=5)).final.field_snapshot.values
        b = run(u, cfg(0.02, n_steps=5)).final.field_snapshot.values
        np.testing.assert_array_equal(a, b)

    def test_imex_run(self, grid64):
        traj = run(RealField(grid64, 0.2 * np.cos(2 * grid64.x)), cfg(0.01, n_steps=20, scheme="imex"))
        assert traj.ok and np.all(np.abs(traj.series("mass")) < 1e-15)

    def test_rejects_nonzero_mean(self, grid64):
        with pytest.raises(ValueError):
            run(RealField(grid64, 1 + np.cos(grid64.x)), cfg(0.01))

    def test_partial_failure_keeps_records(self, grid64):
        c = cfg(0.1, n_steps=5, substep=SubstepControl(max_substeps=3))
        traj = run(RealField(grid64, np.cos(grid64.x)), c)
        assert not traj.ok
        assert traj.failed_at == 1 and len(traj) == 1
        assert isinstance(traj.error, StepFailure)
