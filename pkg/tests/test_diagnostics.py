"""Energy, invariants, Jacobians, compensated summation, order fitting."""

import io
import math

import numpy as np
import pytest

from ldint.diagnostics import (
    CompensatedAccumulator,
    DiagnosticSeries,
    SaturatedSequenceError,
    convergence_order,
    damped_invariant,
    energy,
    map_jacobian,
)
from ldint.integrators import step_euler, step_ld2, step_ld4
from ldint.systems import PhaseState, make_pendulum, make_sho


class TestCompensatedAccumulator:
    def test_ten_million_tenths(self):
        acc = CompensatedAccumulator()
        for _ in range(10**7):
            acc.add(0.1)
        assert abs(acc.value - 1e6) < 1e-6

    def test_naive_sum_fails_the_same_task(self):
        total = 0.0
        for _ in range(10**6):
            total += 0.1
        acc = CompensatedAccumulator()
        for _ in range(10**6):
            acc.add(0.1)
        assert abs(acc.value - 1e5) < abs(total - 1e5)

    def test_swallowed_small_terms_recovered(self):
        acc = CompensatedAccumulator(1e16)
        for _ in range(1000):
            acc.add(1.0)
        assert acc.value == pytest.approx(1e16 + 1000.0, rel=1e-16)


class TestEnergy:
    def test_sho_axis_point(self):
        assert energy(make_sho(), PhaseState(q=1.0, p=0.0)) == 0.5

    def test_sho_rotated_point(self):
        assert energy(make_sho(), PhaseState(q=0.6, p=0.8)) == pytest.approx(0.5, rel=1e-15)

    def test_pendulum_balance_point(self):
        val = energy(make_pendulum(), PhaseState(q=math.pi / 2, p=0.0))
        assert abs(val) < 1e-15


class TestDampedInvariant:
    def test_initial_value(self):
        for gamma in (0.0, 1e-4, 0.3):
            assert damped_invariant(gamma, PhaseState(q=1.0, p=0.0)) == 0.5

    def test_gamma_zero_reduces_to_energy(self):
        state = PhaseState(q=0.3, p=-0.7, t=2.5)
        assert damped_invariant(0.0, state) == pytest.approx(
            energy(make_sho(), state), rel=1e-15
        )

    def test_constant_on_exact_trajectories(self):
        # closed-form damped solution: q = e^(-g t/2) cos(w t), p = e^(g t) qdot
        g = 1e-3
        w = math.sqrt(1.0 - g * g / 4.0)
        values = []
        for k in range(100):
            t = 0.5 * k
            damp = math.exp(-0.5 * g * t)
            q = damp * math.cos(w * t)
            qdot = damp * (-0.5 * g * math.cos(w * t) - w * math.sin(w * t))
            p = math.exp(g * t) * qdot
            values.append(damped_invariant(g, PhaseState(q=q, p=p, t=t)))
        values = np.array(values)
        assert np.abs(values - values[0]).max() < 1e-10 * abs(values[0])


class TestMapJacobian:
    def test_identity_map(self):
        assert map_jacobian(lambda s: s, PhaseState(q=0.4, p=0.2)) == pytest.approx(
            1.0, abs=1e-9
        )

    @pytest.mark.parametrize("dt", [0.1, 0.75])
    def test_sho_ld2_is_symplectic(self, dt):
        sho = make_sho()
        jac = map_jacobian(lambda s: step_ld2(sho, s, dt), PhaseState(q=1.0, p=0.0))
        assert jac == pytest.approx(1.0, abs=1e-6)

    def test_sho_euler_jacobian_exceeds_one(self):
        sho = make_sho()
        dt = 0.75
        jac = map_jacobian(lambda s: step_euler(sho, s, dt), PhaseState(q=1.0, p=0.0))
        assert jac == pytest.approx(1.0 + dt * dt, rel=1e-6)

    def test_pendulum_ld2_matches_analytic_ratio(self):
        pend = make_pendulum()
        dt = 0.1
        state = PhaseState(q=1.0, p=0.3)
        nxt = step_ld2(pend, state, dt)
        c = dt * dt / 4.0
        # V'' = -cos q for the cos-potential pendulum
        expected = (1.0 - c * math.cos(state.q[0])) / (1.0 - c * math.cos(nxt.q[0]))
        jac = map_jacobian(lambda s: step_ld2(pend, s, dt), state)
        assert jac == pytest.approx(expected, abs=1e-6)

    def test_quadratic_potential_gives_unit_ratio(self):
        sho = make_sho()
        jac = map_jacobian(lambda s: step_ld4(sho, s, 0.3), PhaseState(q=0.2, p=0.9))
        assert jac == pytest.approx(1.0, abs=1e-6)

    def test_vector_map(self):
        def swap(state):
            return PhaseState(q=state.p, p=-state.q, t=state.t, nu=state.nu)

        jac = map_jacobian(swap, PhaseState(q=[0.1, 0.2], p=[0.3, 0.4]))
        assert jac == pytest.approx(1.0, abs=1e-9)


class TestConvergenceOrder:
    def test_constructed_quadratic_sequence(self):
        dts = [0.4, 0.2, 0.1, 0.05]
        errors = [3.0 * dt**2 for dt in dts]
        assert convergence_order(errors, dts) == pytest.approx(2.0, abs=0.05)

    def test_saturated_sequence_flagged(self):
        with pytest.raises(SaturatedSequenceError):
            convergence_order([1e-3, 0.0, 1e-5], [0.4, 0.2, 0.1])

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            convergence_order([1.0, 0.5], [0.2, 0.1])

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            convergence_order([1.0, 0.5, 0.2], [0.2, 0.1])


class TestDiagnosticSeries:
    def _series(self, with_optional=False):
        n = 4
        return DiagnosticSeries(
            nu=np.arange(n),
            t=0.1 * np.arange(n),
            q=np.linspace(0, 1, n)[:, None],
            p=np.linspace(1, 0, n)[:, None],
            E=np.full(n, 0.5),
            dE_rel=np.zeros(n),
            J=np.ones(n) if with_optional else None,
            C_rel=np.zeros(n) if with_optional else None,
        )

    def test_csv_blank_optional_columns(self):
        buf = io.StringIO()
        self._series(False).write_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "nu,t,q,p,E,dE_rel,J,C_rel"
        assert lines[1].endswith(",,")

    def test_csv_with_optional_columns(self):
        buf = io.StringIO()
        self._series(True).write_csv(buf)
        assert buf.getvalue().strip().splitlines()[1].endswith(",1,0")

    def test_monotone_nu_enforced(self):
        with pytest.raises(ValueError):
            DiagnosticSeries(
                nu=np.array([0, 0]),
                t=np.array([0.0, 0.1]),
                q=np.zeros((2, 1)),
                p=np.zeros((2, 1)),
                E=np.zeros(2),
                dE_rel=np.zeros(2),
            )

    def test_records_roundtrip(self):
        series = self._series(True)
        records = list(series.records())
        assert len(records) == 4
        assert records[2].nu == 2
        assert records[2].J == 1.0
