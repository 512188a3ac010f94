"""Matrix propagators, oscillator networks, and the advection operator."""

import numpy as np
import pytest

from ldint.propagator import (
    OscillatorNetwork,
    SingularPropagatorError,
    build_propagator,
    evolve_linear,
    mol_advection_operator,
    oscillator_generator,
)
from ldint.stability import IncrementFunction, zeta

SHO_GEN = np.array([[0.0, 1.0], [-1.0, 0.0]])


class TestBuildPropagator:
    def test_zero_generator_gives_identity(self):
        prop = build_propagator(np.zeros((3, 3)), 0.5, 2)
        assert np.allclose(prop.matrix, np.eye(3), atol=1e-15)

    def test_sho_matches_rational_map_coefficients(self):
        prop = build_propagator(SHO_GEN, 0.75, 1)
        m = prop.matrix
        diag = 1.0 - 0.28125 / 1.140625
        off = 0.75 / 1.140625
        assert np.allclose(m, [[diag, off], [-off, diag]], rtol=1e-15)

    def test_eigenvalues_match_increment_function(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(5, 5))
        a = a - a.T  # skew: clean eigenstructure
        dt, order = 0.3, 3
        prop = build_propagator(a, dt, order)
        f = IncrementFunction.lanczos_dyche(order)
        eig_a = np.linalg.eigvals(a)
        eig_p = np.linalg.eigvals(prop.matrix)
        expected = sorted(zeta(f, lam * dt) for lam in eig_a)
        got = sorted(eig_p)
        for e, g in zip(
            sorted(expected, key=lambda z: (z.real, z.imag)),
            sorted(got, key=lambda z: (z.real, z.imag)),
        ):
            assert g == pytest.approx(e, abs=1e-10)

    def test_scalar_consistency_with_zeta(self):
        f = IncrementFunction.lanczos_dyche(4)
        for lam in (-2.0, -0.3, 0.7):
            prop = build_propagator(np.array([[lam]]), 0.21, 4)
            assert prop.matrix[0, 0] == pytest.approx(
                zeta(f, lam * 0.21).real, abs=1e-14
            )

    def test_forward_backward_is_identity(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        prop = build_propagator(a, 0.2, 2)
        product = prop.matrix @ prop.reverse().matrix
        assert np.allclose(product, np.eye(4), atol=1e-12)

    def test_skew_generator_preserves_norm(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(6, 6))
        a = a - a.T
        prop = build_propagator(a, 0.4, 2)
        for _ in range(5):
            u = rng.normal(size=6)
            assert np.linalg.norm(prop.step(u)) == pytest.approx(
                np.linalg.norm(u), rel=1e-12
            )

    def test_sho_determinant_is_one(self):
        for n in (1, 2, 3):
            prop = build_propagator(SHO_GEN, 0.75, n)
            assert np.linalg.det(prop.matrix) == pytest.approx(1.0, abs=1e-13)

    def test_singular_denominator_reports_pole(self):
        # n=1 denominator 1 - mu/2 vanishes at mu = A dt = 2
        with pytest.raises(SingularPropagatorError, match="reduce the time step"):
            build_propagator(np.array([[2.0]]), 1.0, 1)

    def test_dense_mode_matches_solve_mode(self):
        rng = np.random.default_rng(9)
        a = rng.normal(size=(4, 4))
        u = rng.normal(size=4)
        lazy = build_propagator(a, 0.1, 2)
        dense = build_propagator(a, 0.1, 2, dense=True)
        assert np.allclose(lazy.step(u), dense.step(u), rtol=1e-13)

    def test_rk_kind_is_truncated_exponential(self):
        prop = build_propagator(SHO_GEN, 0.3, 2, kind="rk")
        x = SHO_GEN * 0.3
        assert np.allclose(prop.matrix, np.eye(2) + x + x @ x / 2.0, atol=1e-15)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            build_propagator(np.zeros((2, 3)), 0.1, 1)


class TestOscillatorNetwork:
    def test_single_unit_oscillator_generator(self):
        net = OscillatorNetwork(M=np.eye(1), K=np.eye(1))
        assert np.allclose(oscillator_generator(net), SHO_GEN)

    def test_tridiagonal_coupling_spectrum_imaginary(self):
        k = 2.0 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)
        net = OscillatorNetwork(M=np.eye(3), K=k)
        eigs = np.linalg.eigvals(oscillator_generator(net))
        assert np.abs(eigs.real).max() < 1e-12

    def test_quadratic_energy_conserved_per_step(self):
        rng = np.random.default_rng(42)
        basis = rng.normal(size=(6, 6))
        m = basis @ basis.T + 6.0 * np.eye(6)
        kb = rng.normal(size=(6, 6))
        k = kb @ kb.T + 2.0 * np.eye(6)  # definite stiffness: purely oscillatory network
        net = OscillatorNetwork(M=m, K=k)
        prop = build_propagator(oscillator_generator(net), 0.2, 3)
        u = np.concatenate([rng.normal(size=6), rng.normal(size=6)])
        e_prev = net.energy(u[:6], u[6:])
        for _ in range(50):
            u = prop.step(u)
            e = net.energy(u[:6], u[6:])
            assert abs(e - e_prev) < 1e-13 * max(1.0, abs(e_prev))
            e_prev = e

    def test_symmetry_validation(self):
        bad = np.array([[1.0, 0.2], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            OscillatorNetwork(M=bad, K=np.eye(2))
        with pytest.raises(ValueError, match="positive definite"):
            OscillatorNetwork(M=-np.eye(2), K=np.eye(2))

    def test_from_file(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("2\n1 0\n0 1\n2 -1\n-1 2\n")
        net = OscillatorNetwork.from_file(path)
        assert net.dim == 2
        assert np.allclose(net.K, [[2, -1], [-1, 2]])

    def test_from_file_wrong_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2\n1 0\n0 1\n")
        with pytest.raises(ValueError, match="2\\*N\\^2"):
            OscillatorNetwork.from_file(path)


class TestMolOperator:
    def test_second_order_row_pattern(self):
        op = mol_advection_operator(4, 1.0, "cd2")
        dense = op.dense()
        assert np.allclose(dense[0], [0.0, -0.5, 0.0, 0.5])

    @pytest.mark.parametrize("scheme", ["cd2", "cd4"])
    def test_antisymmetric_circulant(self, scheme):
        op = mol_advection_operator(16, 0.25, scheme)
        dense = op.dense()
        assert np.allclose(dense.T, -dense, atol=1e-15)
        assert np.allclose(dense[1], np.roll(dense[0], 1), atol=1e-15)

    def test_minimum_grid_size(self):
        with pytest.raises(ValueError, match="at least"):
            mol_advection_operator(3, 1.0, "cd2")
        with pytest.raises(ValueError, match="at least"):
            mol_advection_operator(4, 1.0, "cd4")

    def test_spatial_phase_error_second_order(self):
        # advect a sine one period; time error (order 4) is negligible, so
        # the measured error against the exact traveling wave is O(dx^2)
        errors, dxs = [], []
        for n in (32, 64, 128):
            dx = 1.0 / n
            dt = dx / 4.0
            steps = round(1.0 / dt)
            op = mol_advection_operator(n, dx, "cd2")
            prop = build_propagator(op.dense(), dt, 2)
            x = np.arange(n) * dx
            u = np.sin(2 * np.pi * x)
            traj = evolve_linear(prop, u, steps)
            errors.append(np.abs(traj.states[-1] - u).max())
            dxs.append(dx)
        slope = np.polyfit(np.log(dxs), np.log(errors), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)


class TestEvolveLinear:
    def test_zero_steps(self):
        prop = build_propagator(SHO_GEN, 0.1, 1)
        traj = evolve_linear(prop, np.array([1.0, 0.0]), 0)
        assert traj.states.shape == (1, 2)
        assert traj.norms[0] == 1.0

    def test_norm_series_recorded(self):
        prop = build_propagator(SHO_GEN, 0.1, 1)
        traj = evolve_linear(prop, np.array([1.0, 0.0]), 100)
        assert len(traj.norms) == 101
        assert np.allclose(traj.norms, 1.0, atol=1e-13)

    def test_dimension_check(self):
        prop = build_propagator(SHO_GEN, 0.1, 1)
        with pytest.raises(ValueError, match="dimension"):
            evolve_linear(prop, np.zeros(3), 5)

    def test_csv_format(self, tmp_path):
        prop = build_propagator(SHO_GEN, 0.5, 1)
        traj = evolve_linear(prop, np.array([1.0, 0.0]), 3)
        out = tmp_path / "norms.csv"
        traj.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "step,t,norm"
        assert lines[1].startswith("0,0,")
        assert len(lines) == 5


class TestBlocks:
    def test_sho_blocks_match_closed_form(self):
        prop = build_propagator(SHO_GEN, 0.75, 1)
        a, b, c, d = prop.blocks()
        diag = 1.0 - 0.28125 / 1.140625
        off = 0.75 / 1.140625
        assert a[0, 0] == pytest.approx(diag, rel=1e-15)
        assert b[0, 0] == pytest.approx(off, rel=1e-15)
        assert c[0, 0] == pytest.approx(-off, rel=1e-15)
        assert d[0, 0] == pytest.approx(diag, rel=1e-15)

    def test_network_blocks_compose_the_step(self):
        k = 2.0 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)
        net = OscillatorNetwork(M=np.eye(3), K=k)
        prop = build_propagator(oscillator_generator(net), 0.3, 2)
        a, b, c, d = prop.blocks()
        rng = np.random.default_rng(1)
        q, p = rng.normal(size=3), rng.normal(size=3)
        u1 = prop.step(np.concatenate([q, p]))
        assert np.allclose(a @ q + b @ p, u1[:3], rtol=1e-12)
        assert np.allclose(c @ q + d @ p, u1[3:], rtol=1e-12)
