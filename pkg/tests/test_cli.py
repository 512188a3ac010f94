"""End-to-end runs of the experiment CLI."""

import numpy as np
import pytest

from ldint.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


class TestQuadCompare:
    def test_default_gaussian_run(self, tmp_path):
        assert run(tmp_path, "quad-compare") == 0
        csv = (tmp_path / "quad_compare.csv").read_text().splitlines()
        assert csv[0].startswith("n,ld_value,ld_error")
        assert len(csv) == 17
        assert (tmp_path / "quad_compare.gnuplot").exists()

    def test_byte_identical_reruns(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        assert main(["quad-compare", "--out", str(tmp_path / "a")]) == 0
        assert main(["quad-compare", "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "quad_compare.csv").read_bytes() == (
            tmp_path / "b" / "quad_compare.csv"
        ).read_bytes()

    def test_exact_rational_cubic_is_exactly_zero(self, tmp_path):
        assert run(
            tmp_path,
            "quad-compare", "--function", "cubic", "--orders", "2,3",
            "--interval", "0,1", "--exact-rational",
        ) == 0
        rows = (tmp_path / "quad_compare.csv").read_text().splitlines()[1:]
        for row in rows:
            ld_error = row.split(",")[2]
            assert float(ld_error) == 0.0

    def test_zero_width_interval(self, tmp_path):
        assert run(
            tmp_path, "quad-compare", "--interval", "0.3,0.3", "--orders", "1,2"
        ) == 0
        for row in (tmp_path / "quad_compare.csv").read_text().splitlines()[1:]:
            assert float(row.split(",")[2]) == 0.0

    def test_unknown_function_is_usage_error(self, tmp_path):
        assert run(tmp_path, "quad-compare", "--function", "bogus") == 2
        assert list(tmp_path.iterdir()) == []


class TestStability:
    def test_single_ld_grid(self, tmp_path):
        assert run(tmp_path, "stability", "--kind", "ld", "--n", "3",
                   "--resolution", "21") == 0
        lines = (tmp_path / "stability_ld3.csv").read_text().splitlines()
        assert lines[0] == "re,im,abs_zeta,stable"
        assert len(lines) == 1 + 21 * 21

    def test_unknown_kind_is_usage_error(self, tmp_path):
        assert run(tmp_path, "stability", "--kind", "cn") == 2


class TestOscillators:
    def test_sho_series_has_machine_precision_tail(self, tmp_path):
        assert run(tmp_path, "sho", "--method", "ld2", "--dt", "0.1",
                   "--steps", "700") == 0
        rows = (tmp_path / "sho_ld2.csv").read_text().splitlines()[1:]
        de = np.array([float(r.split(",")[5]) for r in rows])
        assert de.max() < 1e-13
        assert (tmp_path / "sho.gnuplot").exists()
        assert (tmp_path / "sho_phase.gnuplot").exists()

    def test_pendulum_run(self, tmp_path):
        assert run(tmp_path, "pendulum", "--method", "ld2,rk2",
                   "--steps", "300") == 0
        assert (tmp_path / "pendulum_ld2.csv").exists()
        assert (tmp_path / "pendulum_rk2.csv").exists()

    def test_damped_records_invariant_column(self, tmp_path):
        assert run(tmp_path, "damped", "--method", "ld4", "--steps", "200") == 0
        rows = (tmp_path / "damped_ld4.csv").read_text().splitlines()[1:]
        c_rel = np.array([float(r.split(",")[7]) for r in rows])
        assert c_rel.max() < 1e-8

    def test_newton_blowup_gives_exit_one_and_no_partial_files(self, tmp_path):
        code = run(tmp_path, "pendulum", "--method", "ld2", "--dt", "80.0",
                   "--steps", "10")
        assert code == 1
        assert list(tmp_path.iterdir()) == []

    def test_unknown_method_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(tmp_path, "sho", "--method", "simplectic")
        assert err.value.code == 2


class TestConfigPrecedence:
    def test_config_supplies_defaults_cli_overrides(self, tmp_path):
        conf = tmp_path / "run.conf"
        conf.write_text("steps=5\ndt=0.2\n")
        out_a = tmp_path / "a"
        assert main(["sho", "--method", "ld2", "--config", str(conf),
                     "--out", str(out_a)]) == 0
        rows = (out_a / "sho_ld2.csv").read_text().splitlines()
        assert len(rows) == 1 + 6  # header + steps+1 records from config
        assert float(rows[2].split(",")[1]) == pytest.approx(0.2)

        out_b = tmp_path / "b"
        assert main(["sho", "--method", "ld2", "--config", str(conf),
                     "--dt", "0.5", "--out", str(out_b)]) == 0
        rows = (out_b / "sho_ld2.csv").read_text().splitlines()
        assert float(rows[2].split(",")[1]) == pytest.approx(0.5)

    def test_malformed_config(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("dt 0.5\n")
        assert main(["sho", "--config", str(conf), "--out", str(tmp_path)]) == 2


class TestCoupled:
    def test_network_run_conserves_energy(self, tmp_path):
        net = tmp_path / "net.txt"
        net.write_text("2\n1 0\n0 1\n2 -1\n-1 2\n")
        assert run(tmp_path, "coupled", "--matrix-file", str(net),
                   "--steps", "50") == 0
        rows = (tmp_path / "coupled.csv").read_text().splitlines()[1:]
        drift = np.array([float(r.split(",")[4]) for r in rows])
        assert drift.max() < 1e-12

    def test_missing_matrix_file_is_usage_error(self, tmp_path):
        assert run(tmp_path, "coupled") == 2
        assert run(tmp_path, "coupled", "--matrix-file",
                   str(tmp_path / "nope.txt")) == 2


class TestMolAdvect:
    def test_courant_sweep_outputs(self, tmp_path):
        assert run(tmp_path, "mol-advect", "--courant", "4", "--steps", "60") == 0
        ld = (tmp_path / "mol_c4_ld.csv").read_text().splitlines()[1:]
        rk = (tmp_path / "mol_c4_rk.csv").read_text().splitlines()[1:]
        norm_ld = np.array([float(r.split(",")[2]) for r in ld])
        norm_rk = np.array([float(r.split(",")[2]) for r in rk])
        assert abs(norm_ld[-1] / norm_ld[0] - 1.0) < 1e-11
        assert norm_rk.max() > 1e3 * norm_rk[0]


class TestConvergence:
    def test_order_table(self, tmp_path):
        assert run(tmp_path, "convergence") == 0
        rows = (tmp_path / "convergence.csv").read_text().splitlines()[1:]
        table = {r.split(",")[1]: r.split(",")[2:] for r in rows}
        for name, (measured, expected) in table.items():
            if measured == "saturated":
                continue
            assert float(measured) == pytest.approx(float(expected), abs=0.2), name
