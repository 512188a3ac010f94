"""Increment functions, stability maps, and the A-stability checker."""

import cmath
import io

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldint.stability import (
    IncrementFunction,
    PoleError,
    check_a_stability,
    scan_region,
    zeta,
)


class TestZeta:
    def test_ld1_at_minus_one(self):
        f = IncrementFunction.lanczos_dyche(1)
        assert zeta(f, -1.0) == pytest.approx((1 - 0.5) / (1 + 0.5), rel=1e-15)

    def test_exact_is_exponential(self):
        f = IncrementFunction.exact()
        mu = -0.3 + 1.2j
        assert zeta(f, mu) == pytest.approx(cmath.exp(mu), rel=1e-15)

    def test_rk1_boundary_of_euler_disk(self):
        f = IncrementFunction.runge_kutta(1)
        assert abs(zeta(f, -2.0)) == 1.0

    @given(theta=st.floats(-100.0, 100.0), n=st.integers(1, 8))
    @settings(max_examples=200, deadline=None)
    def test_unit_modulus_on_imaginary_axis(self, theta, n):
        f = IncrementFunction.lanczos_dyche(n)
        assert abs(abs(zeta(f, 1j * theta)) - 1.0) < 1e-13

    @given(
        re=st.floats(-20.0, 0.5),
        im=st.floats(-20.0, 20.0),
        n=st.integers(1, 6),
    )
    @settings(max_examples=200, deadline=None)
    def test_time_symmetry_product(self, re, im, n):
        f = IncrementFunction.lanczos_dyche(n)
        mu = complex(re, im)
        try:
            product = zeta(f, mu) * zeta(f, -mu)
        except PoleError:
            return  # pole pairs excluded by contract
        assert product == pytest.approx(1.0 + 0.0j, abs=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_series_agreement_orders(self, n):
        # LD matches exp to O(mu^(2n+1)), RK to O(mu^(n+1)); slopes measured
        # against a 40-digit exponential
        mpmath.mp.dps = 40
        ld = IncrementFunction.lanczos_dyche(n)
        rk = IncrementFunction.runge_kutta(n)
        diffs_ld, diffs_rk = [], []
        mus = (1e-2, 5e-3)
        for mu in mus:
            ref = complex(mpmath.e**mu)
            diffs_ld.append(abs(zeta(ld, mu) - ref))
            diffs_rk.append(abs(zeta(rk, mu) - ref))
        slope_rk = np.log(diffs_rk[0] / diffs_rk[1]) / np.log(mus[0] / mus[1])
        assert slope_rk == pytest.approx(n + 1, abs=0.1)
        if n <= 2:  # higher orders drown in roundoff at mu = 1e-2
            slope_ld = np.log(diffs_ld[0] / diffs_ld[1]) / np.log(mus[0] / mus[1])
            assert slope_ld == pytest.approx(2 * n + 1, abs=0.15)
        assert diffs_ld[0] < diffs_rk[0] / 100.0

    def test_pole_raises_with_location(self):
        f = IncrementFunction.lanczos_dyche(1)
        with pytest.raises(PoleError) as err:
            zeta(f, 2.0)  # denominator 1 - mu/2 vanishes
        assert err.value.mu == 2.0


class TestScanRegion:
    def test_rk1_matches_euler_disk(self):
        f = IncrementFunction.runge_kutta(1)
        smap = scan_region(f, (-3.0, 1.0), (-2.0, 2.0), 401)
        mu = smap.re_values[:, None] + 1j * smap.im_values[None, :]
        analytic = np.abs(1.0 + mu) <= 1.0
        assert np.array_equal(smap.stable_mask, analytic)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_ld_stable_on_left_half_plane(self, n):
        f = IncrementFunction.lanczos_dyche(n)
        smap = scan_region(f, (-5.0, 5.0), (-5.0, 5.0), 101)
        left = smap.re_values <= 0.0
        assert smap.stable_mask[left, :].all()

    def test_exact_kind_unstable_right_half(self):
        f = IncrementFunction.exact()
        smap = scan_region(f, (0.5, 2.0), (-1.0, 1.0), 21)
        assert not smap.stable_mask.any()

    def test_pole_cells_flagged_not_raised(self):
        f = IncrementFunction.lanczos_dyche(1)
        smap = scan_region(f, (1.0, 3.0), (-1.0, 1.0), 21)
        assert smap.pole_mask.any()
        assert not smap.stable_mask[smap.pole_mask].any()

    def test_rejects_degenerate_input(self):
        f = IncrementFunction.exact()
        with pytest.raises(ValueError):
            scan_region(f, (0.0, 0.0), (-1.0, 1.0), 11)
        with pytest.raises(ValueError):
            scan_region(f, (-1.0, 1.0), (-1.0, 1.0), 1)

    def test_csv_layout_and_determinism(self):
        f = IncrementFunction.lanczos_dyche(2)
        smap = scan_region(f, (-1.0, 1.0), (-1.0, 1.0), 5)
        buf1, buf2 = io.StringIO(), io.StringIO()
        smap.write_csv(buf1)
        smap.write_csv(buf2)
        assert buf1.getvalue() == buf2.getvalue()
        lines = buf1.getvalue().strip().splitlines()
        assert lines[0] == "re,im,abs_zeta,stable"
        assert len(lines) == 1 + 25
        # row-major: the first 5 rows share the first re value
        first_re = lines[1].split(",")[0]
        assert all(line.split(",")[0] == first_re for line in lines[1:6])


class TestAStability:
    @pytest.mark.parametrize("n", [1, 4])
    def test_a_stable_with_worst_case_record(self, n):
        res = check_a_stability(n, 20000)
        assert res.a_stable
        assert res.worst_abs <= 1.0 + 1e-12
        assert res.worst_mu.real <= 0.0
        assert res.samples >= 20000

    def test_not_l_stable_limit(self):
        res = check_a_stability(2, 1000)
        assert abs(res.limit_abs - 1.0) < 1e-6

    def test_deterministic_given_seed(self):
        a = check_a_stability(3, 5000, seed=7)
        b = check_a_stability(3, 5000, seed=7)
        assert a == b

    def test_rejects_large_order(self):
        with pytest.raises(ValueError):
            check_a_stability(13, 100)
