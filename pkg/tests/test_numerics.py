import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_lab.numerics import (
    DomainError,
    compensated_sum,
    inv_norm_cdf,
    inv_norm_cdf_array,
    log_norm_cdf,
    log_norm_cdf_array,
    norm_cdf,
)
from oracles import inv_phi_bisection, phi_quadrature

mpmath.mp.dps = 50


def mp_log_phi(z):
    # upper tail through log1p of the small complement; mpmath.ncdf rounds 1 - tiny
    if z > 0:
        return float(mpmath.log1p(-mpmath.ncdf(-z)))
    return float(mpmath.log(mpmath.ncdf(z)))


class TestNormCdf:
    def test_zero(self):
        assert norm_cdf(0.0) == 0.5

    def test_q_two_thirds_point(self):
        # frozen from quadrature of the density: 0.6666666669228382
        assert norm_cdf(0.4307273) == pytest.approx(phi_quadrature(0.4307273), abs=1e-13)
        assert norm_cdf(0.4307273) == pytest.approx(0.6666667, abs=1e-6)

    @pytest.mark.parametrize("z", np.linspace(-8, 8, 161))
    def test_absolute_error(self, z):
        assert abs(norm_cdf(z) - float(mpmath.ncdf(z))) <= 1e-15

    @pytest.mark.parametrize("z", [0.1, 1.0, 3.3, 7.9])
    def test_reflection(self, z):
        assert norm_cdf(z) + norm_cdf(-z) == pytest.approx(1.0, abs=1e-15)

    def test_monotone_random_pairs(self):
        rng = np.random.default_rng(11)
        pairs = np.sort(rng.uniform(-10, 10, size=(10_000, 2)), axis=1)
        for lo, hi in pairs:
            assert norm_cdf(lo) <= norm_cdf(hi)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, bad):
        with pytest.raises(DomainError):
            norm_cdf(bad)


class TestLogNormCdf:
    def test_zero(self):
        assert log_norm_cdf(0.0) == pytest.approx(math.log(0.5), rel=1e-15)

    def test_upper_tail(self):
        v = log_norm_cdf(8.0)
        assert -1e-15 < v < 0

    def test_lower_tail_against_asymptotic_expansion(self):
        z = 20.0
        series = -z * z / 2 - math.log(z * math.sqrt(2 * math.pi)) + math.log1p(-1 / z**2 + 3 / z**4 - 15 / z**6)
        assert log_norm_cdf(-z) == pytest.approx(series, rel=1e-10)
        assert log_norm_cdf(-z) == pytest.approx(-203.9, abs=0.05)

    @pytest.mark.parametrize("z", np.linspace(-40, 40, 321))
    def test_relative_error(self, z):
        expected = mp_log_phi(z)
        got = log_norm_cdf(z)
        assert math.isfinite(got)
        if abs(expected) < 1e-290:
            # subnormal doubles carry no relative precision
            assert got <= 0.0 and abs(got - expected) < 1e-300
        else:
            assert abs(got - expected) <= 1e-12 * abs(expected)

    @given(st.floats(-8, 8))
    def test_agrees_with_norm_cdf(self, z):
        assert math.exp(log_norm_cdf(z)) == pytest.approx(norm_cdf(z), rel=1e-12)

    def test_array_matches_scalar(self):
        z = np.linspace(-45, 45, 1001)
        np.testing.assert_allclose(log_norm_cdf_array(z), [log_norm_cdf(v) for v in z], rtol=1e-14, atol=1e-300)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            log_norm_cdf(math.nan)


class TestInvNormCdf:
    def test_median(self):
        assert inv_norm_cdf(0.5) == 0.0

    def test_two_thirds(self):
        # bisection oracle gives 0.43072729929545717
        assert inv_norm_cdf(2 / 3) == pytest.approx(inv_phi_bisection(2 / 3), abs=1e-12)
        assert inv_norm_cdf(2 / 3) == pytest.approx(0.4307273, abs=1e-6)

    @pytest.mark.parametrize("p", [0.01, 0.5, 0.99, 1e-10, 1 - 1e-10])
    def test_round_trip(self, p):
        assert abs(norm_cdf(inv_norm_cdf(p)) - p) <= 1e-9

    @given(st.floats(-5, 5))
    @settings(max_examples=300)
    def test_inverse_of_cdf(self, z):
        assert inv_norm_cdf(norm_cdf(z)) == pytest.approx(z, abs=1e-8)

    def test_deep_tail(self):
        p = 1e-300
        z = inv_norm_cdf(p)
        assert float(mpmath.ncdf(z) / p) == pytest.approx(1.0, rel=1e-12)

    def test_array_matches_scalar(self):
        p = np.linspace(1e-6, 1 - 1e-6, 501)
        np.testing.assert_allclose(inv_norm_cdf_array(p), [inv_norm_cdf(v) for v in p], rtol=1e-15, atol=1e-15)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            inv_norm_cdf(bad)


class TestCompensatedSum:
    def test_cancellation(self):
        values = [1e16, 1.0, -1e16, 1.0] * 1000
        assert compensated_sum(values) == 2000.0

    @given(st.lists(st.floats(-1e6, 1e6), max_size=300))
    def test_matches_fsum(self, values):
        assert compensated_sum(values) == pytest.approx(math.fsum(values), abs=1e-9)

    def test_many_small_terms(self):
        x = np.full(2**20 + 3, 0.1)
        assert compensated_sum(x) == pytest.approx(math.fsum(x.tolist()), rel=1e-16, abs=0)

    def test_empty(self):
        assert compensated_sum([]) == 0.0
