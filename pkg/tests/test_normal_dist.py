import math

import mpmath as mp
import numpy as np
import pytest

from apcval.normal_dist import cdf, check_probability, prob_between, quantile, tail

mp.mp.dps = 40

# sqrt(2) * erfinv(2p - 1) at 40 digits
Q975 = 1.9599639845400542355


def mp_quantile(p):
    p = mp.mpf(p)
    if p > 0.5:
        return -mp_quantile(1 - p)
    if p < 1e-6:
        # erfinv(2p - 1) loses p entirely; solve ncdf(x) = p instead
        guess = -mp.sqrt(-2 * mp.log(p))
        return float(mp.findroot(lambda x: mp.log(mp.ncdf(x)) - mp.log(p), guess))
    return float(mp.sqrt(2) * mp.erfinv(2 * p - 1))


def mills_tail(x, terms=12):
    """phi(x)/x * sum_k (-1)^k (2k-1)!! / x^(2k), evaluated in mpmath."""
    x = mp.mpf(x)
    series = mp.fsum((-1) ** k * mp.fac2(2 * k - 1) / x ** (2 * k) for k in range(terms))
    return mp.npdf(x) / x * series


class TestQuantile:
    def test_median(self):
        assert quantile(0.5) == 0.0

    def test_975(self):
        assert quantile(0.975) == pytest.approx(Q975, abs=1e-12)
        assert abs(quantile(0.975) - 1.959964) < 1e-6

    def test_sentinels(self):
        assert quantile(1.0) == math.inf
        assert quantile(0.0) == -math.inf

    @pytest.mark.parametrize("p", [-1e-12, 1.0 + 1e-12, math.nan, 2.0])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            quantile(p)

    @pytest.mark.parametrize("p", [1e-300, 1e-100, 1e-20, 1e-5, 0.01, 0.3, 0.7, 0.9, 0.999, 1 - 1e-12])
    def test_against_mpmath(self, p):
        assert quantile(p) == pytest.approx(mp_quantile(p), abs=1e-9)

    def test_antisymmetry_exact(self):
        rng = np.random.default_rng(3)
        for p in rng.uniform(0.5, 1.0, 500):
            q = 1.0 - p
            if 1.0 - q == p:  # exactly representable complement
                assert quantile(p) == -quantile(q)

    def test_vectorised(self):
        p = np.array([0.0, 0.025, 0.5, 0.975, 1.0])
        z = quantile(p)
        assert isinstance(z, np.ndarray)
        assert z[0] == -math.inf and z[-1] == math.inf
        assert z[3] == pytest.approx(Q975, abs=1e-12)

    def test_monotone(self):
        p = np.linspace(1e-9, 1 - 1e-9, 2001)
        assert np.all(np.diff(quantile(p)) > 0)


class TestCdfTail:
    def test_symmetry_points(self):
        assert cdf(0.0) == 0.5
        assert tail(0.0) == 0.5
        assert tail(-1.5) + tail(1.5) == pytest.approx(1.0, abs=1e-15)

    def test_roundtrip_975(self):
        assert cdf(1.959964) == pytest.approx(0.975, abs=1e-6)

    def test_cdf_8_31_rounds_to_one(self):
        assert cdf(8.31) == 1.0
        assert 1.0 - cdf(8.31) == 0.0

    def test_tail_8_31_against_mills_ratio(self):
        expected = float(mills_tail(8.31))
        assert expected == pytest.approx(4.9e-17, rel=0.03)
        assert tail(8.31) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("x", [-30.0, -6.0, -1.0, 0.3, 2.0, 5.0, 9.0, 15.0, 25.0, 37.0])
    def test_tail_relative_accuracy(self, x):
        exact = float(mp.ncdf(-mp.mpf(x)))
        assert tail(x) == pytest.approx(exact, rel=1e-10)

    @pytest.mark.parametrize("x", [-8.0, -3.0, -0.5, 0.0, 0.7, 2.5, 6.0])
    def test_cdf_absolute_accuracy(self, x):
        assert abs(cdf(x) - float(mp.ncdf(x))) <= 1e-12

    def test_tail_matches_complement_in_body(self):
        x = np.linspace(-6, 6, 241)
        assert np.max(np.abs(tail(x) - (1.0 - cdf(x)))) <= 1e-12

    def test_complement_collapses_beyond_9(self):
        for x in np.linspace(9, 37, 57):
            assert 1.0 - cdf(x) == 0.0
            assert tail(x) > 0.0

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            cdf(bad)
        with pytest.raises(ValueError):
            tail(bad)

    def test_cdf_monotone(self):
        x = np.linspace(-8, 5, 2601)
        assert np.all(np.diff(cdf(x)) > 0)


def test_roundtrip_log_grid():
    lo = np.logspace(-12, math.log10(0.5), 500)
    p = np.concatenate([lo, 1.0 - lo[::-1]])
    assert p.size == 1000
    err = np.abs(cdf(quantile(p)) - p)
    assert err.max() <= 1e-9


def test_prob_between_deep_tail():
    # both bounds far right: naive cdf difference would be 0
    expected = float(mp.ncdf(-10) - mp.ncdf(-11))
    assert prob_between(10.0, 11.0) == pytest.approx(expected, rel=1e-10)
    assert prob_between(-1.959963984540054, 1.959963984540054) == pytest.approx(0.95, abs=1e-15)
    assert prob_between(-math.inf, math.inf) == 1.0


def test_check_probability():
    check_probability([0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        check_probability([0.1, 1.1])
