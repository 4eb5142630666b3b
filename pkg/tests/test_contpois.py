import math

import numpy as np
import pytest
from scipy import integrate

from latentlog import contpois as cp
from latentlog.exceptions import QuadratureError

import oracles


@pytest.mark.parametrize("x, lam, expected", [
    (0.0, 1.0, -1.0),
    (1.0, 1.0, -1.0),
])
def test_log_unnorm_density_trivial(x, lam, expected):
    assert cp.log_unnorm_density(x, lam) == pytest.approx(expected, abs=1e-15)


def test_log_unnorm_density_against_high_precision():
    # frozen from mpmath at 40 digits: 2.5*log(3) - 3 - loggamma(3.5)
    assert cp.log_unnorm_density(2.5, cp.ContPoisParam(3.0)) == pytest.approx(-1.4544428806767999, rel=1e-13)
    for x, lam in [(0.3, 0.1), (7.25, 5.0), (40.0, 20.0), (1e5 + 3.5, 1e5)]:
        assert cp.log_unnorm_density(x, lam) == pytest.approx(oracles.cp_log_unnorm(x, lam), rel=1e-11, abs=1e-9)


def test_log_unnorm_density_vectorised():
    x = np.array([0.0, 0.5, 3.0])
    out = cp.log_unnorm_density(x, 2.0)
    assert out.shape == (3,)
    assert out[2] == pytest.approx(cp.log_unnorm_density(3.0, 2.0))


@pytest.mark.parametrize("bad", [(-0.1, 1.0), (1.0, 0.0), (1.0, -2.0), (math.nan, 1.0)])
def test_domain_errors(bad):
    with pytest.raises(ValueError):
        cp.log_unnorm_density(*bad)


def test_param_rejects_nonpositive():
    with pytest.raises(ValueError):
        cp.ContPoisParam(0.0)


@pytest.mark.parametrize("lam", [1, 5, 20])
def test_matches_integer_poisson_pmf(lam):
    top = int(lam + 10 * math.sqrt(lam))
    for k in range(top + 1):
        got = math.exp(cp.log_unnorm_density(float(k), lam))
        assert got == pytest.approx(oracles.poisson_pmf(k, lam), rel=1e-12, abs=1e-300)


def test_norm_const_lambda_10_near_one():
    assert abs(cp.norm_const(10.0) - 1.0) < 1e-3


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0, 20.0, 250.0])
def test_norm_const_matches_mpmath(lam):
    assert cp.norm_const(lam) == pytest.approx(1.0 / float(oracles.cp_mass(lam)), rel=1e-8)


def test_norm_const_two_resolutions_agree():
    # 1 / C(1) against scipy quadrature on a split interval with a finer limit
    f = lambda x: math.exp(-1.0) / math.gamma(x + 1.0)
    u = cp.upper_limit(1.0)
    a = integrate.quad(f, 0, 5, epsabs=0, epsrel=1e-13, limit=1000)[0]
    b = integrate.quad(f, 5, u, epsabs=0, epsrel=1e-13, limit=1000)[0]
    assert 1.0 / cp.norm_const(1.0) == pytest.approx(a + b, rel=1e-8)


@pytest.mark.parametrize("lam", [0.1, 1.0, 5.0, 20.0, 100.0])
def test_density_integrates_to_one(lam):
    u = cp.upper_limit(lam)
    total = integrate.quad(lambda x: float(cp.density(x, lam)), 0, u,
                           points=[lam], limit=500, epsabs=0, epsrel=1e-11)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_tail_bound_negligible():
    for lam in [1e-6, 0.1, 5.0, 1e3, 1e8]:
        assert cp.tail_bound(lam) < 1e-30


def test_large_rates_stay_normalised():
    for lam in [1e6, 1e10]:
        assert cp.norm_const(lam) == pytest.approx(1.0, abs=1e-9)


def test_log_density_offset_constant_in_x():
    x = np.linspace(0, 15, 31)
    diff = cp.log_density(x, 3.0) - cp.log_unnorm_density(x, 3.0)
    assert np.ptp(diff) < 1e-13


def test_mean_close_to_poisson_at_moderate_rate():
    mean, var = cp.moments(20.0)
    assert abs(mean - 20.0) / 20.0 < 0.02
    assert mean == pytest.approx(oracles.cp_mean(20.0), rel=1e-9)
    assert var == pytest.approx(20.0, rel=0.02)


def test_decreasing_beyond_rate():
    for lam in [1.0, 5.0, 30.0]:
        x = np.linspace(lam + 0.01, lam + 40, 200)
        y = cp.log_unnorm_density(x, lam)
        assert np.all(np.isfinite(y)) and np.all(np.diff(y) < 0)


def test_sample_mean_within_three_standard_errors(rng):
    draws = cp.sample(5.0, rng, size=100_000)
    mean, var = cp.moments(5.0)
    assert np.all(draws >= 0)
    assert abs(draws.mean() - mean) < 3 * math.sqrt(var / draws.size)


def test_sample_cdf_matches_quadrature(rng):
    lam = 5.0
    draws = np.sort(cp.sample(lam, rng, size=100_000))
    grid = np.linspace(0.25, 15.75, 32)
    emp = np.searchsorted(draws, grid, side="right") / draws.size
    ref = np.array([cp.cdf(x, lam) for x in grid])
    assert np.max(np.abs(emp - ref)) < 0.01


def test_sample_per_row_rates(rng):
    lam = np.array([0.0, 1e-9, 0.5, 3.0, 1e6])
    draws = cp.sample(lam, rng)
    assert draws.shape == lam.shape
    assert draws[0] == 0.0
    assert np.all(draws >= 0)
    assert abs(draws[-1] - 1e6) < 10 * math.sqrt(1e6)


def test_sample_distinct_rates_match_shared_grid(rng):
    # mixed-rate and repeated-rate paths build the same inverse CDF
    lam = np.array([2.0, 2.0, 7.0, 7.0])
    u = np.array([0.1, 0.6, 0.3, 0.9])
    grid = cp._sample_grid(lam, u)
    shared = cp._sample_shared(np.array([2.0, 7.0]), np.array([0, 0, 1, 1]), u)
    np.testing.assert_allclose(grid, shared, rtol=1e-12)


def test_sample_poisson_fallback_is_integer(rng):
    draws = cp.sample(3.0, rng, size=1000, method="poisson")
    assert np.all(draws == np.round(draws))


def test_sample_seeded_is_deterministic():
    a = cp.sample(np.array([0.2, 4.0, 50.0]), np.random.default_rng(7))
    b = cp.sample(np.array([0.2, 4.0, 50.0]), np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_sample_rejects_negative_rate(rng):
    with pytest.raises(ValueError):
        cp.sample(np.array([1.0, -1.0]), rng)


def test_quadrature_error_carries_residual():
    err = QuadratureError("x", best=1.0, residual=0.5)
    assert err.best == 1.0 and err.residual == 0.5
