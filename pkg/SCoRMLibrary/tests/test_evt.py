# -*- coding: utf-8 -*-
"""
Tests of the truncated normal, GPD and hybrid Pareto distributions, their fitting
and the chi-square goodness of fit test.
"""

import numpy as np
import pytest
import scipy.integrate as integrate
import scipy.stats as sct

from SCoRMLibrary.evt import GpdParams, HpdParams, HpdOptions, trunc_normal_pdf, trunc_normal_logpdf, gpd_pdf, \
    gpd_logpdf, gpd_cdf, gpd_ppf, hpd_pdf, hpd_logpdf, hpd_cdf, hpd_ppf, hpd_sample, hpd_neg_log_lik, fit_hpd, \
    chi_square_gof, density_jump, threshold_grid
from SCoRMLibrary.errors import InvalidParameterError, InvalidInputError, InsufficientDataError, \
    TailUnidentifiableError, ConfigurationError, NumericalError
from SCoRMLibrary.examples import load_fixture, fixture_sums

#Mixture resembling the steam trap batch sizes
CASE_HPD = HpdParams(mu=10.61, sigma=7.67, gpd=GpdParams(u=38, xi=0.84, beta=121.75), p_extreme=1 / 9)


def random_hpd(rng):
    mu = rng.uniform(0, 20)
    sigma = rng.uniform(1, 10)
    u = mu + rng.uniform(-1, 3) * sigma
    return HpdParams(mu=mu, sigma=sigma, gpd=GpdParams(u=u, xi=rng.uniform(-0.5, 0.5), beta=rng.uniform(1, 30)),
                     p_extreme=rng.uniform(0.01, 0.5))


#==============================================================================
#------------------------------Densities---------------------------------------
#==============================================================================
def test_trunc_normal_outside_support():
    assert trunc_normal_pdf(3.0, 0, 1, 2.0) == 0


def test_trunc_normal_untruncated():
    assert trunc_normal_pdf(0.0, 0, 1, np.inf) == pytest.approx(0.39894228, rel=1e-7)


def test_trunc_normal_doubled_at_mean():
    assert trunc_normal_pdf(-0.5, 0, 1, 0.0) == pytest.approx(0.704131, rel=1e-5)


def test_trunc_normal_bad_sigma():
    with pytest.raises(InvalidParameterError):
        trunc_normal_pdf(0.0, 0, 0, 1.0)


def test_gpd_boundary_value():
    assert gpd_pdf(38, GpdParams(38, 0.84, 121.75)) == pytest.approx(1 / 121.75, rel=1e-12)
    assert gpd_pdf(38, GpdParams(38, 0.84, 121.75)) == pytest.approx(0.0082135, rel=1e-4)


def test_gpd_exponential_branch():
    p = GpdParams(5, 0.0, 2.0)
    assert gpd_pdf(7.0, p) == pytest.approx(np.exp(-1) / 2.0, rel=1e-12)


def test_gpd_case_value():
    assert gpd_pdf(100, GpdParams(38, 0.84, 121.75)) == pytest.approx(0.0037650, rel=1e-4)


def test_gpd_below_threshold_and_beyond_endpoint():
    assert gpd_pdf(37.9, GpdParams(38, 0.84, 121.75)) == 0
    bounded = GpdParams(0, -0.5, 1.0)
    assert bounded.upper_endpoint == pytest.approx(2.0)
    assert gpd_pdf(2.5, bounded) == 0
    assert gpd_cdf(2.5, bounded) == 1


def test_gpd_bad_beta():
    with pytest.raises(InvalidParameterError):
        GpdParams(1, 0.1, 0.0)
    with pytest.raises(InvalidParameterError):
        GpdParams(1, 0.1, -2.0)


def test_gpd_xi_continuity():
    x = np.linspace(10, 10 + 10 * 3.0, 200)
    at_zero = gpd_pdf(x, GpdParams(10, 0.0, 3.0))
    assert np.all(np.abs(gpd_pdf(x, GpdParams(10, 1e-9, 3.0)) - at_zero) <= 1e-8 * at_zero)
    assert np.allclose(gpd_pdf(x, GpdParams(10, 1e-7, 3.0)), at_zero, rtol=1e-5, atol=0)


def test_gpd_ppf_inverts_cdf():
    q = np.linspace(0, 0.999, 50)
    for p in (GpdParams(2, 0.3, 4.0), GpdParams(2, 0.0, 4.0), GpdParams(2, -0.4, 4.0)):
        assert np.allclose(gpd_cdf(gpd_ppf(q, p), p), q, atol=1e-12)


def test_gpd_matches_scipy_genpareto():
    x = np.linspace(0, 60, 121)
    for xi in (0.84, 0.0, -0.4):
        p = GpdParams(5, xi, 7.0)
        assert np.allclose(gpd_pdf(x, p), sct.genpareto.pdf(x, xi, loc=5, scale=7.0))
        assert np.allclose(gpd_cdf(x, p), sct.genpareto.cdf(x, xi, loc=5, scale=7.0))


def test_log_densities_match_densities():
    x = np.array([2.0, 20.0, 37.5, 38.0, 100.0])
    assert np.allclose(trunc_normal_logpdf(x[:3], 10, 4, 38), np.log(trunc_normal_pdf(x[:3], 10, 4, 38)))
    assert trunc_normal_logpdf(40.0, 10, 4, 38) == -np.inf
    assert np.allclose(gpd_logpdf(x[3:], CASE_HPD.gpd), np.log(gpd_pdf(x[3:], CASE_HPD.gpd)))
    assert gpd_logpdf(37.0, CASE_HPD.gpd) == -np.inf
    assert np.allclose(hpd_logpdf(x, CASE_HPD), np.log(hpd_pdf(x, CASE_HPD)))
    assert hpd_neg_log_lik(x, CASE_HPD) == pytest.approx(-np.sum(hpd_logpdf(x, CASE_HPD)))


def test_hpd_degenerate_weights():
    body_only = HpdParams(mu=5, sigma=2, gpd=GpdParams(8, 0.2, 3.0), p_extreme=0.0)
    x = np.array([1.0, 4.0, 7.5])
    assert np.allclose(hpd_pdf(x, body_only), trunc_normal_pdf(x, 5, 2, 8))
    assert hpd_pdf(9.0, body_only) == 0
    tail_only = HpdParams(mu=5, sigma=2, gpd=GpdParams(8, 0.2, 3.0), p_extreme=1.0)
    assert np.all(hpd_pdf(x, tail_only) == 0)


def test_hpd_bad_weight():
    with pytest.raises(InvalidParameterError):
        HpdParams(mu=5, sigma=2, gpd=GpdParams(8, 0.2, 3.0), p_extreme=1.5)


def test_hpd_normalization_random_params():
    rng = np.random.default_rng(1)
    for i in range(50):
        p = random_hpd(rng)
        body = integrate.quad(lambda x: hpd_pdf(x, p), -np.inf, p.u, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
        tail = integrate.quad(lambda x: hpd_pdf(x, p), p.u, p.gpd.upper_endpoint, epsabs=1e-12, epsrel=1e-10,
                              limit=200)[0]
        assert abs(body + tail - 1) < 1e-6


def test_hpd_normalization_case_params():
    p = CASE_HPD
    body = integrate.quad(lambda x: hpd_pdf(x, p), -np.inf, p.u, epsabs=1e-12, limit=200)[0]
    #Heavy tail: integrate to a finite point and add the GPD survival beyond it
    tail = integrate.quad(lambda x: hpd_pdf(x, p), p.u, 2000, limit=500)[0]
    beyond = p.p_extreme * (1 - gpd_cdf(2000, p.gpd))
    assert abs(body - (1 - p.p_extreme)) < 1e-8
    assert abs(body + tail + beyond - 1) < 1e-6


def test_hpd_cdf_at_threshold():
    assert hpd_cdf(38, CASE_HPD) == pytest.approx(1 - 1 / 9, abs=1e-15)
    assert hpd_cdf(38, CASE_HPD) == pytest.approx(0.8889, abs=1e-4)
    assert hpd_cdf(-1e6, CASE_HPD) == 0


def test_hpd_cdf_derivative_matches_pdf():
    rng = np.random.default_rng(2)
    p = HpdParams(mu=10, sigma=4, gpd=GpdParams(15, 0.3, 5.0), p_extreme=0.2)
    x = np.concatenate((rng.uniform(0, 14.9, 50), rng.uniform(15.1, 60, 50)))
    h = 1e-5
    derivative = (hpd_cdf(x + h, p) - hpd_cdf(x - h, p)) / (2 * h)
    assert np.all(np.abs(derivative - hpd_pdf(x, p)) < 1e-4)


def test_hpd_cdf_nondecreasing():
    x = np.linspace(-20, 400, 5000)
    assert np.all(np.diff(hpd_cdf(x, CASE_HPD)) >= 0)


def test_hpd_ppf_inverts_cdf():
    q = np.linspace(0.001, 0.999, 99)
    assert np.allclose(hpd_cdf(hpd_ppf(q, CASE_HPD), CASE_HPD), q, atol=1e-10)


def test_density_jump():
    p = HpdParams(mu=10, sigma=4, gpd=GpdParams(15, 0.3, 5.0), p_extreme=0.2)
    below = 0.8 * sct.norm.pdf(15, 10, 4) / sct.norm.cdf(15, 10, 4)
    assert density_jump(p) == pytest.approx(0.2 / 5.0 - below, rel=1e-8)


#==============================================================================
#------------------------------Sampling and likelihood-------------------------
#==============================================================================
def test_sample_empty_and_deterministic():
    assert hpd_sample(CASE_HPD, 0, 3).size == 0
    assert np.array_equal(hpd_sample(CASE_HPD, 100, 7), hpd_sample(CASE_HPD, 100, 7))


def test_sample_negative_count():
    with pytest.raises(InvalidInputError):
        hpd_sample(CASE_HPD, -1, 0)


def test_sample_extreme_fraction():
    n = 100000
    x = hpd_sample(CASE_HPD, n, 11)
    p = CASE_HPD.p_extreme
    assert abs(np.mean(x >= 38) - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_sample_ks_agreement():
    p = HpdParams(mu=10, sigma=4, gpd=GpdParams(15, 0.3, 5.0), p_extreme=0.2)
    n = 50000
    passed = 0
    for seed in range(40):
        statistic = sct.kstest(hpd_sample(p, n, seed), lambda x: hpd_cdf(x, p)).statistic
        passed += statistic <= 1.63 / np.sqrt(n)
    assert passed >= 38


def test_neg_log_lik_single_and_additive():
    d = hpd_pdf(12.0, CASE_HPD)
    assert hpd_neg_log_lik([12.0], CASE_HPD) == pytest.approx(-np.log(d))
    data = np.array([3.0, 12.0, 40.0, 100.0])
    assert hpd_neg_log_lik(np.concatenate((data, data)), CASE_HPD) == \
        pytest.approx(2 * hpd_neg_log_lik(data, CASE_HPD))


def test_neg_log_lik_empty_and_zero_density():
    with pytest.raises(InvalidInputError):
        hpd_neg_log_lik([], CASE_HPD)
    bounded = HpdParams(mu=5, sigma=2, gpd=GpdParams(8, -0.5, 1.0), p_extreme=0.2)
    assert hpd_neg_log_lik([5.0, 20.0], bounded) == np.inf


def test_neg_log_lik_fixture_golden():
    sums = fixture_sums()
    golden = sums["neg_log_lik"]
    sizes = [b.size for b in load_fixture()]
    params = HpdParams.from_dict(golden["params"])
    assert hpd_neg_log_lik(sizes, params) == pytest.approx(golden["value"], rel=1e-6)


#==============================================================================
#------------------------------Fitting-----------------------------------------
#==============================================================================
def test_fit_too_few_observations():
    with pytest.raises(InsufficientDataError):
        fit_hpd(np.arange(1, 11))


def test_fit_no_candidate_threshold():
    with pytest.raises(TailUnidentifiableError):
        fit_hpd(np.arange(1, 31), HpdOptions(min_exceedances=40))


def test_threshold_grid_on_fixture():
    sizes = [b.size for b in load_fixture()]
    grid = threshold_grid(sizes, HpdOptions())
    assert grid.tolist() == [10, 11, 12, 13, 15, 16, 18, 19, 33, 35, 36, 37, 38, 47, 58, 60, 61]
    thinned = threshold_grid(sizes, HpdOptions(max_candidates=5))
    assert thinned.size == 5 and thinned[0] == 10 and thinned[-1] == 61


def test_fit_fixture_at_threshold_38():
    sizes = np.array([b.size for b in load_fixture()], dtype=float)
    report = fit_hpd(sizes, HpdOptions(threshold=38))
    assert report.params.u == 38
    assert report.n_extreme == 9 and report.n_normal == 72
    assert report.params.p_extreme == 9 / 81
    assert abs(report.params.mu - 9.82) <= 0.1 * 9.82
    assert report.params.gpd.xi > -1
    assert report.log_likelihood == pytest.approx(-hpd_neg_log_lik(sizes, report.params), rel=1e-9)


def test_fit_search_reports_best_candidate():
    sizes = np.array([b.size for b in load_fixture()], dtype=float)
    options = HpdOptions()
    report = fit_hpd(sizes, options)
    assert report.n_normal + report.n_extreme == sizes.size
    finite = [ll for _, ll in report.threshold_candidates if np.isfinite(ll)]
    assert report.log_likelihood >= max(finite)
    assert report.params.u in [u for u, _ in report.threshold_candidates]
    assert report.params.p_extreme == np.mean(sizes >= report.params.u)
    #Integer sizes tie at every candidate; the tail must stay away from the beta -> 0 ridge
    gpd = report.params.gpd
    excess = sizes[sizes >= gpd.u] - gpd.u
    assert np.isfinite(report.log_likelihood) and report.log_likelihood < 0
    assert gpd.beta > options.beta_min_ratio * np.mean(excess)
    assert -1 < gpd.xi < options.xi_max
    assert report.log_likelihood == pytest.approx(-hpd_neg_log_lik(sizes, report.params), rel=1e-9)


def test_fit_rejects_tail_on_bound():
    body = np.linspace(1, 9, 30)
    tied = np.concatenate((body, np.full(8, 10.0), [11.0, 12.0, 13.0]))
    with pytest.raises(NumericalError):
        fit_hpd(tied, HpdOptions(threshold=10))
    report = fit_hpd(np.concatenate((tied, [16.0, 23.0, 35.0])))
    assert dict(report.threshold_candidates)[10.0] == -np.inf
    assert report.params.u != 10


def test_hpd_options_configuration_errors():
    for kwargs in ({"threshold": -1}, {"min_exceedances": 0}, {"percentile_range": (90, 50)},
                   {"max_iter": 0}, {"xi_max": 0}, {"beta_min_ratio": 1.5}):
        with pytest.raises(ConfigurationError) as err:
            HpdOptions(**kwargs)
        assert err.value.exit_code == 2


def test_fit_recovers_synthetic_params():
    truth = HpdParams(mu=20, sigma=5, gpd=GpdParams(u=25, xi=0.5, beta=8.0), p_extreme=0.3)
    data = hpd_sample(truth, 50000, 123)
    report = fit_hpd(data, HpdOptions(threshold=25))
    fitted = report.params
    assert fitted.p_extreme == np.mean(data >= 25)
    assert fitted.mu == pytest.approx(20, rel=0.05)
    assert fitted.sigma == pytest.approx(5, rel=0.05)
    assert fitted.gpd.beta == pytest.approx(8.0, rel=0.05)
    assert fitted.gpd.xi == pytest.approx(0.5, rel=0.10)


def test_fit_report_round_trip():
    sizes = np.array([b.size for b in load_fixture()], dtype=float)
    report = fit_hpd(sizes, HpdOptions(threshold=38))
    assert type(report).from_dict(report.to_dict()).to_dict() == report.to_dict()


#==============================================================================
#------------------------------Goodness of fit---------------------------------
#==============================================================================
def test_gof_too_few_observations():
    with pytest.raises(InsufficientDataError):
        chi_square_gof(np.arange(10), CASE_HPD)


def test_gof_too_many_estimated_params():
    data = hpd_sample(CASE_HPD, 20, 0)
    with pytest.raises(InsufficientDataError):
        chi_square_gof(data, CASE_HPD, n_estimated_params=5)


def test_gof_null_true():
    p = HpdParams(mu=10, sigma=4, gpd=GpdParams(15, 0.3, 5.0), p_extreme=0.2)
    accepted = sum(chi_square_gof(hpd_sample(p, 5000, 1000 + i), p).p_value > 0.05 for i in range(100))
    assert accepted >= 90


def test_gof_gross_misfit():
    data = np.full(200, CASE_HPD.mu)
    assert chi_square_gof(data, CASE_HPD).p_value < 0.01


def test_gof_bins_on_fixture():
    sizes = np.array([b.size for b in load_fixture()], dtype=float)
    report = fit_hpd(sizes, HpdOptions(threshold=38))
    gof = chi_square_gof(sizes, report.params, n_estimated_params=5)
    assert sum(o for _, _, o, _ in gof.bins) == 81
    assert all(e >= 5 for _, _, _, e in gof.bins)
    assert gof.degrees_of_freedom == len(gof.bins) - 1 - 5
    assert gof.statistic >= 0 and 0 <= gof.p_value <= 1
