"""Distributional checks for the simulation random-variate generators."""

import numpy as np
import pytest
from scipy import stats

from edpmediate.rvgen import (
    BivariateConfounderSpec,
    SkewNormalSpec,
    sample_bivariate_confounder,
    sample_skew_normal,
    skew_normal_mean,
)


def test_zero_slant_reduces_to_normal():
    spec = SkewNormalSpec(xi=1.5, omega=2.0, alpha=0.0)
    draws = sample_skew_normal(spec, np.random.default_rng(0), size=100_000)
    ks = stats.kstest(draws, stats.norm(loc=1.5, scale=2.0).cdf).statistic
    assert ks < 0.01


def test_skew_normal_moment_formula():
    spec = SkewNormalSpec(xi=0.7, omega=3.0, alpha=10.0)
    n = 1_000_000
    draws = sample_skew_normal(spec, np.random.default_rng(1), size=n)
    delta = 10.0 / np.sqrt(101.0)
    target = 0.7 + 3.0 * delta * np.sqrt(2.0 / np.pi)
    assert skew_normal_mean(spec) == pytest.approx(target, rel=1e-12)
    mc_se = draws.std() / np.sqrt(n)
    assert abs(draws.mean() - target) < 3.0 * mc_se


def test_location_shift_equivariance():
    base = SkewNormalSpec(xi=0.0, omega=1.3, alpha=4.0)
    shifted = SkewNormalSpec(xi=2.5, omega=1.3, alpha=4.0)
    a = sample_skew_normal(base, np.random.default_rng(7), size=1000)
    b = sample_skew_normal(shifted, np.random.default_rng(7), size=1000)
    assert np.allclose(b, a + 2.5, atol=1e-12)


def test_skew_normal_density_agreement():
    # histogram against the analytic density 2/w phi((x-xi)/w) Phi(a (x-xi)/w)
    spec = SkewNormalSpec(xi=-1.0, omega=1.5, alpha=3.0)
    draws = sample_skew_normal(spec, np.random.default_rng(3), size=200_000)
    ks = stats.kstest(draws, stats.skewnorm(a=3.0, loc=-1.0, scale=1.5).cdf).statistic
    assert ks < 0.01


def test_bivariate_normal_independence_and_covariance():
    rng = np.random.default_rng(5)
    spec0 = BivariateConfounderSpec("normal", mu0=0.0, mu1=0.0, sigma0_sq=2.0, sigma1_sq=5.0, rho01=0.0)
    v0, v1 = sample_bivariate_confounder(spec0, rng, size=100_000)
    assert abs(np.corrcoef(v0, v1)[0, 1]) < 0.02
    spec = BivariateConfounderSpec("normal", mu0=1.0, mu1=-1.0, sigma0_sq=3.0, sigma1_sq=10.0, rho01=0.3)
    v0, v1 = sample_bivariate_confounder(spec, rng, size=400_000)
    target_cov = 0.3 * np.sqrt(30.0)
    emp = np.cov(v0, v1)[0, 1]
    assert emp == pytest.approx(target_cov, abs=0.06)
    assert v0.var() == pytest.approx(3.0, rel=0.02)
    assert v1.var() == pytest.approx(10.0, rel=0.02)


def test_gamma_kind_marginals_and_coupling():
    rng = np.random.default_rng(11)
    spec = BivariateConfounderSpec("gamma", mu0=1.3, mu1=0.2, rate=2.0, rho01=0.4)
    n = 1_000_000
    v0, v1 = sample_bivariate_confounder(spec, rng, size=n)
    shape0 = np.logaddexp(0.0, 1.3)
    shape1 = np.logaddexp(0.0, 0.2)
    for v, shape in ((v0, shape0), (v1, shape1)):
        target = shape / 2.0
        mc_se = v.std() / np.sqrt(n)
        assert abs(v.mean() - target) < 3.0 * mc_se
    # normal-score correlation of the copula matches rho01
    eps = 1e-12
    u0 = stats.gamma(a=shape0, scale=0.5).cdf(v0[:100_000]).clip(eps, 1 - eps)
    u1 = stats.gamma(a=shape1, scale=0.5).cdf(v1[:100_000]).clip(eps, 1 - eps)
    score_corr = np.corrcoef(stats.norm.ppf(u0), stats.norm.ppf(u1))[0, 1]
    assert score_corr == pytest.approx(0.4, abs=0.02)
    assert (v0 > 0).all() and (v1 > 0).all()


def test_mu_override_is_elementwise():
    spec = BivariateConfounderSpec("normal", sigma0_sq=0.01, sigma1_sq=0.01, rho01=0.0)
    mu0 = np.array([0.0, 10.0, 20.0])
    v0, _ = sample_bivariate_confounder(spec, np.random.default_rng(0), mu0=mu0, mu1=mu0)
    assert np.allclose(v0, mu0, atol=1.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        SkewNormalSpec(xi=0.0, omega=0.0, alpha=1.0)
    with pytest.raises(ValueError):
        BivariateConfounderSpec("normal", rho01=1.0)
    with pytest.raises(ValueError):
        BivariateConfounderSpec("lognormal")
    with pytest.raises(ValueError):
        BivariateConfounderSpec("gamma", rate=0.0)
