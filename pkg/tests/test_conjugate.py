"""Conjugate-update and predictive-density checks against independent oracles."""

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import gamma, norm

from edpmediate.conjugate import (
    BetaPrior,
    NigPrior,
    beta_bernoulli_predictive,
    nig_log_marginal,
    nig_posterior,
    nig_predictive_density,
    nig_predictive_logpdf,
    std_normal_cdf,
    std_normal_quantile,
)


def _prior(p=1, precision=1.0, shape=1.0, rate=1.0):
    return NigPrior(
        mean=np.zeros(p), precision=precision * np.eye(p), shape=shape, rate=rate
    )


def predictive_by_quadrature(prior, x_row, y_val):
    """Numerical integration over (beta, precision) for a 1-d design row.

    Parameterizing by the residual precision keeps the tails exponential, so
    infinite-limit quadrature converges to full accuracy.
    """
    lam = prior.precision[0, 0]
    m0 = prior.mean[0]
    x = float(np.asarray(x_row).ravel()[0])

    def integrand(beta, tau):
        return (
            norm.pdf(y_val, loc=x * beta, scale=np.sqrt(1.0 / tau))
            * norm.pdf(beta, loc=m0, scale=np.sqrt(1.0 / (lam * tau)))
            * gamma.pdf(tau, a=prior.shape, scale=1.0 / prior.rate)
        )

    val, _ = integrate.dblquad(integrand, 1e-13, np.inf, -np.inf, np.inf)
    return val


def test_empty_data_returns_prior():
    prior = _prior(2, shape=2.0, rate=2.0)
    post = nig_posterior(prior, np.zeros((0, 2)), np.zeros(0))
    assert post is prior


def test_hand_computed_posterior():
    prior = NigPrior(mean=np.zeros(1), precision=np.eye(1), shape=2.0, rate=2.0)
    post = nig_posterior(prior, np.ones((3, 1)), np.array([1.0, 2.0, 3.0]))
    assert post.mean[0] == pytest.approx(1.5, abs=1e-12)
    assert post.shape == pytest.approx(3.5, abs=1e-12)
    # rate = 2 + (14 - 4 * 1.5^2) / 2 = 4.5
    assert post.rate == pytest.approx(4.5, abs=1e-12)
    assert post.precision[0, 0] == pytest.approx(4.0, abs=1e-12)


def test_duplication_matches_combined_sufficient_statistics():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 2))
    y = rng.standard_normal(6)
    prior = _prior(2, shape=2.0, rate=1.0)
    doubled = nig_posterior(prior, np.vstack([X, X]), np.concatenate([y, y]))
    stacked = nig_posterior(prior, np.repeat(X, 2, axis=0), np.repeat(y, 2))
    assert np.allclose(doubled.mean, stacked.mean, atol=1e-12)
    assert doubled.rate == pytest.approx(stacked.rate, abs=1e-10)


@pytest.mark.parametrize("p", [1, 2, 4])
def test_incremental_equals_batch(p):
    rng = np.random.default_rng(p)
    X = rng.standard_normal((12, p))
    y = rng.standard_normal(12)
    prior = _prior(p, precision=0.5, shape=2.0, rate=1.5)
    batch = nig_posterior(prior, X, y)
    inc = prior
    for i in range(12):
        inc = nig_posterior(inc, X[i : i + 1], y[i : i + 1])
    assert np.allclose(inc.mean, batch.mean, rtol=1e-10, atol=1e-12)
    assert np.allclose(inc.precision, batch.precision, rtol=1e-10)
    assert inc.shape == pytest.approx(batch.shape, rel=1e-12)
    assert inc.rate == pytest.approx(batch.rate, rel=1e-10)


def test_predictive_against_quadrature_oracle():
    prior = _prior(1, precision=1.0, shape=1.0, rate=1.0)
    val = nig_predictive_density(prior, np.array([1.0]), 0.0)
    # frozen from the quadrature oracle below: t with 2 df, scale sqrt(2), at 0
    assert val == pytest.approx(0.25, abs=1e-10)
    assert val == pytest.approx(predictive_by_quadrature(prior, [1.0], 0.0), rel=1e-6)
    # a second, asymmetric point
    prior2 = _prior(1, precision=2.0, shape=3.0, rate=2.0)
    val2 = nig_predictive_density(prior2, np.array([0.7]), 1.3)
    assert val2 == pytest.approx(predictive_by_quadrature(prior2, [0.7], 1.3), rel=1e-6)


def test_predictive_symmetry_and_normalization():
    prior = _prior(1, shape=2.0, rate=1.0)
    for x in (0.6, 1.4, 2.4):
        assert nig_predictive_density(prior, [1.0], x) == pytest.approx(
            nig_predictive_density(prior, [1.0], -x), rel=1e-12
        )
    total, _ = integrate.quad(
        lambda yv: nig_predictive_density(prior, [1.0], yv), -np.inf, np.inf
    )
    assert total == pytest.approx(1.0, abs=1e-6)


def test_predictive_equals_marginal_likelihood_ratio():
    rng = np.random.default_rng(3)
    prior = _prior(3, precision=0.7, shape=2.5, rate=1.2)
    X = rng.standard_normal((5, 3))
    y = rng.standard_normal(5)
    post = nig_posterior(prior, X, y)
    x_new = rng.standard_normal(3)
    y_new = 0.4
    lhs = np.exp(nig_predictive_logpdf(post, x_new.reshape(1, -1), [y_new]))[0]
    rhs = np.exp(
        nig_log_marginal(prior, np.vstack([X, x_new]), np.append(y, y_new))
        - nig_log_marginal(prior, X, y)
    )
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_ill_conditioned_design_raises():
    from edpmediate.conjugate import IllConditionedDesignError

    prior = _prior(2, precision=1e-300)
    X = np.array([[1.0, 1.0], [1.0, 1.0]]) * 1e160
    with pytest.raises((IllConditionedDesignError, FloatingPointError)):
        nig_posterior(prior, X, np.array([1e160, -1e160]))


def test_beta_bernoulli_predictive():
    assert beta_bernoulli_predictive(BetaPrior(1, 1), 0, 0, 1) == pytest.approx(0.5)
    assert beta_bernoulli_predictive(BetaPrior(1, 1), 3, 1, 1) == pytest.approx(4.0 / 6.0)
    p1 = beta_bernoulli_predictive(BetaPrior(2.5, 0.5), 4, 7, 1)
    p0 = beta_bernoulli_predictive(BetaPrior(2.5, 0.5), 4, 7, 0)
    assert p1 + p0 == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        beta_bernoulli_predictive(BetaPrior(1, 1), -1, 0, 1)


def test_std_normal_cdf_quantile_roundtrip():
    # Left tail keeps full relative precision in the CDF value, so the
    # identity holds to 1e-12 all the way down to -8. On the right tail
    # float64 cannot represent cdf(x) near 1 finely enough for ANY
    # implementation (cdf(8) is ~6 ulps from 1.0), so the identity there is
    # verified through the reflection cdf(-x) = 1 - cdf(x).
    xs = np.linspace(-8.0, 3.8, 400)
    back = std_normal_quantile(std_normal_cdf(xs))
    assert np.max(np.abs(back - xs)) < 1e-12
    xs_hi = np.linspace(0.0, 8.0, 200)
    back_hi = -std_normal_quantile(std_normal_cdf(-xs_hi))
    assert np.max(np.abs(back_hi - xs_hi)) < 1e-12


def test_std_normal_special_values():
    assert std_normal_cdf(0.0) == pytest.approx(0.5, abs=1e-16)
    # frozen from a bisection oracle on the CDF
    assert std_normal_quantile(0.975) == pytest.approx(1.959963985, abs=1e-8)
    xs = np.linspace(-6, 6, 41)
    assert np.allclose(std_normal_cdf(-xs), 1.0 - std_normal_cdf(xs), atol=1e-15)
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            std_normal_quantile(bad)


def test_invalid_priors_rejected():
    with pytest.raises(ValueError):
        NigPrior(mean=np.zeros(2), precision=np.array([[1.0, 2.0], [0.5, 1.0]]), shape=1, rate=1)
    with pytest.raises(ValueError):
        NigPrior(mean=np.zeros(1), precision=-np.eye(1), shape=1, rate=1)
    with pytest.raises(ValueError):
        NigPrior(mean=np.zeros(1), precision=np.eye(1), shape=0.0, rate=1)
    with pytest.raises(ValueError):
        BetaPrior(0.0, 1.0)
