"""Conjugate Bayesian linear-regression machinery.

Normal-inverse-gamma (NIG) priors for Gaussian linear models, beta priors for
Bernoulli marginals, their exact posterior updates, marginal likelihoods and
Student-t prior predictives, plus the standard-normal CDF/quantile pair used
throughout the copula code.

Parameterization: ``beta | sigma2 ~ N(mean, sigma2 * inv(precision))`` and
``sigma2 ~ InvGamma(shape, rate)`` with the rate convention
``p(s) propto s^-(shape+1) exp(-rate/s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtr, ndtri

__all__ = [
    "NigPrior",
    "BetaPrior",
    "IllConditionedDesignError",
    "nig_posterior",
    "nig_log_marginal",
    "nig_predictive_t_params",
    "nig_predictive_logpdf",
    "nig_predictive_density",
    "nig_sample",
    "beta_bernoulli_predictive",
    "std_normal_cdf",
    "std_normal_quantile",
    "normal_logpdf",
    "student_t_logpdf",
]


class IllConditionedDesignError(ValueError):
    """Raised when a conjugate update produces a numerically non-PD precision."""


@dataclass(frozen=True)
class NigPrior:
    """Normal-inverse-gamma prior for a Gaussian linear regression.

    ``mean`` is the prior coefficient mean (length p), ``precision`` the
    symmetric positive-definite prior precision of the coefficients (scaled by
    sigma2), and ``shape``/``rate`` parameterize the inverse-gamma law on the
    residual variance.
    """

    mean: np.ndarray
    precision: np.ndarray
    shape: float
    rate: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        prec = np.atleast_2d(np.asarray(self.precision, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", prec)
        if prec.shape != (mean.size, mean.size):
            raise ValueError("precision shape does not match mean length")
        if not np.allclose(prec, prec.T, atol=1e-10):
            raise ValueError("precision matrix must be symmetric")
        try:
            np.linalg.cholesky(prec)
        except np.linalg.LinAlgError as exc:
            raise ValueError("precision matrix must be positive definite") from exc
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.size

    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.precision)


@dataclass(frozen=True)
class BetaPrior:
    """Beta(a, b) prior for a Bernoulli success probability."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("beta prior parameters must be strictly positive")


def _as_design(design_rows: np.ndarray, p: int) -> np.ndarray:
    X = np.asarray(design_rows, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size == p else X.reshape(-1, p)
    if X.ndim != 2 or X.shape[1] != p:
        raise ValueError(f"design rows must have width {p}")
    return X


def nig_posterior(prior: NigPrior, design_rows: np.ndarray, responses: np.ndarray) -> NigPrior:
    """Exact NIG posterior after observing ``responses`` at ``design_rows``.

    With no data the prior is returned unchanged.
    """
    X = _as_design(design_rows, prior.dim)
    y = np.atleast_1d(np.asarray(responses, dtype=float))
    n = y.size
    if X.shape[0] != n:
        raise ValueError("design and response lengths differ")
    if n == 0:
        return prior

    prec_n = prior.precision + X.T @ X
    rhs = prior.precision @ prior.mean + X.T @ y
    try:
        chol = np.linalg.cholesky(prec_n)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedDesignError("posterior precision is not PD") from exc
    mean_n = np.linalg.solve(prec_n, rhs)
    shape_n = prior.shape + 0.5 * n
    rate_n = prior.rate + 0.5 * (
        y @ y + prior.mean @ (prior.precision @ prior.mean) - mean_n @ (prec_n @ mean_n)
    )
    if not np.isfinite(rate_n) or rate_n <= 0:
        raise IllConditionedDesignError("posterior rate is not positive; design is ill-conditioned")
    del chol
    return NigPrior(mean=mean_n, precision=prec_n, shape=shape_n, rate=rate_n)


def _logdet_pd(a: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(a)
    if sign <= 0:
        raise IllConditionedDesignError("matrix is not positive definite")
    return logdet


def nig_log_marginal(prior: NigPrior, design_rows: np.ndarray, responses: np.ndarray) -> float:
    """Log marginal likelihood of the data under the NIG prior."""
    y = np.atleast_1d(np.asarray(responses, dtype=float))
    n = y.size
    if n == 0:
        return 0.0
    post = nig_posterior(prior, design_rows, responses)
    return (
        -0.5 * n * np.log(2.0 * np.pi)
        + 0.5 * (_logdet_pd(prior.precision) - _logdet_pd(post.precision))
        + prior.shape * np.log(prior.rate)
        - post.shape * np.log(post.rate)
        + gammaln(post.shape)
        - gammaln(prior.shape)
    )


def nig_predictive_t_params(prior: NigPrior, design_rows: np.ndarray):
    """Student-t prior-predictive parameters (df, location, scale) row-wise."""
    X = _as_design(design_rows, prior.dim)
    loc = X @ prior.mean
    # x' inv(Lambda) x via a solve against the prior precision
    sol = np.linalg.solve(prior.precision, X.T)
    quad = np.einsum("ij,ji->i", X, sol)
    scale = np.sqrt((prior.rate / prior.shape) * (1.0 + quad))
    return 2.0 * prior.shape, loc, scale


def student_t_logpdf(x: np.ndarray, df: float, loc=0.0, scale=1.0) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - loc) / scale
    return (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * np.log(df * np.pi)
        - np.log(scale)
        - ((df + 1.0) / 2.0) * np.log1p(z * z / df)
    )


def nig_predictive_logpdf(prior: NigPrior, design_rows: np.ndarray, responses) -> np.ndarray:
    """Row-wise log density of the Student-t prior predictive."""
    df, loc, scale = nig_predictive_t_params(prior, design_rows)
    return student_t_logpdf(np.atleast_1d(np.asarray(responses, dtype=float)), df, loc, scale)


def nig_predictive_density(prior: NigPrior, design_row: np.ndarray, response: float) -> float:
    """Prior-predictive density of one response at one design row."""
    out = np.exp(nig_predictive_logpdf(prior, np.atleast_2d(design_row), [response]))
    val = float(out[0])
    if not np.isfinite(val):
        raise FloatingPointError("predictive density overflowed")
    return val


def nig_sample(prior: NigPrior, rng: np.random.Generator):
    """One (beta, sigma2) draw from the NIG law."""
    sigma2 = prior.rate / rng.gamma(prior.shape)
    cov_chol = np.linalg.cholesky(np.linalg.inv(prior.precision))
    beta = prior.mean + np.sqrt(sigma2) * (cov_chol @ rng.standard_normal(prior.dim))
    return beta, float(sigma2)


def beta_bernoulli_predictive(prior: BetaPrior, successes: int, failures: int, next_value: int) -> float:
    """Posterior-predictive probability of the next Bernoulli observation."""
    if successes < 0 or failures < 0:
        raise ValueError("counts must be non-negative")
    p1 = (prior.a + successes) / (prior.a + prior.b + successes + failures)
    return p1 if next_value else 1.0 - p1


def std_normal_cdf(x):
    """Standard normal CDF (complementary-error-function implementation)."""
    return ndtr(x)


def std_normal_quantile(u):
    """Standard normal quantile; raises on u outside the open unit interval."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    out = ndtri(u_arr)
    return float(out) if np.isscalar(u) or u_arr.ndim == 0 else out


_LOG_2PI = float(np.log(2.0 * np.pi))


def normal_logpdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    d = x - mean
    return -0.5 * (_LOG_2PI + np.log(var) + d * d / var)
