"""Random-variate generators for the simulation data-generating mechanisms.

Skew-normal mediator noise and the coupled pair of potential post-treatment
confounders (bivariate normal, or gamma marginals tied by a Gaussian copula).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv, ndtr

__all__ = [
    "SkewNormalSpec",
    "BivariateConfounderSpec",
    "sample_skew_normal",
    "skew_normal_mean",
    "sample_bivariate_confounder",
]


@dataclass(frozen=True)
class SkewNormalSpec:
    """Skew-normal law with location ``xi``, scale ``omega`` and slant ``alpha``."""

    xi: float
    omega: float
    alpha: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("scale omega must be positive")


def sample_skew_normal(spec: SkewNormalSpec, rng: np.random.Generator, size=None, xi=None):
    """Draw skew-normal variates; ``xi`` may override the location element-wise.

    Uses the additive representation ``xi + omega * (delta*|u0| + sqrt(1-delta^2)*u1)``
    with ``delta = alpha / sqrt(1 + alpha^2)``.
    """
    loc = spec.xi if xi is None else np.asarray(xi, dtype=float)
    if size is None and xi is not None:
        size = np.shape(loc)
    delta = spec.alpha / np.sqrt(1.0 + spec.alpha * spec.alpha)
    u0 = rng.standard_normal(size)
    u1 = rng.standard_normal(size)
    return loc + spec.omega * (delta * np.abs(u0) + np.sqrt(1.0 - delta * delta) * u1)


def skew_normal_mean(spec: SkewNormalSpec, xi=None):
    """Mean ``xi + omega * delta * sqrt(2/pi)`` of the skew-normal law."""
    loc = spec.xi if xi is None else np.asarray(xi, dtype=float)
    delta = spec.alpha / np.sqrt(1.0 + spec.alpha * spec.alpha)
    return loc + spec.omega * delta * np.sqrt(2.0 / np.pi)


@dataclass(frozen=True)
class BivariateConfounderSpec:
    """Joint law of the two potential post-treatment confounders.

    ``kind='normal'``: bivariate normal with means (mu0, mu1), variances
    (sigma0_sq, sigma1_sq) and correlation rho01. ``kind='gamma'``: gamma
    marginals with shape ``log(1 + exp(mu_z))`` and the given rate, coupled by
    a Gaussian copula whose normal-score correlation is rho01.
    """

    kind: str
    mu0: float = 0.0
    mu1: float = 0.0
    sigma0_sq: float = 1.0
    sigma1_sq: float = 1.0
    rate: float = 1.0
    rho01: float = 0.0

    def __post_init__(self):
        if self.kind not in ("normal", "gamma"):
            raise ValueError("kind must be 'normal' or 'gamma'")
        if not (abs(self.rho01) < 1.0):
            raise ValueError("|rho01| must be < 1")
        if self.kind == "normal" and not (self.sigma0_sq > 0 and self.sigma1_sq > 0):
            raise ValueError("variances must be positive")
        if self.kind == "gamma" and not self.rate > 0:
            raise ValueError("rate must be positive")


def _correlated_std_normals(rho, rng, size):
    z0 = rng.standard_normal(size)
    z1 = rho * z0 + np.sqrt(1.0 - rho * rho) * rng.standard_normal(size)
    return z0, z1


def sample_bivariate_confounder(
    spec: BivariateConfounderSpec,
    rng: np.random.Generator,
    mu0=None,
    mu1=None,
    size=None,
):
    """Draw a coupled pair (v0, v1); ``mu0``/``mu1`` may override element-wise."""
    loc0 = spec.mu0 if mu0 is None else np.asarray(mu0, dtype=float)
    loc1 = spec.mu1 if mu1 is None else np.asarray(mu1, dtype=float)
    if size is None and mu0 is not None:
        size = np.shape(loc0)
    z0, z1 = _correlated_std_normals(spec.rho01, rng, size)
    if spec.kind == "normal":
        v0 = loc0 + np.sqrt(spec.sigma0_sq) * z0
        v1 = loc1 + np.sqrt(spec.sigma1_sq) * z1
        return v0, v1
    # gamma marginals through the normal-score copula; clip the uniforms away
    # from {0,1} so the incomplete-gamma inverse stays finite
    eps = 1e-14
    u0 = np.clip(ndtr(z0), eps, 1.0 - eps)
    u1 = np.clip(ndtr(z1), eps, 1.0 - eps)
    shape0 = np.logaddexp(0.0, loc0)
    shape1 = np.logaddexp(0.0, loc1)
    v0 = gammaincinv(shape0, u0) / spec.rate
    v1 = gammaincinv(shape1, u1) / spec.rate
    return v0, v1
