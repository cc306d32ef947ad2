"""Enriched-mixture state: nested partition, local GLM parameters, weights.

The joint law factors into outcome/mediator clusters (theta level) holding
confounder/covariate subclusters (omega level). Within a cluster the outcome
and mediator follow Gaussian linear models on designs (1, M, V, Z, C) and
(1, V, Z, C); within a subcluster the post-treatment confounder follows a
Gaussian linear model on (1, Z, C) and the covariates (treatment included)
get locally independent Bernoulli / Gaussian marginals.

All mixture-weight computations are done in log space and return unnormalized
log weights together with their log-normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from .conjugate import (
    BetaPrior,
    NigPrior,
    nig_predictive_logpdf,
    nig_predictive_t_params,
    normal_logpdf,
    student_t_logpdf,
)
from .data import MediationData, ObservedRecord, design_m, design_v, design_y

__all__ = [
    "BasePriors",
    "default_base_priors",
    "EdpmConfig",
    "ConfigError",
    "YClusterParams",
    "XClusterParams",
    "PosteriorDraw",
    "EdpmState",
    "loglik_y",
    "loglik_m",
    "loglik_v",
    "loglik_x",
    "lambda_y_weights",
    "lambda_v_weights",
    "mediator_mixture_weights",
    "expected_y",
    "joint_loglik",
    "partition_log_prior",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


class ConfigError(ValueError):
    """Invalid sampler or estimation configuration."""


@dataclass(frozen=True)
class BasePriors:
    """Base-measure parameters for all local models."""

    y_reg: NigPrior
    m_reg: NigPrior
    v_reg: NigPrior | None
    binary: BetaPrior
    cont: NigPrior

    def with_dims(self, p_c: int, include_v: bool) -> "BasePriors":
        expect_y = (4 if include_v else 3) + p_c
        expect_m = (3 if include_v else 2) + p_c
        if self.y_reg.dim != expect_y or self.m_reg.dim != expect_m:
            raise ConfigError("regression prior dimensions do not match the data")
        if include_v and (self.v_reg is None or self.v_reg.dim != 2 + p_c):
            raise ConfigError("confounder regression prior dimension mismatch")
        return self


def default_base_priors(
    p_c: int,
    include_v: bool = True,
    reg_scale: float = 50.0,
    intercept_scale: float | None = None,
    reg_shape: float = 2.0,
    reg_rate: float | None = None,
    y_rate: float = 0.02,
    m_rate: float = 0.2,
    v_rate: float = 0.2,
    beta_a: float = 1.0,
    beta_b: float = 1.0,
    cont_mean: float = 0.0,
    cont_precision: float = 1.0,
    cont_shape: float = 2.0,
    cont_rate: float = 1.0,
) -> BasePriors:
    """Weakly informative defaults for fully standardized data.

    All inputs are standardized at ingestion, so within-cluster residual
    variances are small fractions of 1; the inverse-gamma rates default to
    per-equation values on that scale (the outcome regression is typically
    far tighter than the mediator/confounder ones). ``reg_rate`` overrides
    all three. Slopes get N(0, reg_scale * sigma2) and the intercept
    N(0, intercept_scale * sigma2); a wider intercept lets fresh clusters
    land anywhere in the standardized data range without letting small
    clusters interpolate arbitrary responses through their covariates.
    """
    if reg_rate is not None:
        y_rate = m_rate = v_rate = reg_rate
    if intercept_scale is None:
        intercept_scale = reg_scale

    def reg(p, rate):
        prec = np.eye(p) / reg_scale
        prec[0, 0] = 1.0 / intercept_scale
        return NigPrior(
            mean=np.zeros(p),
            precision=prec,
            shape=reg_shape,
            rate=rate,
        )

    p_y = (4 if include_v else 3) + p_c
    p_m = (3 if include_v else 2) + p_c
    return BasePriors(
        y_reg=reg(p_y, y_rate),
        m_reg=reg(p_m, m_rate),
        v_reg=reg(2 + p_c, v_rate) if include_v else None,
        binary=BetaPrior(beta_a, beta_b),
        cont=NigPrior(
            mean=np.array([cont_mean]),
            precision=np.array([[cont_precision]]),
            shape=cont_shape,
            rate=cont_rate,
        ),
    )


@dataclass(frozen=True)
class EdpmConfig:
    """Sampler configuration: concentrations, auxiliary slots, chain lengths."""

    alpha_theta: float = 1.0
    alpha_omega: float = 1.0
    neal_m_aux: int = 3
    burn_in: int = 5000
    keep: int = 500
    thin: int = 10
    include_v: bool = True

    def __post_init__(self):
        if not (self.alpha_theta > 0 and self.alpha_omega > 0):
            raise ConfigError("concentration parameters must be positive")
        if self.neal_m_aux < 1:
            raise ConfigError("neal_m_aux must be at least 1")
        if self.keep < 1 or self.thin < 1:
            raise ConfigError("keep and thin must be positive")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative")


@dataclass(frozen=True)
class YClusterParams:
    """Outcome and mediator regression parameters of one theta-level cluster."""

    beta_y: np.ndarray
    sigma_y_sq: float
    beta_m: np.ndarray
    sigma_m_sq: float

    def __post_init__(self):
        if not (self.sigma_y_sq > 0 and self.sigma_m_sq > 0):
            raise ValueError("residual variances must be positive")


@dataclass(frozen=True)
class XClusterParams:
    """Confounder regression and covariate marginals of one omega subcluster.

    ``pi`` covers the binary marginals in the order (treatment, binary
    covariates); ``mu``/``tau_sq`` cover the continuous covariates.
    """

    beta_v: np.ndarray | None
    sigma_v_sq: float | None
    pi: np.ndarray
    mu: np.ndarray
    tau_sq: np.ndarray

    def __post_init__(self):
        if self.sigma_v_sq is not None and not self.sigma_v_sq > 0:
            raise ValueError("sigma_v_sq must be positive")
        if np.any(self.pi <= 0) or np.any(self.pi >= 1):
            raise ValueError("pi entries must lie inside (0, 1)")
        if np.any(self.tau_sq <= 0):
            raise ValueError("tau_sq entries must be positive")


def _require(rec: ObservedRecord, fields):
    for name in fields:
        if getattr(rec, name) is None:
            raise ValueError(f"field {name!r} must be observed (impute first)")
    if any(x is None for x in rec.c):
        raise ValueError("covariates must be observed (impute first)")


def loglik_y(params: YClusterParams, rec: ObservedRecord, include_v: bool = True) -> float:
    """Gaussian log likelihood of the outcome under the cluster regression."""
    _require(rec, ("y", "m") + (("v",) if include_v else ()))
    x = design_y(rec.m, rec.v, rec.z, np.asarray(rec.c, dtype=float), include_v)
    return float(normal_logpdf(rec.y, x[0] @ params.beta_y, params.sigma_y_sq))


def loglik_m(params: YClusterParams, rec: ObservedRecord, include_v: bool = True) -> float:
    _require(rec, ("m",) + (("v",) if include_v else ()))
    x = design_m(rec.v, rec.z, np.asarray(rec.c, dtype=float), include_v)
    return float(normal_logpdf(rec.m, x[0] @ params.beta_m, params.sigma_m_sq))


def loglik_v(params: XClusterParams, rec: ObservedRecord) -> float:
    _require(rec, ("v",))
    x = design_v(rec.z, np.asarray(rec.c, dtype=float))
    return float(normal_logpdf(rec.v, x[0] @ params.beta_v, params.sigma_v_sq))


def loglik_x(params: XClusterParams, rec: ObservedRecord, c_binary: np.ndarray) -> float:
    """Log likelihood of (treatment, covariates) under locally independent marginals."""
    _require(rec, ())
    c = np.asarray(rec.c, dtype=float)
    c_binary = np.asarray(c_binary, dtype=bool)
    bits = np.concatenate([[float(rec.z)], c[c_binary]])
    out = float(np.sum(bits * np.log(params.pi) + (1.0 - bits) * np.log1p(-params.pi)))
    cont = c[~c_binary]
    if cont.size:
        out += float(np.sum(normal_logpdf(cont, params.mu, params.tau_sq)))
    return out


@dataclass
class PosteriorDraw:
    """One retained sampler state: nested partition plus all local parameters.

    Arrays are deep copies, safe to share across threads/processes. ``imputed``
    carries the augmented (y, m, v, c) columns when the data had missingness.
    """

    n: int
    alpha_theta: float
    alpha_omega: float
    include_v: bool
    priors: BasePriors
    c_binary: np.ndarray
    c_center: np.ndarray
    c_scale: np.ndarray
    # theta level
    beta_y: np.ndarray  # (K, p_y)
    sig2_y: np.ndarray
    beta_m: np.ndarray
    sig2_m: np.ndarray
    n_l: np.ndarray  # (K,)
    # omega level
    owner: np.ndarray  # (S,)
    beta_v: np.ndarray | None
    sig2_v: np.ndarray | None
    pi: np.ndarray  # (S, 1 + n_binary)
    mu: np.ndarray  # (S, n_cont)
    tau2: np.ndarray
    n_rl: np.ndarray  # (S,)
    y_label: np.ndarray
    x_label: np.ndarray
    y_center: float = 0.0
    y_scale: float = 1.0
    imputed: dict | None = None

    @property
    def K(self) -> int:
        return self.n_l.size

    @property
    def S(self) -> int:
        return self.n_rl.size

    @property
    def bin_idx(self) -> np.ndarray:
        return np.where(self.c_binary)[0]

    @property
    def cont_idx(self) -> np.ndarray:
        return np.where(~self.c_binary)[0]

    def y_params(self, l: int) -> YClusterParams:
        return YClusterParams(
            beta_y=self.beta_y[l].copy(),
            sigma_y_sq=float(self.sig2_y[l]),
            beta_m=self.beta_m[l].copy(),
            sigma_m_sq=float(self.sig2_m[l]),
        )

    def x_params(self, s: int) -> XClusterParams:
        return XClusterParams(
            beta_v=self.beta_v[s].copy() if self.include_v else None,
            sigma_v_sq=float(self.sig2_v[s]) if self.include_v else None,
            pi=self.pi[s].copy(),
            mu=self.mu[s].copy(),
            tau_sq=self.tau2[s].copy(),
        )


def _split_c(draw: PosteriorDraw, c: np.ndarray):
    c = np.atleast_2d(np.asarray(c, dtype=float))
    return c, c[:, draw.bin_idx], c[:, draw.cont_idx]


def log_fx_subclusters(draw: PosteriorDraw, z, c) -> np.ndarray:
    """log f(z, c; omega_s) for every subcluster: (B, S)."""
    c, cb, cc = _split_c(draw, c)
    B = c.shape[0]
    bits = np.column_stack([np.broadcast_to(np.asarray(z, dtype=float), (B,)), cb])
    lp = np.log(draw.pi)
    lq = np.log1p(-draw.pi)
    out = bits @ lp.T + (1.0 - bits) @ lq.T
    if cc.shape[1]:
        inv = 1.0 / draw.tau2
        out += -0.5 * (
            (cc**2) @ inv.T
            - 2.0 * cc @ (draw.mu * inv).T
            + ((draw.mu**2) * inv + np.log(draw.tau2) + _LOG_2PI).sum(axis=1)
        )
    return out


def log_f0_x(draw: PosteriorDraw, z, c) -> np.ndarray:
    """Base-measure predictive log f0(z, c): (B,)."""
    c, cb, cc = _split_c(draw, c)
    B = c.shape[0]
    pr = draw.priors
    p1 = pr.binary.a / (pr.binary.a + pr.binary.b)
    bits = np.column_stack([np.broadcast_to(np.asarray(z, dtype=float), (B,)), cb])
    out = bits.sum(axis=1) * np.log(p1) + (bits.shape[1] - bits.sum(axis=1)) * np.log1p(-p1)
    if cc.shape[1]:
        df, loc, scale = nig_predictive_t_params(pr.cont, np.ones((1, 1)))
        out += student_t_logpdf(cc, df, loc[0], scale[0]).sum(axis=1)
    return out


def log_fv_subclusters(draw: PosteriorDraw, v, z, c) -> np.ndarray:
    """log f(v | z, c; omega_s) for every subcluster: (B, S)."""
    xv = design_v(z, c)
    means = xv @ draw.beta_v.T
    return normal_logpdf(np.atleast_1d(np.asarray(v, dtype=float))[:, None], means, draw.sig2_v)


def log_f0_v(draw: PosteriorDraw, v, z, c) -> np.ndarray:
    xv = design_v(z, c)
    return nig_predictive_logpdf(draw.priors.v_reg, xv, np.atleast_1d(v))


def _bracket_logweights(draw: PosteriorDraw, log_f_sub: np.ndarray | None, log_f0_joint: np.ndarray):
    """Per-cluster omega bracket of the theta-level weights: (B, K).

    bracket_l = log{ alpha_w/(alpha_w+n_l) f0 + sum_r n_rl/(alpha_w+n_l) f_r } .
    """
    a_w = draw.alpha_omega
    B = log_f0_joint.shape[0]
    out = np.empty((B, draw.K))
    for l in range(draw.K):
        denom = np.log(a_w + draw.n_l[l])
        terms = [np.log(a_w) - denom + log_f0_joint]
        sel = np.where(draw.owner == l)[0]
        if sel.size:
            terms.append(np.log(draw.n_rl[sel]) - denom + log_f_sub[:, sel])
        stacked = np.column_stack(terms) if len(terms) > 1 else terms[0][:, None]
        out[:, l] = logsumexp(stacked, axis=1)
    return out


def _lambda_y_log(draw: PosteriorDraw, m, v, z, c):
    """Unnormalized log lambda^y over clusters plus the new-cluster slot: (B, K+1)."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    B = m.size
    a_t, n = draw.alpha_theta, draw.n
    lfx = log_fx_subclusters(draw, z, c)
    lf0x = log_f0_x(draw, z, c)
    if draw.include_v:
        lfv = log_fv_subclusters(draw, v, z, c)
        lf0v = log_f0_v(draw, v, z, c)
        l_sub = lfx + lfv
        l0_joint = lf0x + lf0v
    else:
        l_sub, l0_joint = lfx, lf0x
    xm = design_m(v, z, c, draw.include_v)
    if xm.shape[0] == 1 and B > 1:
        xm = np.broadcast_to(xm, (B, xm.shape[1]))
    lfm = normal_logpdf(m[:, None], xm @ draw.beta_m.T, draw.sig2_m) if draw.K else np.zeros((B, 0))
    lw = np.empty((B, draw.K + 1))
    if draw.K:
        lw[:, : draw.K] = (
            np.log(draw.n_l) - np.log(a_t + n) + lfm + _bracket_logweights(draw, l_sub, l0_joint)
        )
    lf0m = nig_predictive_logpdf(draw.priors.m_reg, xm, m)
    lw[:, draw.K] = np.log(a_t) - np.log(a_t + n) + lf0m + (lf0v if draw.include_v else 0.0) + lf0x
    return lw


def lambda_y_weights(m, v, z, c, draw: PosteriorDraw):
    """Outcome-mixture log weights at (m, v, z, c) plus their log-normalizer.

    Index K (last) is the new-cluster slot. Exponentiate-and-normalize with
    the returned normalizer to recover probabilities.
    """
    lw = _lambda_y_log(draw, [m], [v] if v is not None else None, z, np.atleast_2d(c))[0]
    return lw, float(logsumexp(lw))


def _lambda_v_log(draw: PosteriorDraw, z, c):
    """Unnormalized log lambda^v over (l, r) pairs plus the new slot: (B, S+1)."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    B = c.shape[0]
    a_t, a_w, n = draw.alpha_theta, draw.alpha_omega, draw.n
    lfx = log_fx_subclusters(draw, z, c)
    lf0x = log_f0_x(draw, z, c)
    lw = np.empty((B, draw.S + 1))
    if draw.S:
        nl_own = draw.n_l[draw.owner]
        lw[:, : draw.S] = (
            np.log(nl_own) - np.log(a_t + n) + np.log(draw.n_rl) - np.log(a_w + nl_own) + lfx
        )
    new_mass = a_t / (a_t + n)
    if draw.K:
        new_mass += np.sum((draw.n_l / (a_t + n)) * (a_w / (a_w + draw.n_l)))
    lw[:, draw.S] = np.log(new_mass) + lf0x
    return lw


def lambda_v_weights(z, c, draw: PosteriorDraw):
    """Confounder-mixture log weights over subclusters plus the new slot."""
    lw = _lambda_v_log(draw, z, np.atleast_2d(c))[0]
    return lw, float(logsumexp(lw))


def _mediator_log(draw: PosteriorDraw, v, z, c):
    """Cluster log weights for sampling the mediator at (v, z, c): (B, K+1)."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    B = c.shape[0]
    a_t, n = draw.alpha_theta, draw.n
    lfx = log_fx_subclusters(draw, z, c)
    lf0x = log_f0_x(draw, z, c)
    if draw.include_v:
        lfv = log_fv_subclusters(draw, v, z, c)
        lf0v = log_f0_v(draw, v, z, c)
        l_sub = lfx + lfv
        l0_joint = lf0x + lf0v
    else:
        l_sub, l0_joint = lfx, lf0x
    lw = np.empty((B, draw.K + 1))
    if draw.K:
        lw[:, : draw.K] = (
            np.log(draw.n_l) - np.log(a_t + n) + _bracket_logweights(draw, l_sub, l0_joint)
        )
    lw[:, draw.K] = np.log(a_t) - np.log(a_t + n) + (lf0v if draw.include_v else 0.0) + lf0x
    return lw


def mediator_mixture_weights(v, z, c, draw: PosteriorDraw):
    """Cluster log weights for the mediator kernel plus the log-normalizer."""
    lw = _mediator_log(draw, [v] if v is not None else None, z, np.atleast_2d(c))[0]
    return lw, float(logsumexp(lw))


def expected_y(m, v, z, c, draw: PosteriorDraw) -> float:
    """Posterior conditional expectation of the outcome at (m, v, z, c)."""
    return float(expected_y_batch(draw, np.atleast_1d(m), v, z, np.atleast_2d(c))[0])


def expected_y_batch(draw: PosteriorDraw, m, v, z, c) -> np.ndarray:
    lw = _lambda_y_log(draw, m, v, z, c)
    lw -= logsumexp(lw, axis=1, keepdims=True)
    w = np.exp(lw)
    xy = design_y(m, v, z, c, draw.include_v)
    e0 = xy @ draw.priors.y_reg.mean
    if draw.K == 0:
        return w[:, 0] * e0
    means = xy @ draw.beta_y.T
    return np.sum(w[:, : draw.K] * means, axis=1) + w[:, draw.K] * e0


def partition_log_prior(n_l, n_rl, owner, alpha_theta: float, alpha_omega: float) -> float:
    """Urn-representation log prior mass of a nested partition."""
    n_l = np.asarray(n_l, dtype=float)
    n_rl = np.asarray(n_rl, dtype=float)
    n = n_l.sum()
    out = (
        n_l.size * np.log(alpha_theta)
        + gammaln(n_l).sum()
        + gammaln(alpha_theta)
        - gammaln(alpha_theta + n)
    )
    for l in range(n_l.size):
        sub = n_rl[np.asarray(owner) == l]
        out += (
            sub.size * np.log(alpha_omega)
            + gammaln(sub).sum()
            + gammaln(alpha_omega)
            - gammaln(alpha_omega + n_l[l])
        )
    return float(out)


def joint_loglik(draw: PosteriorDraw, data: MediationData) -> float:
    """Partition prior mass plus all local log likelihoods (trace monitoring)."""
    y, m, v, z, c = data.y, data.m, data.v, data.z, data.c
    if draw.imputed is not None:
        y, m, v, c = (draw.imputed[k] for k in ("y", "m", "v", "c"))
    out = partition_log_prior(draw.n_l, draw.n_rl, draw.owner, draw.alpha_theta, draw.alpha_omega)
    xy = design_y(m, v, z, c, draw.include_v)
    xm = design_m(v, z, c, draw.include_v)
    lab, slab = draw.y_label, draw.x_label
    out += float(np.sum(normal_logpdf(y, np.einsum("ij,ij->i", xy, draw.beta_y[lab]), draw.sig2_y[lab])))
    out += float(np.sum(normal_logpdf(m, np.einsum("ij,ij->i", xm, draw.beta_m[lab]), draw.sig2_m[lab])))
    if draw.include_v:
        xv = design_v(z, c)
        out += float(
            np.sum(normal_logpdf(v, np.einsum("ij,ij->i", xv, draw.beta_v[slab]), draw.sig2_v[slab]))
        )
    bits = np.column_stack([z.astype(float), c[:, draw.bin_idx]])
    pis = draw.pi[slab]
    out += float(np.sum(bits * np.log(pis) + (1.0 - bits) * np.log1p(-pis)))
    cc = c[:, draw.cont_idx]
    if cc.shape[1]:
        out += float(np.sum(normal_logpdf(cc, draw.mu[slab], draw.tau2[slab])))
    return out
