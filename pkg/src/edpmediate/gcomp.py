"""Monte-Carlo G-computation: posterior draws -> causal-effect posteriors.

For each retained sampler state we draw D synthetic subjects: a cluster/
subcluster pair from the urn predictive masses, baseline covariates from the
chosen subcluster, the treated-arm confounder from its conditional mixture,
the counterfactual confounder through the Gaussian copula, the counterfactual
mediator from its cluster mixture, and finally the conditional outcome
expectation. Averaging over D gives the three potential-outcome means per
state; contrasts give NIE, NDE and ATE (the total effect is their sum by
construction, per state and exactly).

The three means per state share one stream of covariate, confounder and rho
samples (common random numbers), which tightens the contrasts without
touching any marginal distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conjugate import nig_predictive_t_params, student_t_logpdf
from .copula import MixtureCdf, SensitivitySpec, conditional_copula_draw, draw_rho
from .data import design_m, design_v, design_y
from .model import (
    PosteriorDraw,
    _lambda_v_log,
    _mediator_log,
    expected_y_batch,
)

__all__ = [
    "GCompConfig",
    "EffectPosterior",
    "potential_outcome_mean",
    "causal_effects",
    "conditional_causal_effects",
    "v_mixture_cdf",
]


@dataclass(frozen=True)
class GCompConfig:
    """Monte-Carlo settings for the post-processing pass."""

    mc_draws: int = 500
    sensitivity: SensitivitySpec = field(default_factory=lambda: SensitivitySpec("fixed", value=0.0))
    eps_tol: float = 1e-8
    conditioning: tuple[int, float] | None = None

    def __post_init__(self):
        if self.mc_draws < 1:
            raise ValueError("mc_draws must be at least 1")


@dataclass
class EffectPosterior:
    """Per-state effect values with equal-tail 95% summaries."""

    nie: np.ndarray
    nde: np.ndarray
    ate: np.ndarray

    def summary(self) -> dict:
        out = {}
        for name in ("nie", "nde", "ate"):
            vals = getattr(self, name)
            lo, hi = np.percentile(vals, [2.5, 97.5])
            out[name] = {"mean": float(np.mean(vals)), "lo95": float(lo), "hi95": float(hi)}
        return out


def _conditioning_factors(draw: PosteriorDraw, conditioning):
    """Per-subcluster and base-measure densities of C_j = value (model scale)."""
    j, value = conditioning
    if j < 0 or j >= draw.c_binary.size:
        raise ValueError("conditioning covariate index out of range")
    pr = draw.priors
    if draw.c_binary[j]:
        if value not in (0.0, 1.0):
            raise ValueError("conditioning value outside binary covariate support")
        bpos = int(np.where(draw.bin_idx == j)[0][0])
        p_sub = draw.pi[:, 1 + bpos]
        dens_sub = p_sub if value == 1.0 else 1.0 - p_sub
        p0 = pr.binary.a / (pr.binary.a + pr.binary.b)
        dens_new = p0 if value == 1.0 else 1.0 - p0
    else:
        value_std = (value - draw.c_center[j]) / draw.c_scale[j]
        qpos = int(np.where(draw.cont_idx == j)[0][0])
        dens_sub = np.exp(
            -0.5 * (np.log(2 * np.pi * draw.tau2[:, qpos]) + (value_std - draw.mu[:, qpos]) ** 2 / draw.tau2[:, qpos])
        )
        df, loc, scale = nig_predictive_t_params(pr.cont, np.ones((1, 1)))
        dens_new = float(np.exp(student_t_logpdf(np.array([value_std]), df, loc[0], scale[0]))[0])
    return dens_sub, dens_new


def _draw_components(draw: PosteriorDraw, D: int, rng: np.random.Generator, conditioning=None):
    """Step 1: (cluster, subcluster) pairs from the urn predictive masses.

    Returns (sub_slot, is_new) where sub_slot indexes an existing subcluster
    and is_new flags a fresh component (new subcluster or new cluster, whose
    covariate draw comes from the base predictive either way).
    """
    a_t, a_w, n = draw.alpha_theta, draw.alpha_omega, draw.n
    S = draw.S
    if S:
        nl_own = draw.n_l[draw.owner].astype(float)
        w_pairs = nl_own * draw.n_rl / ((a_t + n) * (a_w + nl_own))
        w_newsub = draw.n_l * a_w / ((a_t + n) * (a_w + draw.n_l.astype(float)))
    else:
        w_pairs = np.zeros(0)
        w_newsub = np.zeros(0)
    w_new = np.array([a_t / (a_t + n)])
    masses = np.concatenate([w_pairs, w_newsub, w_new])
    if conditioning is not None:
        dens_sub, dens_new = _conditioning_factors(draw, conditioning)
        masses = masses * np.concatenate([dens_sub, np.full(draw.K, dens_new), [dens_new]])
    masses = masses / masses.sum()
    sel = rng.choice(masses.size, size=D, p=masses)
    is_new = sel >= S
    sub_slot = np.where(is_new, 0, sel)
    return sub_slot, is_new


def _draw_covariates(draw: PosteriorDraw, sub_slot, is_new, rng, conditioning=None):
    """Step 2: covariates from the chosen subcluster (base predictive if new)."""
    D = sub_slot.size
    p_c = draw.c_binary.size
    c = np.empty((D, p_c))
    pr = draw.priors
    p0 = pr.binary.a / (pr.binary.a + pr.binary.b)
    bin_idx, cont_idx = draw.bin_idx, draw.cont_idx
    if bin_idx.size:
        if draw.S:
            probs = np.where(is_new[:, None], p0, draw.pi[sub_slot][:, 1:])
        else:
            probs = np.full((D, bin_idx.size), p0)
        c[:, bin_idx] = (rng.random((D, bin_idx.size)) < probs).astype(float)
    if cont_idx.size:
        if draw.S:
            mu_sel = draw.mu[sub_slot]
            sd_sel = np.sqrt(draw.tau2[sub_slot])
            vals = mu_sel + sd_sel * rng.standard_normal((D, cont_idx.size))
        else:
            vals = np.empty((D, cont_idx.size))
        if is_new.any():
            df, loc, scale = nig_predictive_t_params(pr.cont, np.ones((1, 1)))
            n_new = int(is_new.sum())
            tvals = loc[0] + scale[0] * rng.standard_t(df, size=(n_new, cont_idx.size))
            vals[is_new] = tvals
        c[:, cont_idx] = vals
    if conditioning is not None:
        j, value = conditioning
        if draw.c_binary[j]:
            c[:, j] = value
        else:
            c[:, j] = (value - draw.c_center[j]) / draw.c_scale[j]
    return c


def v_mixture_cdf(draw: PosteriorDraw, z: int, c: np.ndarray) -> MixtureCdf:
    """Conditional confounder mixture at (z, c) as a batched CDF object."""
    lw = _lambda_v_log(draw, z, c)
    lw = lw - lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    w /= w.sum(axis=1, keepdims=True)
    xv = design_v(z, c)
    means = xv @ draw.beta_v.T if draw.S else np.zeros((c.shape[0], 0))
    df, loc, scale = nig_predictive_t_params(draw.priors.v_reg, xv)
    return MixtureCdf(
        weights=w,
        means=means,
        sds=np.sqrt(draw.sig2_v) if draw.S else np.zeros(0),
        t_df=df,
        t_loc=loc,
        t_scale=scale,
    )


def _draw_mediator(draw: PosteriorDraw, v, z: int, c, rng) -> np.ndarray:
    """Steps 8-9: cluster choice then the local mediator kernel at (v, z, c)."""
    lw = _mediator_log(draw, v, z, c)
    lw = lw - lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    w /= w.sum(axis=1, keepdims=True)
    D = w.shape[0]
    cum = np.cumsum(w, axis=1)
    comp = np.minimum(np.sum(rng.random(D)[:, None] > cum, axis=1), draw.K)
    xm = design_m(v, z, c, draw.include_v)
    if xm.shape[0] == 1 and D > 1:
        xm = np.broadcast_to(xm, (D, xm.shape[1]))
    out = np.empty(D)
    existing = comp < draw.K
    if existing.any():
        sel = comp[existing]
        means = np.einsum("ij,ij->i", xm[existing], draw.beta_m[sel])
        out[existing] = means + np.sqrt(draw.sig2_m[sel]) * rng.standard_normal(int(existing.sum()))
    fresh = ~existing
    if fresh.any():
        df, loc, scale = nig_predictive_t_params(draw.priors.m_reg, xm[fresh])
        out[fresh] = loc + scale * rng.standard_t(df, size=int(fresh.sum()))
    return out


def _shared_streams(draw: PosteriorDraw, cfg: GCompConfig, rng):
    sub_slot, is_new = _draw_components(draw, cfg.mc_draws, rng, cfg.conditioning)
    c = _draw_covariates(draw, sub_slot, is_new, rng, cfg.conditioning)
    return sub_slot, is_new, c


def _triple(draw: PosteriorDraw, cfg: GCompConfig, rng: np.random.Generator, debug: dict | None = None):
    """E[Y_{1,M1}], E[Y_{1,M0}], E[Y_{0,M0}] for one posterior state."""
    sub_slot, is_new, c = _shared_streams(draw, cfg, rng)
    if debug is not None:
        debug["sub_slot"] = sub_slot
        debug["is_new"] = is_new
        debug["c"] = c
    if not draw.include_v:
        m1 = _draw_mediator(draw, None, 1, c, rng)
        e11_d = expected_y_batch(draw, m1, None, 1, c)
        m0 = _draw_mediator(draw, None, 0, c, rng)
        e10_d = expected_y_batch(draw, m0, None, 1, c)
        e00_d = expected_y_batch(draw, m0, None, 0, c)
        if debug is not None:
            debug["e11_d"], debug["e10_d"], debug["e00_d"] = e11_d, e10_d, e00_d
        return float(e11_d.mean()), float(e10_d.mean()), float(e00_d.mean())

    cdf1 = v_mixture_cdf(draw, 1, c)
    cdf0 = v_mixture_cdf(draw, 0, c)
    v1 = cdf1.sample(rng)
    v0 = cdf0.sample(rng)
    m11 = _draw_mediator(draw, v1, 1, c, rng)
    e11_d = expected_y_batch(draw, m11, v1, 1, c)
    rho = draw_rho(cfg.sensitivity, rng, size=cfg.mc_draws)
    v_cf = conditional_copula_draw(v1, cdf1, cdf0, rho, rng, cfg.eps_tol)
    m10 = _draw_mediator(draw, v_cf, 0, c, rng)
    e10_d = expected_y_batch(draw, m10, v1, 1, c)
    m00 = _draw_mediator(draw, v0, 0, c, rng)
    e00_d = expected_y_batch(draw, m00, v0, 0, c)
    if debug is not None:
        debug["v1"], debug["v0"], debug["v_cf"] = v1, v0, v_cf
        debug["e11_d"], debug["e10_d"], debug["e00_d"] = e11_d, e10_d, e00_d
    return float(e11_d.mean()), float(e10_d.mean()), float(e00_d.mean())


def potential_outcome_mean(
    z: int,
    z_prime: int,
    draw: PosteriorDraw,
    cfg: GCompConfig,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo estimate of one potential-outcome mean E[Y_{z, M_{z'}}]."""
    sub_slot, is_new, c = _shared_streams(draw, cfg, rng)
    if not draw.include_v:
        m = _draw_mediator(draw, None, z_prime, c, rng)
        val = float(expected_y_batch(draw, m, None, z, c).mean())
        return draw.y_center + draw.y_scale * val
    cdf_z = v_mixture_cdf(draw, z, c)
    v = cdf_z.sample(rng)
    if z == z_prime:
        m = _draw_mediator(draw, v, z, c, rng)
    else:
        cdf_zp = v_mixture_cdf(draw, z_prime, c)
        rho = draw_rho(cfg.sensitivity, rng, size=cfg.mc_draws)
        v_cf = conditional_copula_draw(v, cdf_z, cdf_zp, rho, rng, cfg.eps_tol)
        m = _draw_mediator(draw, v_cf, z_prime, c, rng)
    val = float(expected_y_batch(draw, m, v, z, c).mean())
    return draw.y_center + draw.y_scale * val


def causal_effects(
    draws,
    cfg: GCompConfig,
    rng: np.random.Generator | int | None = None,
) -> EffectPosterior:
    """NIE/NDE/ATE posteriors across retained states.

    Each state's G-computation uses an independent spawned RNG stream, so
    results are order-independent and reproducible from one seed.
    """
    draws = list(draws)
    if not draws:
        raise ValueError("need at least one posterior draw")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    streams = rng.spawn(len(draws))
    nie = np.empty(len(draws))
    nde = np.empty(len(draws))
    for i, (draw, stream) in enumerate(zip(draws, streams)):
        e11, e10, e00 = _triple(draw, cfg, stream)
        # contrasts on the raw outcome scale (centers cancel)
        nie[i] = draw.y_scale * (e11 - e10)
        nde[i] = draw.y_scale * (e10 - e00)
    return EffectPosterior(nie=nie, nde=nde, ate=nie + nde)


def conditional_causal_effects(
    draws,
    cfg: GCompConfig,
    rng: np.random.Generator | int | None = None,
) -> EffectPosterior:
    """Effects conditional on one baseline covariate value.

    The component-selection masses are tilted by the subcluster density of
    C_j = value, the covariate is pinned to that value, and the remaining
    covariates come from the selected subcluster; the rest of the pipeline is
    unchanged.
    """
    if cfg.conditioning is None:
        raise ValueError("conditional_causal_effects requires cfg.conditioning")
    return causal_effects(draws, cfg, rng)
