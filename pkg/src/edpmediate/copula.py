"""Gaussian-copula machinery for the cross-world confounder draw.

The counterfactual confounder is sampled by (i) scoring the observed value
through its conditional mixture CDF, (ii) drawing a normal score with mean
rho * score and variance 1 - rho^2, and (iii) pushing the score through the
inverse CDF of the counterfactual-arm mixture. Mixture CDFs combine Gaussian
subcluster components with one Student-t slot for the base-measure
predictive; inversion is bracketing plus bisection (unconditionally
convergent even between well-separated modes).

Everything is vectorized over a batch axis so one call serves all D
Monte-Carlo samples of a G-computation pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, stdtr

__all__ = [
    "SensitivitySpec",
    "MixtureCdf",
    "InversionError",
    "mixture_cdf_eval",
    "invert_mixture_cdf",
    "conditional_copula_draw",
    "draw_rho",
]

logger = logging.getLogger(__name__)

_PROB_CLAMP = 1e-12
_MAX_BRACKET_DOUBLINGS = 60
_MAX_EVALS = 200


class InversionError(RuntimeError):
    """CDF inversion failed to bracket or converge (pathological tails)."""


@dataclass(frozen=True)
class SensitivitySpec:
    """Prior (or fixed value) for the cross-world correlation rho.

    kind 'fixed' uses ``value``; 'uniform' draws on (lo, hi); 'triangular'
    draws on (a, b) with mode c.
    """

    kind: str
    value: float = 0.0
    lo: float = -1.0
    hi: float = 1.0
    a: float = 0.0
    c: float = 0.5
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "triangular"):
            raise ValueError("kind must be fixed, uniform or triangular")
        if self.kind == "fixed" and not abs(self.value) < 1.0:
            raise ValueError("fixed rho must lie inside (-1, 1)")
        if self.kind == "uniform":
            if not (-1.0 <= self.lo < self.hi <= 1.0):
                raise ValueError("uniform support must satisfy -1 <= lo < hi <= 1")
        if self.kind == "triangular":
            if not (-1.0 <= self.a <= self.c <= self.b <= 1.0) or self.a == self.b:
                raise ValueError("triangular support must satisfy -1 <= a <= c <= b <= 1")


def draw_rho(spec: SensitivitySpec, rng: np.random.Generator, size=None):
    """Draw the sensitivity parameter; results are clipped inside (-1, 1)."""
    if spec.kind == "fixed":
        out = np.full(size, spec.value) if size is not None else spec.value
        return out
    if spec.kind == "uniform":
        out = rng.uniform(spec.lo, spec.hi, size=size)
    else:
        out = rng.triangular(spec.a, spec.c, spec.b, size=size)
    return np.clip(out, -1.0 + 1e-12, 1.0 - 1e-12)


@dataclass
class MixtureCdf:
    """Batched mixture CDF: Gaussian components plus an optional Student-t slot.

    ``weights`` has one row per batch element and sums to 1 per row; when a
    t slot is present it occupies the last weight column.
    """

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray
    t_df: float | None = None
    t_loc: np.ndarray | None = None
    t_scale: np.ndarray | None = None
    last_eval_count: int = 0

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        self.sds = np.asarray(self.sds, dtype=float)
        if np.any(self.weights < -1e-12):
            raise ValueError("mixture weights must be non-negative")
        tot = self.weights.sum(axis=1)
        if np.any(np.abs(tot - 1.0) > 1e-6):
            raise ValueError("mixture weights must sum to 1")
        self.weights = self.weights / tot[:, None]
        n_norm = self.means.shape[1]
        expected = n_norm + (1 if self.t_df is not None else 0)
        if self.weights.shape[1] != expected:
            raise ValueError("weight count does not match component count")
        if np.any(np.asarray(self.sds) <= 0):
            raise ValueError("component variances must be positive")
        if self.t_df is not None:
            self.t_loc = np.broadcast_to(
                np.asarray(self.t_loc, dtype=float), (self.batch,)
            )
            self.t_scale = np.broadcast_to(
                np.asarray(self.t_scale, dtype=float), (self.batch,)
            )
            if np.any(self.t_scale <= 0):
                raise ValueError("t scale must be positive")

    @property
    def batch(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def from_components(cls, weights, means, variances, t_df=None, t_loc=0.0, t_scale=1.0):
        """Single-batch constructor from component lists."""
        return cls(
            weights=np.atleast_2d(np.asarray(weights, dtype=float)),
            means=np.atleast_2d(np.asarray(means, dtype=float)),
            sds=np.sqrt(np.asarray(variances, dtype=float)),
            t_df=t_df,
            t_loc=np.atleast_1d(t_loc) if t_df is not None else None,
            t_scale=np.atleast_1d(t_scale) if t_df is not None else None,
        )

    def _eval_rows(self, v: np.ndarray) -> np.ndarray:
        z = (v[:, None] - self.means) / self.sds
        n_norm = self.means.shape[1]
        out = np.einsum("bj,bj->b", self.weights[:, :n_norm], ndtr(z))
        if self.t_df is not None:
            out = out + self.weights[:, -1] * stdtr(self.t_df, (v - self.t_loc) / self.t_scale)
        return out

    def eval(self, v) -> np.ndarray:
        """CDF values; broadcasts a single-batch mixture over a vector of points."""
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        if self.batch == 1 and v_arr.size > 1:
            z = (v_arr[:, None] - self.means[0]) / self.sds
            n_norm = self.means.shape[1]
            out = ndtr(z) @ self.weights[0, :n_norm]
            if self.t_df is not None:
                out = out + self.weights[0, -1] * stdtr(
                    self.t_df, (v_arr - self.t_loc[0]) / self.t_scale[0]
                )
            return out
        if v_arr.size != self.batch:
            raise ValueError("point count must match the batch size")
        return self._eval_rows(v_arr)

    def mean(self) -> np.ndarray:
        n_norm = self.means.shape[1]
        out = np.einsum("bj,bj->b", self.weights[:, :n_norm], self.means)
        if self.t_df is not None and self.t_df > 1:
            out = out + self.weights[:, -1] * self.t_loc
        return out

    def spread(self) -> np.ndarray:
        """A coarse per-row scale used to seed the inversion bracket."""
        hi = np.max(self.means + 8.0 * self.sds, axis=1)
        lo = np.min(self.means - 8.0 * self.sds, axis=1)
        if self.t_df is not None:
            hi = np.maximum(hi, self.t_loc + 8.0 * self.t_scale)
            lo = np.minimum(lo, self.t_loc - 8.0 * self.t_scale)
        return lo, hi

    def invert(self, u, eps_tol: float = 1e-8) -> np.ndarray:
        """Solve F(v) = u per row to within eps_tol in CDF distance."""
        u_arr = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
            raise ValueError("inversion target must lie strictly inside (0, 1)")
        if self.batch == 1 and u_arr.size > 1:
            tiled = MixtureCdf(
                weights=np.repeat(self.weights, u_arr.size, axis=0),
                means=np.repeat(self.means, u_arr.size, axis=0),
                sds=self.sds,
                t_df=self.t_df,
                t_loc=None if self.t_df is None else np.repeat(self.t_loc, u_arr.size),
                t_scale=None if self.t_df is None else np.repeat(self.t_scale, u_arr.size),
            )
            out = tiled.invert(u_arr, eps_tol)
            self.last_eval_count = tiled.last_eval_count
            return out

        lo, hi = self.spread()
        evals = 0
        width = hi - lo
        for _ in range(_MAX_BRACKET_DOUBLINGS):
            bad_lo = self._eval_rows(lo) > u_arr
            bad_hi = self._eval_rows(hi) < u_arr
            evals += 2
            if not (bad_lo.any() or bad_hi.any()):
                break
            lo = np.where(bad_lo, lo - width, lo)
            hi = np.where(bad_hi, hi + width, hi)
            width = width * 2.0
        else:
            raise InversionError("failed to bracket the target quantile after 60 doublings")

        mid = 0.5 * (lo + hi)
        while evals < _MAX_EVALS:
            fm = self._eval_rows(mid)
            evals += 1
            err = fm - u_arr
            if np.max(np.abs(err)) < eps_tol:
                self.last_eval_count = evals
                return mid
            hi = np.where(err >= 0.0, mid, hi)
            lo = np.where(err < 0.0, mid, lo)
            mid = 0.5 * (lo + hi)
        raise InversionError("bisection exceeded the 200-evaluation budget")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One draw per batch row (component choice, then component noise)."""
        cum = np.cumsum(self.weights, axis=1)
        comp = np.sum(rng.random(self.batch)[:, None] > cum, axis=1)
        n_norm = self.means.shape[1]
        comp = np.minimum(comp, self.weights.shape[1] - 1)
        rows = np.arange(self.batch)
        is_t = self.t_df is not None
        out = np.empty(self.batch)
        norm_rows = comp < n_norm
        if norm_rows.any():
            comp_n = comp[norm_rows]
            mu_sel = self.means[rows[norm_rows], comp_n]
            if self.sds.ndim == 1:
                sd_sel = self.sds[comp_n]
            else:
                sd_sel = self.sds[rows[norm_rows], comp_n]
            out[norm_rows] = mu_sel + sd_sel * rng.standard_normal(int(norm_rows.sum()))
        t_rows = ~norm_rows
        if t_rows.any():
            if not is_t:
                raise AssertionError("component index out of range")
            out[t_rows] = self.t_loc[t_rows] + self.t_scale[t_rows] * rng.standard_t(
                self.t_df, size=int(t_rows.sum())
            )
        return out


def mixture_cdf_eval(cdf: MixtureCdf, v) -> np.ndarray | float:
    out = cdf.eval(v)
    return float(out[0]) if np.isscalar(v) else out


def invert_mixture_cdf(cdf: MixtureCdf, u, eps_tol: float = 1e-8):
    out = cdf.invert(u, eps_tol)
    return float(out[0]) if np.isscalar(u) else out


def conditional_copula_draw(
    v_observed,
    cdf_same: MixtureCdf,
    cdf_counter: MixtureCdf,
    rho,
    rng: np.random.Generator,
    eps_tol: float = 1e-8,
) -> np.ndarray:
    """Counterfactual confounder draw through the Gaussian copula.

    Draws a normal score with mean rho * score(v) and variance 1 - rho^2 and
    maps it through the counterfactual mixture's inverse CDF. Probabilities
    are clamped away from {0, 1} so extreme observed values keep finite
    scores (the clamp bounds normal scores at about +-7).
    """
    v_arr = np.atleast_1d(np.asarray(v_observed, dtype=float))
    rho_arr = np.broadcast_to(np.asarray(rho, dtype=float), v_arr.shape)
    if np.any(np.abs(rho_arr) >= 1.0):
        raise ValueError("|rho| must be < 1")
    f_same = cdf_same.eval(v_arr)
    n_clamped = int(np.sum((f_same < _PROB_CLAMP) | (f_same > 1.0 - _PROB_CLAMP)))
    if n_clamped:
        logger.info("clamped %d copula scores at the %g probability bound", n_clamped, _PROB_CLAMP)
    f_same = np.clip(f_same, _PROB_CLAMP, 1.0 - _PROB_CLAMP)
    score = ndtri(f_same)
    u_norm = rho_arr * score + np.sqrt(1.0 - rho_arr**2) * rng.standard_normal(v_arr.size)
    u = np.clip(ndtr(u_norm), _PROB_CLAMP, 1.0 - _PROB_CLAMP)
    return cdf_counter.invert(u, eps_tol)
