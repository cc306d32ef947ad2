"""Posterior simulation: chain state, sweeps and snapshot collection.

A sweep is impute-missing -> reallocate subjects -> refresh parameters. The
per-subject reallocation follows the auxiliary-component scheme at both
levels of the nested partition: a removed subject can join an existing
cluster/subcluster, a fresh auxiliary subcluster inside an existing cluster,
or a fresh auxiliary cluster; singleton parameters are recycled into the
first auxiliary slot. Retained states are deep snapshots, so downstream
effect estimation never touches a live chain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import DataError, MediationData
from .model import BasePriors, ConfigError, EdpmConfig, PosteriorDraw, default_base_priors, joint_loglik

__all__ = ["EdpmState", "run_chain", "update_allocations", "update_parameters", "impute_missing"]


def _reg_kernel_args(prior):
    cov = np.linalg.inv(prior.precision)
    cov_chol = np.linalg.cholesky(cov)
    quad0 = float(prior.mean @ prior.precision @ prior.mean)
    return (
        np.ascontiguousarray(prior.precision),
        np.ascontiguousarray(prior.mean),
        quad0,
        float(prior.shape),
        float(prior.rate),
        np.ascontiguousarray(cov_chol),
    )


@dataclass
class EdpmState:
    """Mutable chain state over flat capacity arrays."""

    data: MediationData
    cfg: EdpmConfig
    priors: BasePriors
    # working data copies (missing entries hold current imputations)
    y: np.ndarray
    m: np.ndarray
    v: np.ndarray
    z: np.ndarray
    C: np.ndarray
    bin_idx: np.ndarray
    cont_idx: np.ndarray
    c_mis_bin: np.ndarray
    any_mis: np.ndarray
    y_label: np.ndarray
    x_label: np.ndarray
    beta_y: np.ndarray
    sig2_y: np.ndarray
    beta_m: np.ndarray
    sig2_m: np.ndarray
    n_l: np.ndarray
    owner: np.ndarray
    beta_v: np.ndarray
    sig2_v: np.ndarray
    pi: np.ndarray
    mu: np.ndarray
    tau2: np.ndarray
    n_rl: np.ndarray
    K: int
    S: int
    fallback_draws: int = 0

    @classmethod
    def initialize(cls, data: MediationData, cfg: EdpmConfig, priors: BasePriors) -> "EdpmState":
        n, p_c = data.n, data.p_c
        include_v = cfg.include_v
        y = data.y.copy()
        m = data.m.copy()
        v = data.v.copy()
        z = data.z.astype(np.float64)
        C = data.c.copy()

        # deterministic starting values for missing fields; the first sweep
        # replaces them with full-conditional draws
        for arr, mis in ((y, data.y_mis), (m, data.m_mis), (v, data.v_mis)):
            if mis.any():
                obs = arr[~mis]
                arr[mis] = float(np.mean(obs)) if obs.size else 0.0
        bin_idx = np.where(data.c_binary)[0].astype(np.int64)
        cont_idx = np.where(~data.c_binary)[0].astype(np.int64)
        c_mis_bin = data.c_mis[:, bin_idx].copy()
        for bpos, q in enumerate(bin_idx):
            col_mis = c_mis_bin[:, bpos]
            if col_mis.any():
                obs = C[~col_mis, q]
                fill = 1.0 if obs.size and obs.mean() >= 0.5 else 0.0
                C[col_mis, q] = fill
        any_mis = data.y_mis | data.m_mis | (data.v_mis if include_v else False) | c_mis_bin.any(axis=1)

        p_y = (4 if include_v else 3) + p_c
        p_m = (3 if include_v else 2) + p_c
        p_v = 2 + p_c
        nbt = 1 + bin_idx.size
        ncc = cont_idx.size
        cap = n + 2
        state = cls(
            data=data, cfg=cfg, priors=priors,
            y=y, m=m, v=v, z=z, C=C,
            bin_idx=bin_idx, cont_idx=cont_idx, c_mis_bin=c_mis_bin, any_mis=any_mis,
            y_label=np.zeros(n, dtype=np.int64),
            x_label=np.zeros(n, dtype=np.int64),
            beta_y=np.zeros((cap, p_y)), sig2_y=np.ones(cap),
            beta_m=np.zeros((cap, p_m)), sig2_m=np.ones(cap),
            n_l=np.zeros(cap, dtype=np.int64),
            owner=np.zeros(cap, dtype=np.int64),
            beta_v=np.zeros((cap, p_v)), sig2_v=np.ones(cap),
            pi=np.full((cap, nbt), 0.5), mu=np.zeros((cap, max(ncc, 0))),
            tau2=np.ones((cap, max(ncc, 0))),
            n_rl=np.zeros(cap, dtype=np.int64),
            K=1, S=1,
        )
        state.n_l[0] = n
        state.n_rl[0] = n
        state._prior_args()
        update_parameters(state)
        return state

    def _prior_args(self):
        self._y_args = _reg_kernel_args(self.priors.y_reg)
        self._m_args = _reg_kernel_args(self.priors.m_reg)
        if self.cfg.include_v:
            self._v_args = _reg_kernel_args(self.priors.v_reg)
        else:
            p_v = self.beta_v.shape[1]
            dummy = type(self.priors.y_reg)(
                mean=np.zeros(p_v), precision=np.eye(p_v), shape=2.0, rate=1.0
            )
            self._v_args = _reg_kernel_args(dummy)
        self._marg_args = (
            float(self.priors.binary.a),
            float(self.priors.binary.b),
            float(self.priors.cont.mean[0]),
            float(self.priors.cont.precision[0, 0]),
            float(self.priors.cont.shape),
            float(self.priors.cont.rate),
        )
        n = self.y.size
        self._Xy = np.empty((n, self.beta_y.shape[1]))
        self._Xm = np.empty((n, self.beta_m.shape[1]))
        self._Xv = np.empty((n, self.beta_v.shape[1]))

    @property
    def any_missing(self) -> bool:
        return bool(self.any_mis.any())

    def recount(self):
        """Recompute partition counts from the labels."""
        K = int(self.y_label.max()) + 1
        S = int(self.x_label.max()) + 1
        n_l = np.bincount(self.y_label, minlength=K)
        n_rl = np.bincount(self.x_label, minlength=S)
        owner = np.full(S, -1, dtype=np.int64)
        for i in range(self.y_label.size):
            owner[self.x_label[i]] = self.y_label[i]
        return K, S, n_l, n_rl, owner

    def validate(self):
        """Raise unless cached counts, labels and parameter domains agree."""
        K, S, n_l, n_rl, owner = self.recount()
        if K != self.K or S != self.S:
            raise AssertionError("cached cluster counts disagree with labels")
        if not np.array_equal(n_l, self.n_l[:K]) or not np.array_equal(n_rl, self.n_rl[:S]):
            raise AssertionError("cached sizes disagree with labels")
        if not np.array_equal(owner, self.owner[:S]):
            raise AssertionError("subcluster ownership disagrees with labels")
        if np.any(n_l <= 0) or np.any(n_rl <= 0):
            raise AssertionError("empty cluster survived compaction")
        if np.any(self.sig2_y[:K] <= 0) or np.any(self.sig2_m[:K] <= 0):
            raise AssertionError("non-positive residual variance")
        if self.cfg.include_v and np.any(self.sig2_v[:S] <= 0):
            raise AssertionError("non-positive confounder variance")

    def snapshot(self, copy: bool = True) -> PosteriorDraw:
        take = (lambda a: a.copy()) if copy else (lambda a: a)
        K, S = self.K, self.S
        imputed = None
        if self.data.has_missing():
            imputed = {"y": take(self.y), "m": take(self.m), "v": take(self.v), "c": take(self.C)}
        return PosteriorDraw(
            n=self.y.size,
            alpha_theta=self.cfg.alpha_theta,
            alpha_omega=self.cfg.alpha_omega,
            include_v=self.cfg.include_v,
            priors=self.priors,
            c_binary=self.data.c_binary,
            c_center=self.data.c_center,
            c_scale=self.data.c_scale,
            beta_y=take(self.beta_y[:K]), sig2_y=take(self.sig2_y[:K]),
            beta_m=take(self.beta_m[:K]), sig2_m=take(self.sig2_m[:K]),
            n_l=take(self.n_l[:K]),
            owner=take(self.owner[:S]),
            beta_v=take(self.beta_v[:S]) if self.cfg.include_v else None,
            sig2_v=take(self.sig2_v[:S]) if self.cfg.include_v else None,
            pi=take(self.pi[:S]), mu=take(self.mu[:S]), tau2=take(self.tau2[:S]),
            n_rl=take(self.n_rl[:S]),
            y_label=take(self.y_label), x_label=take(self.x_label),
            y_center=self.data.y_center, y_scale=self.data.y_scale,
            imputed=imputed,
        )


def update_allocations(state: EdpmState, seed: int | None = None) -> EdpmState:
    """Full reallocation scan over subjects (kernel-side randomness)."""
    if seed is not None:
        _kernels.seed_kernels(seed)
    y_args, m_args, v_args = state._y_args, state._m_args, state._v_args
    K, S = _kernels.alloc_sweep(
        state.y, state.m, state.v, state.z, state.C, state.bin_idx, state.cont_idx,
        state.y_label, state.x_label,
        state.beta_y, state.sig2_y, state.beta_m, state.sig2_m, state.n_l,
        state.owner, state.beta_v, state.sig2_v, state.pi, state.mu, state.tau2, state.n_rl,
        state.K, state.S,
        state.cfg.alpha_theta, state.cfg.alpha_omega, state.cfg.neal_m_aux, state.cfg.include_v,
        y_args[1], y_args[5], y_args[3], y_args[4],
        m_args[1], m_args[5], m_args[3], m_args[4],
        v_args[1], v_args[5], v_args[3], v_args[4],
        *state._marg_args,
    )
    state.K, state.S = int(K), int(S)
    return state


def update_parameters(state: EdpmState, seed: int | None = None) -> EdpmState:
    """Conjugate refresh of every cluster/subcluster parameter block."""
    if seed is not None:
        _kernels.seed_kernels(seed)
    fb = _kernels.refresh_sweep(
        state.y, state.m, state.v, state.z, state.C, state.bin_idx, state.cont_idx,
        state.y_label, state.x_label,
        state.beta_y, state.sig2_y, state.beta_m, state.sig2_m, state.n_l,
        state.owner, state.beta_v, state.sig2_v, state.pi, state.mu, state.tau2, state.n_rl,
        state.K, state.S, state.cfg.include_v,
        *state._y_args, *state._m_args, *state._v_args,
        *state._marg_args,
        state._Xy, state._Xm, state._Xv,
    )
    state.fallback_draws += int(fb)
    return state


def impute_missing(state: EdpmState, seed: int | None = None) -> EdpmState:
    """Redraw missing (y, m, v, binary c) from their full conditionals."""
    if seed is not None:
        _kernels.seed_kernels(seed)
    if not state.any_missing:
        return state
    _kernels.impute_sweep(
        state.y, state.m, state.v, state.z, state.C, state.bin_idx, state.cont_idx,
        state.data.y_mis, state.data.m_mis, state.data.v_mis, state.c_mis_bin, state.any_mis,
        state.y_label, state.x_label,
        state.beta_y, state.sig2_y, state.beta_m, state.sig2_m,
        state.owner, state.beta_v, state.sig2_v, state.pi, state.mu, state.tau2,
        state.cfg.include_v,
    )
    return state


def run_chain(
    data: MediationData,
    cfg: EdpmConfig,
    priors: BasePriors | None = None,
    seed: int = 0,
    trace_path=None,
) -> list[PosteriorDraw]:
    """Run one chain and return the retained posterior snapshots.

    Deterministic in ``seed``. A sweep is impute -> reallocate -> refresh;
    after burn-in every ``thin``-th state is retained, ``keep`` states total.
    When ``trace_path`` is given, (sweep, K, joint log likelihood) rows are
    written as CSV for mixing diagnostics.
    """
    if data.n == 0:
        raise DataError("cannot fit an empty dataset")
    if not isinstance(cfg, EdpmConfig):
        raise ConfigError("cfg must be an EdpmConfig")
    if data.c_mis[:, ~data.c_binary].any():
        raise DataError("missing continuous covariates are not supported")
    if priors is None:
        priors = default_base_priors(data.p_c, cfg.include_v)
    priors.with_dims(data.p_c, cfg.include_v)

    kernel_seed = int(np.random.SeedSequence(seed).generate_state(1)[0] % (2**31 - 1))
    _kernels.seed_kernels(kernel_seed)
    state = EdpmState.initialize(data, cfg, priors)

    draws: list[PosteriorDraw] = []
    trace_rows = []
    total = cfg.burn_in + cfg.keep * cfg.thin
    for t in range(total):
        if state.any_missing:
            impute_missing(state)
        update_allocations(state)
        update_parameters(state)
        if trace_path is not None:
            trace_rows.append((t, state.K, joint_loglik(state.snapshot(copy=False), data)))
        if t >= cfg.burn_in and (t - cfg.burn_in) % cfg.thin == cfg.thin - 1:
            draws.append(state.snapshot())
    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sweep", "k_clusters", "joint_loglik"])
            writer.writerows(trace_rows)
    return draws
