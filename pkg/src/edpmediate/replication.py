"""Replication sweeps: generate, fit, estimate, and aggregate error metrics.

Each replication is fully determined by (master seed, replication index), so
results are identical whether replications run sequentially or across a
process pool.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import fit_parametric, parametric_causal_effects
from .gcomp import GCompConfig, causal_effects
from .gibbs import run_chain
from .model import EdpmConfig
from .scenarios import ScenarioSpec, TruthResult, generate_dataset, true_effects

__all__ = ["MetricsRow", "run_replications", "MODELS"]

MODELS = ("edpm", "edpm_no_v", "parametric")

ESTIMANDS = ("nie", "nde", "ate")


@dataclass(frozen=True)
class MetricsRow:
    """One (scenario, estimand) row of a replication table."""

    scenario: int
    estimand: str
    truth: float
    n: int
    reps: int
    bias: float
    mse: float
    ci_length: float
    coverage: float
    failures: int


def _rep_seeds(master_seed: int, rep: int):
    ss = np.random.SeedSequence([int(master_seed), int(rep)])
    data_ss, fit_ss, gc_ss = ss.spawn(3)
    return (
        int(data_ss.generate_state(1)[0]),
        int(fit_ss.generate_state(1)[0]),
        gc_ss,
    )


def _one_replication(args):
    spec, n, model, chain_cfg, gcomp_cfg, master_seed, rep, parametric_draws = args
    data_seed, fit_seed, gc_ss = _rep_seeds(master_seed, rep)
    sim = generate_dataset(spec, n, data_seed)
    rng = np.random.default_rng(gc_ss)
    if model == "parametric":
        fit = fit_parametric(sim.data, n_draws=parametric_draws, seed=fit_seed)
        post = parametric_causal_effects(fit, gcomp_cfg, rng)
    else:
        cfg = chain_cfg if model == "edpm" else replace(chain_cfg, include_v=False)
        draws = run_chain(sim.data, cfg, seed=fit_seed)
        post = causal_effects(draws, gcomp_cfg, rng)
    return post.summary()


def run_replications(
    spec: ScenarioSpec,
    n: int,
    reps: int,
    model: str,
    chain_cfg: EdpmConfig,
    gcomp_cfg: GCompConfig,
    seed: int = 0,
    truth: TruthResult | None = None,
    truth_mc: int = 2_000_000,
    workers: int = 1,
    parametric_draws: int = 500,
    estimator=None,
    progress=None,
) -> list[MetricsRow]:
    """Bias / MSE / CI-length / coverage over seeded replications.

    ``estimator`` (tests only) overrides the fit: a callable mapping a
    simulated dataset and replication index to a summary dict. Failed
    replications are recorded in ``failures`` and excluded from aggregates.
    """
    if model not in MODELS and estimator is None:
        raise ValueError(f"model must be one of {MODELS}")
    if truth is None:
        truth = true_effects(spec, mc_n=truth_mc, seed=1_000_003)

    summaries = []
    failures = 0
    if estimator is not None:
        for rep in range(reps):
            summaries.append(estimator(generate_dataset(spec, n, _rep_seeds(seed, rep)[0]), rep))
            if progress:
                progress(rep + 1, reps)
    else:
        tasks = [
            (spec, n, model, chain_cfg, gcomp_cfg, seed, rep, parametric_draws)
            for rep in range(reps)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for i, result in enumerate(pool.map(_one_replication, tasks)):
                    summaries.append(result)
                    if progress:
                        progress(i + 1, reps)
        else:
            for i, task in enumerate(tasks):
                try:
                    summaries.append(_one_replication(task))
                except Exception:  # noqa: BLE001 - recorded and surfaced in the row
                    failures += 1
                    summaries.append(None)
                if progress:
                    progress(i + 1, reps)

    truth_by_estimand = dict(zip(ESTIMANDS, truth.as_tuple()))
    rows = []
    for estimand in ESTIMANDS:
        tv = truth_by_estimand[estimand]
        est = np.array([s[estimand]["mean"] for s in summaries if s is not None])
        lo = np.array([s[estimand]["lo95"] for s in summaries if s is not None])
        hi = np.array([s[estimand]["hi95"] for s in summaries if s is not None])
        degenerate = np.all(hi - lo <= 0)
        rows.append(
            MetricsRow(
                scenario=spec.id,
                estimand=estimand,
                truth=float(tv),
                n=n,
                reps=reps,
                bias=float(np.mean(est) - tv),
                mse=float(np.mean((est - tv) ** 2)),
                ci_length=float(np.mean(hi - lo)),
                coverage=float("nan") if degenerate else float(np.mean((lo <= tv) & (tv <= hi))),
                failures=failures,
            )
        )
    return rows
