"""Bayesian nonparametric causal mediation with a post-treatment confounder.

Fits an enriched Dirichlet process mixture to (outcome, mediator,
post-treatment confounder, treatment, baseline confounders), then turns the
posterior into natural direct/indirect/total effect posteriors by Monte-Carlo
G-computation with a Gaussian-copula sensitivity parameter for the
cross-world confounder pair. Includes a twelve-scenario simulation harness
and two comparison estimators.
"""

__version__ = "0.1.0"

from .conjugate import BetaPrior, NigPrior
from .copula import MixtureCdf, SensitivitySpec, conditional_copula_draw, draw_rho
from .data import MediationData, ObservedRecord, load_csv
from .gcomp import (
    EffectPosterior,
    GCompConfig,
    causal_effects,
    conditional_causal_effects,
    potential_outcome_mean,
)
from .gibbs import run_chain
from .model import BasePriors, EdpmConfig, PosteriorDraw, default_base_priors
from .baselines import fit_edpm_no_v, fit_parametric, parametric_causal_effects
from .replication import MetricsRow, run_replications
from .scenarios import SCENARIO_IDS, generate_dataset, scenario, true_effects

__all__ = [
    "__version__",
    "BetaPrior",
    "NigPrior",
    "MixtureCdf",
    "SensitivitySpec",
    "conditional_copula_draw",
    "draw_rho",
    "MediationData",
    "ObservedRecord",
    "load_csv",
    "EffectPosterior",
    "GCompConfig",
    "causal_effects",
    "conditional_causal_effects",
    "potential_outcome_mean",
    "run_chain",
    "BasePriors",
    "EdpmConfig",
    "PosteriorDraw",
    "default_base_priors",
    "fit_edpm_no_v",
    "fit_parametric",
    "parametric_causal_effects",
    "MetricsRow",
    "run_replications",
    "SCENARIO_IDS",
    "generate_dataset",
    "scenario",
    "true_effects",
]
