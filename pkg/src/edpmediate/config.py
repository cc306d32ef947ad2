"""Run configuration: defaults, YAML loading, validation and hashing.

A single nested mapping covers priors, sampler settings, Monte-Carlo
settings, the sensitivity-parameter specs and analyze-time schema options.
Unknown keys are rejected so config typos fail fast.
"""

from __future__ import annotations

import hashlib
import json

import yaml

from .copula import SensitivitySpec
from .gcomp import GCompConfig
from .model import BasePriors, ConfigError, EdpmConfig, default_base_priors

__all__ = [
    "DEFAULTS",
    "load_config",
    "dump_default_config",
    "config_hash",
    "chain_config",
    "base_priors",
    "gcomp_config",
    "rho_specs",
]

DEFAULTS = {
    "priors": {
        "reg_scale": 50.0,
        "reg_shape": 2.0,
        "reg_rate": None,
        "y_rate": 0.02,
        "m_rate": 0.2,
        "v_rate": 0.2,
        "beta_a": 1.0,
        "beta_b": 1.0,
        "cont_mean": 0.0,
        "cont_precision": 1.0,
        "cont_shape": 2.0,
        "cont_rate": 1.0,
    },
    "chain": {
        "alpha_theta": 1.0,
        "alpha_omega": 1.0,
        "neal_m_aux": 3,
        "burn_in": 5000,
        "keep": 500,
        "thin": 10,
    },
    "gcomp": {"mc_draws": 500, "eps_tol": 1.0e-8},
    "rho": [{"kind": "fixed", "value": 0.0}],
    "analyze": {"binary_columns": None, "condition": None},
    "simulate": {"truth_mc": 10_000_000, "parametric_draws": 500},
    "threads": 1,
}


def _merge(base, override, path=""):
    if not isinstance(override, dict):
        raise ConfigError(f"config section {path or '<root>'} must be a mapping")
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and key != "analyze":
            out[key] = _merge(base[key], value, path + key + ".")
        elif key == "analyze":
            out[key] = _merge(base[key], value, path + key + ".") if isinstance(value, dict) else value
        else:
            out[key] = value
    return out


def load_config(path=None) -> dict:
    """Defaults deep-merged with an optional YAML file."""
    if path is None:
        return json.loads(json.dumps(DEFAULTS))
    with open(path) as fh:
        user = yaml.safe_load(fh) or {}
    return _merge(DEFAULTS, user)


def dump_default_config() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def chain_config(cfg: dict, include_v: bool = True) -> EdpmConfig:
    ch = cfg["chain"]
    try:
        return EdpmConfig(
            alpha_theta=float(ch["alpha_theta"]),
            alpha_omega=float(ch["alpha_omega"]),
            neal_m_aux=int(ch["neal_m_aux"]),
            burn_in=int(ch["burn_in"]),
            keep=int(ch["keep"]),
            thin=int(ch["thin"]),
            include_v=include_v,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid chain config: {exc}") from exc


def base_priors(cfg: dict, p_c: int, include_v: bool = True) -> BasePriors:
    pr = cfg["priors"]
    try:
        kwargs = {k: (None if v is None else float(v)) for k, v in pr.items()}
        return default_base_priors(p_c, include_v=include_v, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid prior config: {exc}") from exc


def rho_specs(cfg: dict) -> list[SensitivitySpec]:
    specs = []
    entries = cfg["rho"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError("rho must be a non-empty list of sensitivity specs")
    for entry in entries:
        kind = entry.get("kind")
        try:
            if kind == "fixed":
                specs.append(SensitivitySpec("fixed", value=float(entry["value"])))
            elif kind == "uniform":
                specs.append(SensitivitySpec("uniform", lo=float(entry["lo"]), hi=float(entry["hi"])))
            elif kind == "triangular":
                specs.append(
                    SensitivitySpec(
                        "triangular", a=float(entry["a"]), c=float(entry["c"]), b=float(entry["b"])
                    )
                )
            else:
                raise ConfigError(f"unknown rho kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid rho spec {entry!r}: {exc}") from exc
    return specs


def gcomp_config(cfg: dict, sensitivity: SensitivitySpec, conditioning=None) -> GCompConfig:
    gc = cfg["gcomp"]
    try:
        return GCompConfig(
            mc_draws=int(gc["mc_draws"]),
            sensitivity=sensitivity,
            eps_tol=float(gc["eps_tol"]),
            conditioning=conditioning,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid gcomp config: {exc}") from exc
