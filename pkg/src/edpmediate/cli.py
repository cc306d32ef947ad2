"""Command-line surface: truth tables, replication sweeps, dataset analysis.

Every run writes a ``<out>.manifest.json`` (config hash, seed, versions);
identical manifests reproduce outputs byte-for-byte. Exit codes: 0 success,
2 configuration/usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .config import (
    base_priors,
    chain_config,
    config_hash,
    dump_default_config,
    gcomp_config,
    load_config,
    rho_specs,
)
from .data import DataError, load_csv
from .gcomp import causal_effects, conditional_causal_effects
from .gibbs import run_chain
from .model import ConfigError
from .replication import run_replications
from .scenarios import SCENARIO_IDS, scenario, true_effects

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_manifest(out_path: str, command: str, cfg: dict, seed: int, extra=None):
    import numba
    import scipy

    manifest = {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": int(seed),
        "versions": {
            "edpmediate": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }
    if extra:
        manifest.update(extra)
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_scenarios(text: str):
    if text == "all":
        return list(SCENARIO_IDS)
    sid = int(text)
    if sid not in SCENARIO_IDS:
        raise ConfigError(f"unknown scenario id {sid}")
    return [sid]


def cmd_truth(args) -> int:
    cfg = load_config(args.config)
    sids = _parse_scenarios(args.scenario)
    rows = []
    for sid in sids:
        res = true_effects(scenario(sid), mc_n=args.mc_n, seed=args.seed)
        rows.append((sid, res.nie, res.nde, res.ate, res.se_nie, res.se_nde))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "nie", "nde", "ate", "se_nie", "se_nde"])
        for row in rows:
            writer.writerow([row[0]] + [_fmt(x) for x in row[1:]])
    _write_manifest(args.out, "truth", cfg, args.seed, {"mc_n": args.mc_n, "scenarios": sids})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    sids = _parse_scenarios(args.scenario)
    specs = rho_specs(cfg)
    spec_rho = specs[0]
    all_rows = []
    for sid in sids:
        spec = scenario(sid)
        rows = run_replications(
            spec,
            n=args.n,
            reps=args.reps,
            model=args.model,
            chain_cfg=chain_config(cfg),
            gcomp_cfg=gcomp_config(cfg, spec_rho),
            seed=args.seed,
            truth_mc=int(cfg["simulate"]["truth_mc"]),
            workers=args.threads if args.threads else int(cfg["threads"]),
            parametric_draws=int(cfg["simulate"]["parametric_draws"]),
        )
        all_rows.extend(rows)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "estimand", "truth", "n", "reps", "bias", "mse", "cil", "cp", "failures"]
        )
        for r in all_rows:
            writer.writerow(
                [r.scenario, r.estimand, _fmt(r.truth), r.n, r.reps,
                 _fmt(r.bias), _fmt(r.mse), _fmt(r.ci_length), _fmt(r.coverage), r.failures]
            )
    _write_manifest(
        args.out, "simulate", cfg, args.seed,
        {"scenarios": sids, "n": args.n, "reps": args.reps, "model": args.model},
    )
    return EXIT_OK


def _parse_condition(text, header_names):
    if text is None:
        return None, None
    if "=" in text:
        name, value = text.split("=", 1)
        return name.strip().lower(), float(value)
    return text.strip().lower(), None


def analyze_run(data, cfg: dict, seed: int, condition=None):
    """Library entry point behind ``analyze``; the CLI adds only I/O.

    Returns (results, draws_rows): per rho-spec marginal summaries (and
    conditional blocks when ``condition`` is given) plus the raw per-draw
    effect triples.
    """
    ss = np.random.SeedSequence(seed)
    chain_seed_ss, gcomp_ss = ss.spawn(2)
    chain_seed = int(chain_seed_ss.generate_state(1)[0])
    priors = base_priors(cfg, data.p_c, include_v=True)
    draws = run_chain(data, chain_config(cfg), priors=priors, seed=chain_seed)
    specs = rho_specs(cfg)

    cond_levels = []
    cond_idx = None
    if condition is not None:
        cond_idx, cond_value = condition
        if cond_value is None:
            if not data.c_binary[cond_idx]:
                raise DataError("conditioning without a value requires a binary covariate")
            cond_levels = [0.0, 1.0]
        else:
            cond_levels = [cond_value]

    results = []
    draws_rows = []
    streams = np.random.default_rng(gcomp_ss).spawn(len(specs) * (1 + len(cond_levels)))
    si = 0
    for spec_i, rho_spec in enumerate(specs):
        gcfg = gcomp_config(cfg, rho_spec)
        post = causal_effects(draws, gcfg, streams[si])
        si += 1
        block = {"rho": rho_spec.__dict__ | {"kind": rho_spec.kind}, "marginal": post.summary()}
        for di in range(post.nie.size):
            draws_rows.append(
                (spec_i, "marginal", di, post.nie[di], post.nde[di], post.ate[di])
            )
        if cond_levels:
            block["conditional"] = {}
            for level in cond_levels:
                gcfg_c = gcomp_config(cfg, rho_spec, conditioning=(cond_idx, level))
                post_c = conditional_causal_effects(draws, gcfg_c, streams[si])
                si += 1
                block["conditional"][str(level)] = post_c.summary()
                for di in range(post_c.nie.size):
                    draws_rows.append(
                        (spec_i, f"c{cond_idx}={level:g}", di, post_c.nie[di], post_c.nde[di], post_c.ate[di])
                    )
        results.append(block)
    return results, draws_rows, len(draws)


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    if args.condition is not None:
        cfg["analyze"]["condition"] = args.condition
    data = load_csv(args.data, binary_columns=cfg["analyze"]["binary_columns"])

    condition = None
    cond_text = cfg["analyze"]["condition"]
    if cond_text:
        with open(args.data, newline="") as fh:
            header = [h.strip().lower() for h in next(csv.reader(fh))]
        c_names = header[4:]
        name, value = _parse_condition(cond_text, c_names)
        if name not in c_names:
            raise DataError(f"conditioning column {name!r} not in the CSV header")
        condition = (c_names.index(name), value)

    results, draws_rows, n_draws = analyze_run(data, cfg, args.seed, condition)

    def round6(obj):
        if isinstance(obj, dict):
            return {k: round6(v) for k, v in obj.items()}
        if isinstance(obj, float):
            return float(_fmt(obj))
        return obj

    out = {
        "results": round6(results),
        "n_draws": n_draws,
        "mc_draws": int(cfg["gcomp"]["mc_draws"]),
        "seed": args.seed,
    }
    json_path = args.out + ".json"
    with open(json_path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.draws_out:
        with open(args.draws_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rho_index", "block", "draw", "nie", "nde", "ate"])
            for row in draws_rows:
                writer.writerow([row[0], row[1], row[2]] + [_fmt(x) for x in row[3:]])
    _write_manifest(json_path, "analyze", cfg, args.seed, {"data": args.data})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edpmediate",
        description="Bayesian nonparametric mediation analysis with a post-treatment confounder",
    )
    parser.add_argument("--print-config", action="store_true", help="print the default config and exit")
    sub = parser.add_subparsers(dest="command")

    p_truth = sub.add_parser("truth", help="cross-world ground-truth effects for a scenario")
    p_truth.add_argument("--scenario", required=True, help="scenario id 1..12 or 'all'")
    p_truth.add_argument("--mc-n", type=int, default=10_000_000)
    p_truth.add_argument("--seed", type=int, default=0)
    p_truth.add_argument("--config", default=None)
    p_truth.add_argument("--out", required=True)

    p_sim = sub.add_parser("simulate", help="replication sweep for one scenario and model")
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--model", choices=("edpm", "edpm_no_v", "parametric"), default="edpm")
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=0, help="replication workers (0 = config value)")
    p_sim.add_argument("--out", required=True)

    p_an = sub.add_parser("analyze", help="fit a CSV dataset and report effect posteriors")
    p_an.add_argument("--data", required=True)
    p_an.add_argument("--config", default=None)
    p_an.add_argument("--seed", type=int, default=0)
    p_an.add_argument("--condition", default=None, help="covariate name or name=value")
    p_an.add_argument("--draws-out", default=None, help="optional CSV of per-draw effect triples")
    p_an.add_argument("--out", required=True, help="output prefix (writes <out>.json)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_config:
        sys.stdout.write(dump_default_config())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        if args.command == "truth":
            return cmd_truth(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_analyze(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
