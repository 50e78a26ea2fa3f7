"""Command-line entry point: ``driftlab <command> [options]``.

Every command takes ``--config FILE`` (JSON, see README) plus flags that
override individual config keys. Exit status: 0 on success, 1 when a
verification suite fails, 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import drift, oracle
from .core import BitString, state_levels, state_sides
from .engine import EaConfig, batch_run
from .errors import ConfigError, DriftLabError
from .experiments import (
    ExperimentConfig,
    cutoff_estimate,
    invariant_distribution_check,
    rows_to_csv,
    scaling_rows,
)
from .fitness import FitnessFunction, check_linear_like, check_monotonic

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
SUITES = ("theorem1", "theorem2", "theorem3", "theorem4", "lemmas", "theorem6", "all")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", help="write the main output here instead of stdout")
    p.add_argument("--no-header-timestamp", action="store_true",
                   help="omit the timestamp comment line from CSV output")
    p.add_argument("--fitness", "--kind", dest="fitness",
                   help="onemax, binval, linear, nonlinear, random_linear")
    p.add_argument("--weights", help="comma-separated weights for linear fitness")
    p.add_argument("--n", dest="n_grid", help="n or comma-separated n grid")
    p.add_argument("--N", dest="N_grid", help="N or comma-separated N grid")
    p.add_argument("--R", dest="replicates", type=int, help="replicates")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="driftlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="batch simulation, one CSV row per run")
    _common(p)
    p = sub.add_parser("oracle", help="exact hitting times and drift table")
    _common(p)
    p.add_argument("--distance", default="unit")
    p.add_argument("--export-model", help="write the transition triplets CSV here")
    p = sub.add_parser("verify", help="drift theorem and lemma suites")
    _common(p)
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--distance", default="unit")
    p = sub.add_parser("check-fitness", help="monotonic and linear-like checks")
    _common(p)
    p = sub.add_parser("scaling", help="scaling sweep CSV")
    _common(p)
    p.add_argument("--mode", choices=("simulate", "oracle", "both"))
    p = sub.add_parser("cutoff", help="cut-off population size estimate")
    _common(p)
    p.add_argument("--C", type=float)
    p.add_argument("--mode", choices=("simulate", "oracle"))
    p = sub.add_parser("invariants", help="side-mass and bit-marginal invariants")
    _common(p)
    p.add_argument("--horizon", type=int)
    return ap


def _grid(text: str) -> List[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for short, long in (("n", "n_grid"), ("N", "N_grid"), ("R", "replicates")):
            if short in data:
                data[long] = data.pop(short)
        if isinstance(data.get("fitness"), str):
            data["fitness"] = {"kind": data["fitness"]}
    if args.fitness:
        data["fitness"] = {"kind": args.fitness}
    if args.weights:
        try:
            w = [json.loads(v) for v in args.weights.split(",")]
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad weights {args.weights!r}") from exc
        data["fitness"] = {"kind": "linear", "weights": w}
        data.setdefault("n_grid", [len(w)])
    if args.n_grid:
        data["n_grid"] = _grid(args.n_grid)
    if args.N_grid:
        data["N_grid"] = _grid(args.N_grid)
    for key in ("replicates", "seed", "out"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    for key in ("mode", "C", "horizon"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    fit = data.get("fitness")
    if isinstance(fit, dict) and "n_grid" not in data:
        if "n" in fit:
            data["n_grid"] = [fit["n"]]
        elif "weights" in fit:
            data["n_grid"] = [len(fit["weights"])]
    return ExperimentConfig.from_dict(data)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(rows, header, timestamp: bool) -> str:
    from datetime import datetime, timezone
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _single(cfg: ExperimentConfig):
    return cfg.fitness_for(cfg.n_grid[0]), cfg.N_grid[0]


# commands --------------------------------------------------------------------


def cmd_run(args, cfg):
    rows = []
    for n in cfg.n_grid:
        f = cfg.fitness_for(n)
        for N in cfg.N_grid:
            stats = batch_run(EaConfig(f, N, cfg.max_generations), cfg.replicates, cfg.seed)
            for i in range(stats.runs):
                g = int(stats.generations[i])
                rows.append([f.label, n, N, cfg.seed, i, int(stats.seeds[i]), g, g * N,
                             int(bool(stats.hits[i]))])
            print(stats.to_json(), file=sys.stderr)
    header = ["fitness", "n", "N", "master_seed", "run", "seed", "generations",
              "evaluations", "hit_optimum"]
    _emit(_csv(rows, header, not args.no_header_timestamp), cfg.out)
    return EXIT_OK


def cmd_oracle(args, cfg):
    f, N = _single(cfg)
    model = oracle.build_model(f, N)
    ht = oracle.exact_hitting_time(model)
    d = drift.make_distance(args.distance, f.n, N)
    table = oracle.drift_table(model, d)
    levels, sides = state_levels(f.n), state_sides(f.n)
    names = {0: "right", 1: "left_heavy", 2: "optimal"}
    rows = []
    for i in range(1 << f.n):
        rows.append([str(BitString.from_index(i, f.n)), int(levels[i]), names[int(sides[i])],
                     repr(float(ht.g[i])), _num(table.delta[i]), _num(table.positive[i]),
                     _num(table.negative[i])])
    header = ["state", "level", "side", "g", "delta", "delta_pos", "delta_neg"]
    _emit(_csv(rows, header, not args.no_header_timestamp), cfg.out)
    if args.export_model:
        Path(args.export_model).write_text(model.to_triplets_csv())
    print(json.dumps({"fitness": f.label, "n": f.n, "N": N, "g_uniform": ht.g_uniform}),
          file=sys.stderr)
    return EXIT_OK


def _num(v) -> str:
    return "" if np.isnan(v) else repr(float(v))


def cmd_verify(args, cfg):
    reports = []
    ok = True
    suites = SUITES[:-1] if args.suite == "all" else (args.suite,)
    for n in cfg.n_grid:
        f = cfg.fitness_for(n)
        for N in cfg.N_grid:
            model = oracle.build_model(f, N)
            d = drift.make_distance(args.distance, n, N)
            for suite in suites:
                rep = _run_suite(suite, f, N, model, d)
                good = rep.holds if isinstance(rep, drift.LemmaReport) else rep.satisfied
                ok &= bool(good)
                entry = {"suite": suite, "fitness": f.label, "n": n, "N": N}
                if suite not in ("lemmas", "theorem6"):
                    entry["distance"] = d.kind.value
                entry.update(rep.to_dict())
                reports.append(entry)
    _emit(json.dumps(reports, indent=2) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_FAILED


def _run_suite(suite, f, N, model, d):
    if suite == "theorem1":
        return drift.verify_upper_bound_theorem(model, d, variant="pointwise")
    if suite == "theorem2":
        return drift.verify_lower_bound_theorem(model, d, variant="pointwise")
    if suite == "theorem3":
        return drift.verify_upper_bound_theorem(model, d)
    if suite == "theorem4":
        return drift.verify_lower_bound_theorem(model, d)
    if suite == "lemmas":
        return drift.verify_lemma_inequalities(f, N, model=model)
    return drift.linearlike_constant_check(model)


def cmd_check_fitness(args, cfg):
    out = []
    for n in cfg.n_grid:
        f = cfg.fitness_for(n)
        for rep in (check_monotonic(f), check_linear_like(f)):
            out.append(f"{f.label} n={n}: {rep.describe()}")
    _emit("\n".join(out) + "\n", cfg.out)
    return EXIT_OK


def cmd_scaling(args, cfg):
    _emit(rows_to_csv(scaling_rows(cfg), not args.no_header_timestamp), cfg.out)
    return EXIT_OK


def cmd_cutoff(args, cfg):
    results = []
    mode = cfg.mode if cfg.mode in ("simulate", "oracle") else "simulate"
    for n in cfg.n_grid:
        est = cutoff_estimate(cfg.fitness_for(n), n, cfg.N_grid, cfg.C, cfg.replicates,
                              cfg.seed, mode=mode)
        results.append(est.to_dict())
    _emit(json.dumps(results, indent=2) + "\n", cfg.out)
    return EXIT_OK


def cmd_invariants(args, cfg):
    results = []
    ok = True
    for n in cfg.n_grid:
        f = cfg.fitness_for(n)
        for N in cfg.N_grid:
            rep = invariant_distribution_check(f, N, n, cfg.horizon, seed=cfg.seed)
            ok &= rep.holds
            results.append(rep.to_dict())
    _emit(json.dumps(results, indent=2) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "run": cmd_run,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
    "check-fitness": cmd_check_fitness,
    "scaling": cmd_scaling,
    "cutoff": cmd_cutoff,
    "invariants": cmd_invariants,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, DriftLabError, ValueError) as exc:
        print(f"driftlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
