"""Command-line entry points.

Four subcommands, each reading an optional JSON config, a seed and an output
directory, and writing report.json plus tables/*.csv:

  verify-bounds  randomized bound checks with pass/fail tallies
  simulate       pruning-strategy comparison, correlation probe, ranking quality
  cost-model     FLOPs for one workload plus optional rho/k sweeps
  metrics        metric tables from ranked judgments or raw per-subset values

Exit code is 0 iff every verification tally in the run passes. Wall time is
printed to stdout and deliberately kept out of report.json so identical
configs and seeds produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

import numpy as np

from .cost_model import ArchParams, WorkloadSpec, cost_report
from .errors import ConfigError
from .experiments import (
    run_bound_verification,
    run_correlation_probe,
    run_cost_sweep,
    run_pruning_comparison,
    run_synthetic_ranking,
    write_report,
)
from .linalg import embedding_from_json
from .metrics import FAILURE_LABELS, QueryJudgment, aggregate, evaluate_judgments
from .synthetic import SyntheticConfig

DEFAULTS: dict = {
    "verify-bounds": {
        "trials": 10000,
        "selftest_trials": 2000,
        "selftest_constant": 1.9,
    },
    "simulate": {
        "n_instances": 1000,
        "keep_ratios": [0.1, 0.3, 0.5, 0.7, 0.9],
        "synthetic": {
            "n_images": 8,
            "tokens_per_image": [20, 20],
            "embed_dim": 16,
            "n_query_tokens": 4,
            "planted_per_image": 1,
            "noise_scale": 0.0,
        },
        "correlation": {"n_instances": 200, "n_heads": 4, "attention_noise": 0.5},
        "ranking": {"rho": 0.5, "n_instances": 300, "noise_scale": 1.0, "k_values": [1, 3, 5]},
        "query_embedding_path": None,
    },
    "cost-model": {
        "arch": {
            "layers": 32,
            "width": 4096,
            "c_att": 2.0,
            "c_ffn": 4.0,
            "c_dec": 2.0,
            "c_score": 2.0,
        },
        "workload": {
            "n_text": 512,
            "n_vis": 20480,
            "n_query": 32,
            "k": 20,
            "beta": 1.0,
            "u_reason": 0,
            "rho": 0.5,
            "image_token_counts": None,
        },
        "sweep": {
            "enabled": True,
            "rho_values": [0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            "k_values": [10, 20, 40],
            "n_text": 512,
            "tokens_per_candidate": 1024,
            "n_query": 32,
            "beta": 1.0,
            "u_reason": 0,
        },
    },
    "metrics": {
        "k_values": [1, 3, 5],
        "judgments": None,
        "values_by_subset": None,
    },
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as handle:
            loaded = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return loaded


def _merge(defaults: dict, override: dict, context: str = "config") -> dict:
    """Overlay a user config on the defaults, rejecting unknown keys."""
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        if key not in defaults:
            raise ConfigError(f"unknown {context} key {key!r}; known: {sorted(defaults)}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{context}.{key} must be a JSON object")
            merged[key] = _merge(defaults[key], value, f"{context}.{key}")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _tally_lines(checks: dict) -> list[str]:
    lines = []
    for name, check in checks.items():
        verdict = "PASS" if check["failures"] == 0 else "FAIL"
        lines.append(f"{verdict} {name}: {check['trials']} trials, {check['failures']} failures")
    return lines


def _cmd_verify_bounds(args) -> int:
    cfg = _merge(DEFAULTS["verify-bounds"], _load_config(args.config))
    bounds = run_bound_verification(cfg["trials"], args.seed)
    selftest = run_bound_verification(
        cfg["selftest_trials"], args.seed, error_bound_constant=cfg["selftest_constant"]
    )
    selftest_failures = selftest["checks"]["pruning_error_bound"]["failures"]
    checks_pass = bounds["total_failures"] == 0
    selftest_pass = selftest_failures > 0
    report = {
        "command": "verify-bounds",
        "seed": args.seed,
        "config": cfg,
        "bounds": bounds,
        "selftest": {
            "constant": cfg["selftest_constant"],
            "trials": cfg["selftest_trials"],
            "failures_detected": selftest_failures,
            "pass": selftest_pass,
        },
        "pass": checks_pass and selftest_pass,
    }
    rows = [
        (name, check["trials"], check["failures"])
        for name, check in bounds["checks"].items()
    ]
    path = write_report(args.out, report, {"bound_tallies": (["check", "trials", "failures"], rows)})
    for line in _tally_lines(bounds["checks"]):
        print(line)
    verdict = "PASS" if selftest_pass else "FAIL"
    print(
        f"{verdict} selftest: corrupted constant {cfg['selftest_constant']} "
        f"detected {selftest_failures} violations"
    )
    print(f"report: {path}")
    return 0 if report["pass"] else 1


def _section_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def _cmd_simulate(args) -> int:
    cfg = _merge(DEFAULTS["simulate"], _load_config(args.config))
    query = None
    syn = dict(cfg["synthetic"])
    if cfg["query_embedding_path"]:
        with open(cfg["query_embedding_path"]) as handle:
            query = embedding_from_json(json.load(handle))
        syn["n_query_tokens"], syn["embed_dim"] = query.shape
    seeds = _section_seeds(args.seed, 3)
    comparison = run_pruning_comparison(
        SyntheticConfig(**{**syn, "seed": seeds[0]}),
        cfg["keep_ratios"],
        n_instances=cfg["n_instances"],
        query=query,
    )
    corr_cfg = cfg["correlation"]
    correlation = run_correlation_probe(
        SyntheticConfig(**{**syn, "seed": seeds[1]}),
        n_instances=corr_cfg["n_instances"],
        n_heads=corr_cfg["n_heads"],
        attention_noise=corr_cfg["attention_noise"],
        query=query,
    )
    rank_cfg = cfg["ranking"]
    ranking = run_synthetic_ranking(
        SyntheticConfig(**{**syn, "noise_scale": rank_cfg["noise_scale"], "seed": seeds[2]}),
        rho=rank_cfg["rho"],
        n_instances=rank_cfg["n_instances"],
        k_values=rank_cfg["k_values"],
        query=query,
    )
    checks = {"t2i_ge_random": comparison["t2i_ge_random"]}
    report = {
        "command": "simulate",
        "seed": args.seed,
        "config": cfg,
        "pruning_comparison": comparison,
        "correlation": correlation,
        "ranking_quality": ranking,
        "checks": checks,
        "pass": all(checks.values()),
    }
    comparison_rows = [
        (row["keep_ratio"], row["strategy"], row["retention"]) for row in comparison["rows"]
    ]
    ranking_rows = [
        (key, value)
        for key, value in sorted(ranking["metrics"].items())
        if isinstance(value, (int, float)) and not isinstance(value, bool)
    ]
    path = write_report(
        args.out,
        report,
        {
            "pruning_comparison": (["keep_ratio", "strategy", "retention"], comparison_rows),
            "ranking_quality": (["metric", "value"], ranking_rows),
        },
    )
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"report: {path}")
    return 0 if report["pass"] else 1


def _cmd_cost_model(args) -> int:
    cfg = _merge(DEFAULTS["cost-model"], _load_config(args.config))
    arch = ArchParams(**cfg["arch"])
    workload_cfg = dict(cfg["workload"])
    counts = workload_cfg.pop("image_token_counts")
    workload = WorkloadSpec(
        **workload_cfg,
        image_token_counts=tuple(counts) if counts is not None else None,
    )
    report = {
        "command": "cost-model",
        "seed": args.seed,
        "config": cfg,
        "cost": cost_report(workload, arch),
    }
    tables = {}
    sweep_cfg = cfg["sweep"]
    if sweep_cfg and sweep_cfg.get("enabled", True):
        sweep = run_cost_sweep(
            arch,
            n_text=sweep_cfg["n_text"],
            tokens_per_candidate=sweep_cfg["tokens_per_candidate"],
            n_query=sweep_cfg["n_query"],
            beta=sweep_cfg["beta"],
            u_reason=sweep_cfg["u_reason"],
            rho_values=sweep_cfg["rho_values"],
            k_values=sweep_cfg["k_values"],
        )
        report["sweep"] = sweep
        header = ["k", "rho", "n_full", "n_rho", "u_base", "f_base", "f_zip", "speedup", "prefill_ratio"]
        tables["cost_sweep"] = (header, [[row[h] for h in header] for row in sweep["rows"]])
    path = write_report(args.out, report, tables)
    cost = report["cost"]
    print(f"f_base={cost['f_base']:.6e} f_zip={cost['f_zip']:.6e} speedup={cost['speedup']:.4f}")
    print(f"report: {path}")
    return 0


def _parse_judgments(raw) -> dict:
    judgments_by_subset: dict[str, list[QueryJudgment]] = {}
    for i, entry in enumerate(raw):
        try:
            subset = entry.get("subset", "all")
            judgment = QueryJudgment(
                relevant=frozenset(entry["relevant"]), ranked=tuple(entry["ranked"])
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(
                f'judgment {i} must be {{"subset"?, "relevant": [...], "ranked": [...]}}'
            ) from exc
        judgments_by_subset.setdefault(subset, []).append(judgment)
    if not judgments_by_subset:
        raise ConfigError("judgments list is empty")
    return judgments_by_subset


def _cmd_metrics(args) -> int:
    cfg = _merge(DEFAULTS["metrics"], _load_config(args.config))
    if cfg["judgments"] is None and cfg["values_by_subset"] is None:
        raise ConfigError("metrics needs either 'judgments' or 'values_by_subset' in the config")
    report = {"command": "metrics", "seed": args.seed, "config": cfg}
    tables = {}
    if cfg["values_by_subset"] is not None:
        report["aggregate"] = aggregate(cfg["values_by_subset"])
        rows = [(name, float(np.mean(vals))) for name, vals in cfg["values_by_subset"].items()]
        rows.append(("micro", report["aggregate"]["micro"]))
        rows.append(("macro", report["aggregate"]["macro"]))
        tables["aggregate"] = (["subset", "value"], rows)
    if cfg["judgments"] is not None:
        judgments_by_subset = _parse_judgments(cfg["judgments"])
        evaluation = evaluate_judgments(judgments_by_subset, k_values=cfg["k_values"])
        report["evaluation"] = evaluation
        subsets = sorted(evaluation["per_subset"])
        header = ["metric"] + subsets + ["micro", "macro"]
        rows = []
        for metric in sorted(evaluation["overall"]):
            row = [metric]
            for subset in subsets:
                value = evaluation["per_subset"][subset].get(metric)
                row.append("" if value is None else value)
            row.append(evaluation["overall"][metric]["micro"])
            row.append(evaluation["overall"][metric]["macro"])
            rows.append(row)
        tables["metrics_by_subset"] = (header, rows)
        taxonomy = evaluation["failure_taxonomy"]
        tables["failure_taxonomy"] = (
            ["class", "count", "fraction"],
            [
                (label, taxonomy["counts"][label], taxonomy["fractions"][label])
                for label in FAILURE_LABELS
            ],
        )
    path = write_report(args.out, report, tables)
    print(f"report: {path}")
    return 0


_COMMANDS = {
    "verify-bounds": _cmd_verify_bounds,
    "simulate": _cmd_simulate,
    "cost-model": _cmd_cost_model,
    "metrics": _cmd_metrics,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prunerank",
        description="Token pruning, listwise scoring, cost modeling and bound verification.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func in _COMMANDS.items():
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", default=None, help="JSON config file (defaults documented in README)")
        sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sub.add_argument("--out", default="out", help="output directory (default ./out)")
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        code = args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"wall time: {time.perf_counter() - started:.2f}s")
    return code


def entry_point() -> None:
    sys.exit(main())
