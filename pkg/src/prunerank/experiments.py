"""Experiment drivers and deterministic report serialization.

Four randomized bound checks (score sandwich, top-k stability margin,
pruning-error tail-mass bound, tail-gap decay), a pruning-strategy retention
comparison on planted-relevance instances, a synthetic ranking-quality run, a
score-vs-attention correlation probe, and rho/k cost sweeps. Every driver is
deterministic given its seed; per-trial streams derive from the master seed so
trials could run in any order or in parallel without changing results.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .attention import (
    BOUND_SLACK,
    attention_mass_per_token,
    check_pruning_error_bound,
    softmax,
    tail_gap_bound_check,
)
from .cost_model import (
    ArchParams,
    WorkloadSpec,
    f_base,
    f_zip,
    longcontext_prefill_ratio,
    speedup,
)
from .errors import ConfigError, InvalidRatioError
from .linalg import similarity_matrix
from .metrics import QueryJudgment, evaluate_judgments, spearman
from .pruning import (
    PruneScores,
    keep_count,
    lse_scores,
    maxsim_scores,
    random_prune,
    select_topk_preserve_order,
    topk_stability_check,
)
from .scoring import CandidateList, apply_permutation, rank_from_logits
from .synthetic import SyntheticConfig, generate_instance

# The proven coefficient in the pruning-error bound. Exposed as a parameter so
# a self-test can corrupt it (e.g. to 1.9) and confirm the check reports
# violations when the claim is weakened.
ERROR_BOUND_CONSTANT = 2.0


def _sandwich_tally(rng: np.random.Generator, trials: int) -> dict:
    failures = 0
    equality_checks = 0
    for _ in range(trials):
        n_query = int(rng.integers(1, 33))
        n_tokens = int(rng.integers(1, 257))
        sims = rng.uniform(-1.0, 1.0, size=(n_query, n_tokens))
        constant_cols = np.zeros(n_tokens, dtype=bool)
        if rng.random() < 0.5:
            n_const = int(rng.integers(1, n_tokens + 1))
            cols = rng.choice(n_tokens, size=n_const, replace=False)
            sims[:, cols] = rng.uniform(-1.0, 1.0, size=n_const)[None, :]
            constant_cols[cols] = True
        hard = maxsim_scores(sims)
        smooth = lse_scores(sims)
        log_nq = math.log(n_query)
        ok = np.all(hard <= smooth + BOUND_SLACK) and np.all(
            smooth <= hard + log_nq + BOUND_SLACK
        )
        if constant_cols.any():
            equality_checks += 1
            gap = np.abs(smooth[constant_cols] - (hard[constant_cols] + log_nq))
            ok = ok and bool(np.all(gap <= BOUND_SLACK))
        if not ok:
            failures += 1
    return {
        "name": "score_sandwich",
        "trials": trials,
        "failures": failures,
        "equality_checks": equality_checks,
    }


def _stability_tally(rng: np.random.Generator, trials: int) -> dict:
    failures = 0
    premise_count = 0
    for _ in range(trials):
        n_query = int(rng.integers(1, 7))
        n_tokens = int(rng.integers(2, 65))
        if rng.random() < 0.5:
            sims = rng.uniform(-1.0, 1.0, size=(n_query, n_tokens))
            k = int(rng.integers(1, n_tokens))
        else:
            # Planted margin: k high-similarity columns against a low block,
            # so the gap premise actually fires on a healthy share of trials.
            k = int(rng.integers(1, n_tokens))
            sims = rng.uniform(-1.0, -0.93, size=(n_query, n_tokens))
            sims[:, :k] = rng.uniform(0.93, 1.0, size=(n_query, k))
        scores = PruneScores.from_similarity(sims)
        report = topk_stability_check(scores.max_sim, scores.lse, k, n_query)
        if report.guaranteed_stable:
            premise_count += 1
            if not report.sets_equal:
                failures += 1
    return {
        "name": "topk_stability",
        "trials": trials,
        "failures": failures,
        "premise_count": premise_count,
    }


def _pruning_error_tally(rng: np.random.Generator, trials: int, constant: float) -> dict:
    failures = 0
    for _ in range(trials):
        if rng.random() < 0.2:
            # Antipodal worst case: removed mass points one way, kept mass the
            # other, which attains the bound with equality.
            tail = float(rng.uniform(0.1, 0.5))
            scale = float(rng.uniform(0.5, 2.0))
            dim = int(rng.integers(1, 9))
            direction = rng.standard_normal(dim)
            direction /= np.linalg.norm(direction)
            values = np.stack([scale * direction, -scale * direction])
            alpha = np.array([tail, 1.0 - tail])
            kept = np.array([1])
        else:
            n_tokens = int(rng.integers(2, 65))
            dim = int(rng.integers(1, 17))
            alpha = rng.dirichlet(np.full(n_tokens, float(rng.uniform(0.2, 2.0))))
            values = rng.standard_normal((n_tokens, dim)) * float(rng.uniform(0.1, 3.0))
            size = int(rng.integers(1, n_tokens + 1))
            kept = rng.choice(n_tokens, size=size, replace=False)
            if alpha[kept].sum() < 1e-9:
                kept = np.unique(np.append(kept, int(np.argmax(alpha))))
        report = check_pruning_error_bound(alpha, values, kept)
        corrupted_bound = constant * report.tail_mass * report.v_max
        if report.error_norm > corrupted_bound + BOUND_SLACK:
            failures += 1
    return {
        "name": "pruning_error_bound",
        "trials": trials,
        "failures": failures,
        "constant": constant,
    }


def _tail_gap_tally(rng: np.random.Generator, trials: int) -> dict:
    failures = 0
    for _ in range(trials):
        n_scores = int(rng.integers(2, 129))
        draw = rng.random()
        if draw < 0.15:
            scores = np.full(n_scores, float(rng.uniform(-3.0, 3.0)))
        elif draw < 0.3:
            scores = rng.normal(0.0, 1.0, size=n_scores)
            boosted = int(rng.integers(1, n_scores))
            scores[:boosted] += float(rng.uniform(2.0, 6.0))
        else:
            scores = rng.normal(0.0, float(rng.uniform(0.3, 3.0)), size=n_scores)
        k = int(rng.integers(1, n_scores))
        report = tail_gap_bound_check(scores, k)
        if not report.holds:
            failures += 1
    return {"name": "tail_gap_bound", "trials": trials, "failures": failures}


def run_bound_verification(trials: int, seed: int, error_bound_constant: float = ERROR_BOUND_CONSTANT) -> dict:
    """Run all four randomized bound checks and tally violations.

    With the proven error_bound_constant the expected failure count is zero for
    every seed; any failure indicates an implementation bug. Passing a smaller
    constant (the self-test) must produce failures, proving the check can
    detect a weakened claim.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    children = np.random.SeedSequence(seed).spawn(4)
    rngs = [np.random.default_rng(child) for child in children]
    checks = [
        _sandwich_tally(rngs[0], trials),
        _stability_tally(rngs[1], trials),
        _pruning_error_tally(rngs[2], trials, error_bound_constant),
        _tail_gap_tally(rngs[3], trials),
    ]
    return {
        "trials": trials,
        "seed": seed,
        "error_bound_constant": error_bound_constant,
        "checks": {check["name"]: check for check in checks},
        "total_failures": sum(check["failures"] for check in checks),
    }


def _validate_ratios(keep_ratios: Sequence[float]) -> list[float]:
    ratios = [float(r) for r in keep_ratios]
    if not ratios:
        raise ConfigError("need at least one keep ratio")
    for r in ratios:
        if not 0.0 < r <= 1.0:
            raise InvalidRatioError(f"keep ratio must be in (0, 1], got {r}")
    return ratios


def run_pruning_comparison(
    cfg: SyntheticConfig,
    keep_ratios: Sequence[float],
    n_instances: int = 1000,
    query: np.ndarray | None = None,
) -> dict:
    """Planted-token retention of query-aware (t2i) vs uniform random pruning.

    Both strategies keep the same per-image budget keep_count(rho, n); they
    differ only in which indices survive. Retention is the fraction of planted
    tokens that survive pruning of the relevant image, pooled over instances.
    An explicit query matrix replaces the per-instance sampled one.
    """
    ratios = _validate_ratios(keep_ratios)
    if n_instances < 1:
        raise ConfigError(f"n_instances must be >= 1, got {n_instances}")
    master = np.random.default_rng(cfg.seed)
    instance_seeds = master.integers(2**63, size=n_instances)
    random_seeds = master.integers(2**63, size=(n_instances, len(ratios)))
    kept_t2i = np.zeros(len(ratios), dtype=np.int64)
    kept_random = np.zeros(len(ratios), dtype=np.int64)
    total_planted = 0
    for i in range(n_instances):
        instance = generate_instance(
            dataclasses.replace(cfg, seed=int(instance_seeds[i])), query=query
        )
        image = instance.images[instance.relevant_image]
        planted = set(instance.planted[instance.relevant_image])
        total_planted += len(planted)
        scores = maxsim_scores(similarity_matrix(instance.query, image))
        n_tokens = image.shape[0]
        for j, rho in enumerate(ratios):
            budget = keep_count(rho, n_tokens)
            t2i = select_topk_preserve_order(scores, budget)
            rand = random_prune(n_tokens, budget, int(random_seeds[i, j]))
            kept_t2i[j] += len(planted.intersection(t2i.tolist()))
            kept_random[j] += len(planted.intersection(rand.tolist()))
    t2i_retention = (kept_t2i / total_planted).tolist()
    random_retention = (kept_random / total_planted).tolist()
    rows = []
    for j, rho in enumerate(ratios):
        rows.append({"keep_ratio": rho, "strategy": "t2i", "retention": t2i_retention[j]})
        rows.append({"keep_ratio": rho, "strategy": "random", "retention": random_retention[j]})
    return {
        "n_instances": n_instances,
        "keep_ratios": ratios,
        "t2i_retention": t2i_retention,
        "random_retention": random_retention,
        "rows": rows,
        "t2i_ge_random": bool(
            all(t >= r for t, r in zip(t2i_retention, random_retention))
        ),
    }


def run_correlation_probe(
    cfg: SyntheticConfig,
    n_instances: int = 200,
    n_heads: int = 4,
    attention_noise: float = 0.5,
    query: np.ndarray | None = None,
) -> dict:
    """Spearman correlation between pruning scores and simulated attention mass.

    Per instance, per-head attention rows at the scoring position are softmax
    distributions over the smooth pooling scores plus head-specific noise; the
    head average is then rank-correlated against the hard-max pruning scores.
    The value is reported without an acceptance threshold.
    """
    if n_instances < 1 or n_heads < 1:
        raise ConfigError("n_instances and n_heads must be >= 1")
    if attention_noise < 0:
        raise ConfigError(f"attention_noise must be nonnegative, got {attention_noise}")
    master = np.random.default_rng(cfg.seed)
    instance_seeds = master.integers(2**63, size=n_instances)
    correlations = []
    for i in range(n_instances):
        instance = generate_instance(
            dataclasses.replace(cfg, seed=int(instance_seeds[i])), query=query
        )
        image = instance.images[instance.relevant_image]
        sims = similarity_matrix(instance.query, image)
        hard = maxsim_scores(sims)
        smooth = lse_scores(sims)
        n_tokens = image.shape[0]
        heads = np.stack(
            [
                softmax(smooth + master.normal(0.0, attention_noise, size=n_tokens))[None, :]
                for _ in range(n_heads)
            ]
        )
        mass = attention_mass_per_token(heads, position=0)
        correlations.append(spearman(hard, mass))
    return {
        "n_instances": n_instances,
        "n_heads": n_heads,
        "attention_noise": attention_noise,
        "spearman_mean": float(np.mean(correlations)),
        "spearman_min": float(np.min(correlations)),
        "spearman_max": float(np.max(correlations)),
    }


def run_synthetic_ranking(
    cfg: SyntheticConfig,
    rho: float,
    n_instances: int = 300,
    k_values: Sequence[int] = (1, 3, 5),
    query: np.ndarray | None = None,
) -> dict:
    """End-to-end synthetic reranking quality under query-aware pruning.

    Each candidate image is scored by the best surviving token score after
    pruning at the given rho; candidates are ranked by descending score and
    judged against the planted relevant image.
    """
    ratios = _validate_ratios([rho])
    rho = ratios[0]
    if n_instances < 1:
        raise ConfigError(f"n_instances must be >= 1, got {n_instances}")
    master = np.random.default_rng(cfg.seed)
    instance_seeds = master.integers(2**63, size=n_instances)
    judgments = []
    for i in range(n_instances):
        instance = generate_instance(
            dataclasses.replace(cfg, seed=int(instance_seeds[i])), query=query
        )
        candidates = CandidateList.from_ids(range(len(instance.images)))
        logits = []
        for image in instance.images:
            scores = maxsim_scores(similarity_matrix(instance.query, image))
            budget = keep_count(rho, scores.size)
            kept = select_topk_preserve_order(scores, budget)
            logits.append(float(scores[kept].max()))
        permutation = rank_from_logits(logits)
        reranked = apply_permutation(list(candidates.ids), permutation)
        judgments.append(
            QueryJudgment(relevant=frozenset({instance.relevant_image}), ranked=tuple(reranked))
        )
    evaluation = evaluate_judgments({"synthetic": judgments}, k_values=k_values)
    return {
        "rho": rho,
        "n_instances": n_instances,
        "metrics": evaluation["per_subset"]["synthetic"],
        "failure_taxonomy": evaluation["failure_taxonomy"],
    }


def run_cost_sweep(
    arch: ArchParams,
    n_text: int,
    tokens_per_candidate: int,
    n_query: int,
    beta: float,
    u_reason: int,
    rho_values: Sequence[float],
    k_values: Sequence[int],
) -> dict:
    """Grid of baseline/pruned FLOPs and speedup over keep ratios and list sizes."""
    ratios = _validate_ratios(rho_values)
    ks = [int(k) for k in k_values]
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"k values must be >= 1, got {k_values}")
    if tokens_per_candidate < 1:
        raise ConfigError(f"tokens_per_candidate must be >= 1, got {tokens_per_candidate}")
    rows = []
    for k in ks:
        counts = (tokens_per_candidate,) * k
        for rho in ratios:
            workload = WorkloadSpec(
                n_text=n_text,
                n_vis=tokens_per_candidate * k,
                n_query=n_query,
                k=k,
                beta=beta,
                u_reason=u_reason,
                rho=rho,
                image_token_counts=counts,
            )
            rows.append(
                {
                    "k": k,
                    "rho": rho,
                    "n_full": workload.n_full,
                    "n_rho": workload.n_rho,
                    "u_base": workload.u_base,
                    "f_base": f_base(workload, arch),
                    "f_zip": f_zip(workload, arch),
                    "speedup": speedup(workload, arch),
                    "prefill_ratio": longcontext_prefill_ratio(rho, n_text, workload.n_vis),
                }
            )
    return {
        "arch": arch.to_json(),
        "template": {
            "n_text": n_text,
            "tokens_per_candidate": tokens_per_candidate,
            "n_query": n_query,
            "beta": beta,
            "u_reason": u_reason,
        },
        "rho_values": ratios,
        "k_values": ks,
        "rows": rows,
    }


def report_json_bytes(report: Mapping) -> bytes:
    """Canonical JSON encoding: sorted keys, two-space indent, trailing newline.

    Identical report dicts serialize to identical bytes, which is what the
    determinism checks compare.
    """
    return (json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def write_report(out_dir, report: Mapping, tables: Mapping[str, tuple] = ()) -> Path:
    """Write report.json plus optional tables/<name>.csv under out_dir.

    Each table is (header, rows) with rows as sequences matching the header.
    Returns the report path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    report_path.write_bytes(report_json_bytes(report))
    if tables:
        table_dir = out / "tables"
        table_dir.mkdir(exist_ok=True)
        for name, (header, rows) in tables.items():
            with open(table_dir / f"{name}.csv", "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(header)
                writer.writerows(rows)
    return report_path
