"""Decoder inference FLOPs model.

Prefill is quadratic in context length (attention) plus a linear feed-forward
term; KV-cached decoding is linear in both context length and generated
tokens. The model compares a baseline autoregressive listwise pipeline
against the pruned single-pass pipeline (token scoring + compressed prefill +
one decode step) and evaluates two closed-form regime approximations. FLOPs
are reported as 64-bit reals since realistic values exceed 1e14; no wall-clock
or hardware behavior is modeled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, InvalidRatioError
from .pruning import keep_count, round_half_away_from_zero

N_RHO_PER_IMAGE = "per_image_exact"
N_RHO_APPROX = "ratio_approximation"


@dataclass(frozen=True)
class ArchParams:
    """Decoder architecture constants.

    The c_* factors fold heads, projections and kernel constants into single
    coefficients. They may be zero so individual cost terms can be isolated
    when studying regimes; layer count and width must be positive.
    """

    layers: int
    width: int
    c_att: float = 1.0
    c_ffn: float = 1.0
    c_dec: float = 1.0
    c_score: float = 1.0

    def __post_init__(self):
        if self.layers < 1 or self.width < 1:
            raise ConfigError(f"layers and width must be >= 1, got {self.layers}, {self.width}")
        for name in ("c_att", "c_ffn", "c_dec", "c_score"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def to_json(self) -> dict:
        return {
            "layers": self.layers,
            "width": self.width,
            "c_att": self.c_att,
            "c_ffn": self.c_ffn,
            "c_dec": self.c_dec,
            "c_score": self.c_score,
        }


@dataclass(frozen=True)
class WorkloadSpec:
    """Token accounting for one reranking request.

    When image_token_counts is supplied, the compressed context length uses
    the exact per-image keep rule; otherwise it falls back to the smooth
    rho * n_vis approximation, and the mode is recorded in reports.
    """

    n_text: int
    n_vis: int
    n_query: int
    k: int
    beta: float
    u_reason: int
    rho: float
    image_token_counts: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise InvalidRatioError(f"keep ratio must be in (0, 1], got {self.rho}")
        if self.beta < 0:
            raise ConfigError(f"beta must be nonnegative, got {self.beta}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if min(self.n_text, self.n_vis, self.n_query, self.u_reason) < 0:
            raise ConfigError("token counts must be nonnegative")
        if self.image_token_counts is not None:
            counts = tuple(int(c) for c in self.image_token_counts)
            object.__setattr__(self, "image_token_counts", counts)
            if len(counts) != self.k:
                raise ConfigError(f"{len(counts)} image token counts for k={self.k} candidates")
            if any(c < 1 for c in counts):
                raise ConfigError("every image must contribute at least one token")
            if sum(counts) != self.n_vis:
                raise ConfigError(
                    f"image token counts sum to {sum(counts)}, expected n_vis={self.n_vis}"
                )

    @property
    def n_full(self) -> int:
        return self.n_text + self.n_vis

    @property
    def u_base(self) -> int:
        """Baseline generated tokens: ranking output (~beta*k) plus reasoning."""
        return round_half_away_from_zero(self.beta * self.k) + self.u_reason

    @property
    def n_rho(self) -> float:
        if self.image_token_counts is not None:
            return float(self.n_text + sum(keep_count(self.rho, c) for c in self.image_token_counts))
        return self.n_text + self.rho * self.n_vis

    @property
    def n_rho_mode(self) -> str:
        return N_RHO_PER_IMAGE if self.image_token_counts is not None else N_RHO_APPROX

    def to_json(self) -> dict:
        return {
            "n_text": self.n_text,
            "n_vis": self.n_vis,
            "n_query": self.n_query,
            "k": self.k,
            "beta": self.beta,
            "u_reason": self.u_reason,
            "rho": self.rho,
            "image_token_counts": (
                list(self.image_token_counts) if self.image_token_counts is not None else None
            ),
        }


def prefill_flops(n: float, p: ArchParams) -> float:
    """Context-ingestion cost: layers * (c_att * d * n^2 + c_ffn * d^2 * n)."""
    if n < 0:
        raise ConfigError(f"context length must be nonnegative, got {n}")
    return p.layers * (p.c_att * p.width * n * n + p.c_ffn * p.width * p.width * n)


def decode_flops(n: float, u: float, p: ArchParams) -> float:
    """KV-cached generation cost: u * layers * c_dec * d * n."""
    if n < 0 or u < 0:
        raise ConfigError(f"context/generated lengths must be nonnegative, got {n}, {u}")
    return u * p.layers * p.c_dec * p.width * n


def total_flops(n: float, u: float, p: ArchParams) -> float:
    """Prefill plus decode for one request."""
    return prefill_flops(n, p) + decode_flops(n, u, p)


def score_flops(n_query: int, n_vis: int, p: ArchParams) -> float:
    """Early-interaction token scoring cost: c_score * d * n_query * n_vis.

    This is an upper-bound style proxy evaluated as an equality; the real
    kernel is highly parallel and typically lower-order than prefill.
    """
    if n_query < 0 or n_vis < 0:
        raise ConfigError(f"token counts must be nonnegative, got {n_query}, {n_vis}")
    return p.c_score * p.width * n_query * n_vis


def f_base(w: WorkloadSpec, p: ArchParams) -> float:
    """Baseline pipeline: full-context prefill plus u_base decode steps."""
    return total_flops(w.n_full, w.u_base, p)


def f_zip(w: WorkloadSpec, p: ArchParams) -> float:
    """Pruned single-pass pipeline: scoring + compressed prefill + one decode step."""
    return (
        score_flops(w.n_query, w.n_vis, p)
        + prefill_flops(w.n_rho, p)
        + decode_flops(w.n_rho, 1, p)
    )


def speedup(w: WorkloadSpec, p: ArchParams) -> float:
    """FLOPs ratio of the baseline pipeline over the pruned single-pass one."""
    denom = f_zip(w, p)
    if denom == 0.0:
        raise ZeroDivisionError("pruned-pipeline FLOPs are zero; speedup undefined")
    return f_base(w, p) / denom


def longcontext_prefill_ratio(rho: float, n_text: int, n_vis: int) -> float:
    """Closed-form prefill ratio ((n_text + n_vis) / (n_text + rho*n_vis))^2.

    When visual tokens dominate the context this approaches 1 / rho^2.
    """
    if not 0.0 < rho <= 1.0:
        raise InvalidRatioError(f"keep ratio must be in (0, 1], got {rho}")
    if n_text < 0 or n_vis < 0:
        raise ConfigError("token counts must be nonnegative")
    full = n_text + n_vis
    compressed = n_text + rho * n_vis
    if compressed == 0:
        raise ZeroDivisionError("empty context; prefill ratio undefined")
    return (full / compressed) ** 2


def generation_heavy_decode_ratio(w: WorkloadSpec) -> float:
    """Closed-form decode ratio u_base * n_full / n_rho.

    Exact when decoding dominates both pipelines; equals u_base at rho = 1.
    """
    n_rho = w.n_rho
    if n_rho == 0:
        raise ZeroDivisionError("empty compressed context; decode ratio undefined")
    return w.u_base * w.n_full / n_rho


def cost_report(w: WorkloadSpec, p: ArchParams) -> dict:
    """Full cost summary for one workload, including regime estimates."""
    return {
        "f_base": f_base(w, p),
        "f_zip": f_zip(w, p),
        "speedup": speedup(w, p),
        "n_full": w.n_full,
        "n_rho": w.n_rho,
        "n_rho_mode": w.n_rho_mode,
        "u_base": w.u_base,
        "regime_estimates": {
            "longcontext_prefill_ratio": longcontext_prefill_ratio(w.rho, w.n_text, w.n_vis),
            "generation_heavy_decode_ratio": generation_heavy_decode_ratio(w),
        },
    }
