"""Query-aware visual-token pruning.

Each token gets a relevance score (its maximum cosine similarity to any query
row); per image the top max(1, round(rho * n_tokens)) tokens are kept, with the
surviving indices reported in their original order so positional structure is
preserved. A seeded uniform-random baseline and a margin-based stability
diagnostic round out the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    InvalidRatioError,
    KOutOfRangeError,
)
from .linalg import as_embedding, as_vector, similarity_matrix


def round_half_away_from_zero(x: float) -> int:
    """round() with .5 ties moving away from zero (builtin round is half-even)."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def _as_similarity(s) -> np.ndarray:
    arr = np.asarray(s, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D similarity matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyInputError("similarity matrix must have at least one row and one column")
    return arr


def maxsim_scores(s) -> np.ndarray:
    """Per-token relevance: the columnwise maximum over query rows."""
    return _as_similarity(s).max(axis=0)


def lse_scores(s) -> np.ndarray:
    """Per-token log-sum-exp pooling over query rows, max-shifted for stability."""
    arr = _as_similarity(s)
    shift = arr.max(axis=0)
    return shift + np.log(np.exp(arr - shift[None, :]).sum(axis=0))


@dataclass(frozen=True)
class PruneScores:
    """Hard-max and smooth (log-sum-exp) pooling scores for one image's tokens.

    For every token j: max_sim[j] <= lse[j] <= max_sim[j] + log(n_query), with
    the upper bound attained exactly when all query rows score j equally.
    """

    max_sim: np.ndarray
    lse: np.ndarray
    n_query: int

    @classmethod
    def from_similarity(cls, s) -> "PruneScores":
        arr = _as_similarity(s)
        return cls(max_sim=maxsim_scores(arr), lse=lse_scores(arr), n_query=int(arr.shape[0]))


def keep_count(rho: float, n_tokens: int) -> int:
    """Tokens to keep per image: max(1, round(rho * n_tokens)), never above n_tokens."""
    if not 0.0 < rho <= 1.0:
        raise InvalidRatioError(f"keep ratio must be in (0, 1], got {rho}")
    if n_tokens < 1:
        raise EmptyInputError(f"n_tokens must be >= 1, got {n_tokens}")
    return min(n_tokens, max(1, round_half_away_from_zero(rho * n_tokens)))


def select_topk_preserve_order(scores, k: int) -> np.ndarray:
    """Indices of the k largest scores, returned in ascending (original) order.

    Ties break toward the lower original index so selection is deterministic.
    """
    arr = as_vector(scores, "scores")
    if not 1 <= k <= arr.size:
        raise KOutOfRangeError(f"k must be in [1, {arr.size}], got {k}")
    top = np.argsort(-arr, kind="stable")[:k]
    return np.sort(top)


def random_prune(n_tokens: int, k: int, seed: int) -> np.ndarray:
    """k distinct token indices sampled uniformly without replacement, ascending.

    Uses numpy's seeded PCG64 generator so results reproduce across platforms.
    """
    if n_tokens < 1:
        raise EmptyInputError(f"n_tokens must be >= 1, got {n_tokens}")
    if not 1 <= k <= n_tokens:
        raise KOutOfRangeError(f"k must be in [1, {n_tokens}], got {k}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_tokens, size=k, replace=False))


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the top-k stability margin diagnostic."""

    gap: float
    guaranteed_stable: bool
    sets_equal: bool


def topk_stability_check(max_sim, lse, k: int, n_query: int) -> StabilityReport:
    """Check whether the hard-max and smooth-pooling top-k token sets agree.

    gap is the sorted-score margin between positions k and k+1 of the hard-max
    scores. When gap > log(n_query), the smooth scores cannot reorder across
    the boundary (they exceed the hard max by at most log(n_query)), so set
    equality is guaranteed.
    """
    a = as_vector(max_sim, "max_sim")
    g = as_vector(lse, "lse")
    if a.size != g.size:
        raise DimensionMismatchError(f"length mismatch: {a.size} vs {g.size}")
    if not 1 <= k < a.size:
        raise KOutOfRangeError(f"k must be in [1, {a.size - 1}], got {k}")
    if n_query < 1:
        raise EmptyInputError(f"n_query must be >= 1, got {n_query}")
    ordered = np.sort(a)[::-1]
    gap = float(ordered[k - 1] - ordered[k])
    guaranteed = gap > math.log(n_query)
    top_hard = set(select_topk_preserve_order(a, k).tolist())
    top_smooth = set(select_topk_preserve_order(g, k).tolist())
    return StabilityReport(gap=gap, guaranteed_stable=guaranteed, sets_equal=top_hard == top_smooth)


@dataclass(frozen=True)
class PruneResult:
    """Kept token indices (original order) plus selection diagnostics."""

    kept_indices: tuple[int, ...]
    keep_count: int
    keep_ratio: float
    margin: float | None

    def to_json(self) -> dict:
        return {
            "kept_indices": list(self.kept_indices),
            "keep_count": self.keep_count,
            "keep_ratio": self.keep_ratio,
            "margin": self.margin,
        }


def prune_by_scores(scores, rho: float) -> PruneResult:
    """Select the top keep_count(rho, n) tokens of one image by score."""
    arr = as_vector(scores, "scores")
    n = arr.size
    kept = keep_count(rho, n)
    indices = select_topk_preserve_order(arr, kept)
    if kept == n:
        margin = None
    else:
        ordered = np.sort(arr)[::-1]
        margin = float(ordered[kept - 1] - ordered[kept])
    return PruneResult(
        kept_indices=tuple(int(i) for i in indices),
        keep_count=kept,
        keep_ratio=float(rho),
        margin=margin,
    )


def prune_images(H, images, rho: float) -> list[PruneResult]:
    """Prune every image independently against the same query rows H.

    The result for image i depends only on H, images[i] and rho, so per-image
    work can run in parallel without changing the output.
    """
    query = as_embedding(H, "H")
    results = []
    for i, image in enumerate(images):
        tokens = as_embedding(image, f"images[{i}]")
        scores = maxsim_scores(similarity_matrix(query, tokens))
        results.append(prune_by_scores(scores, rho))
    return results
