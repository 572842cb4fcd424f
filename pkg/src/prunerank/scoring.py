"""Single-pass listwise scoring.

Candidates get single-symbol identifiers; after one forward pass the
identifier logits are argsorted descending into a permutation of the
candidate list. Token accounting tracks context length before and after
per-image pruning. No tokenizer or prompt rendering lives here; logits
arrive as plain numbers.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    InvalidPermutationError,
    InvalidRatioError,
    NonFiniteError,
    TooManyCandidatesError,
)
from .pruning import keep_count

IDENTIFIER_ALPHABET = string.ascii_uppercase


def assign_identifiers(k: int) -> list[str]:
    """First k single-symbol candidate labels, A through Z."""
    if k < 1:
        raise EmptyInputError(f"need at least one candidate, got k={k}")
    if k > len(IDENTIFIER_ALPHABET):
        raise TooManyCandidatesError(
            f"at most {len(IDENTIFIER_ALPHABET)} single-symbol identifiers, got k={k}"
        )
    return list(IDENTIFIER_ALPHABET[:k])


@dataclass(frozen=True)
class CandidateList:
    """Retriever-ordered candidates paired with their identifier tokens."""

    ids: tuple
    identifier_tokens: tuple[str, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.identifier_tokens):
            raise DimensionMismatchError(
                f"{len(self.ids)} ids vs {len(self.identifier_tokens)} identifiers"
            )
        if not 1 <= len(self.ids) <= len(IDENTIFIER_ALPHABET):
            raise TooManyCandidatesError(
                f"candidate count must be in [1, {len(IDENTIFIER_ALPHABET)}], got {len(self.ids)}"
            )
        if len(set(self.identifier_tokens)) != len(self.identifier_tokens):
            raise InvalidPermutationError("identifier tokens must be distinct")

    @property
    def k(self) -> int:
        return len(self.ids)

    @classmethod
    def from_ids(cls, ids) -> "CandidateList":
        ids = tuple(ids)
        return cls(ids=ids, identifier_tokens=tuple(assign_identifiers(len(ids))))


def rank_from_logits(logits) -> np.ndarray:
    """Descending argsort of identifier logits.

    Ties keep the earlier candidate first, preserving the upstream
    retriever-provided ordering among equals.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise EmptyInputError(f"logits must be a nonempty 1-D array, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("logits contain NaN or infinite entries")
    return np.argsort(-z, kind="stable")


def validate_permutation(order) -> np.ndarray:
    """Check that order is a bijection on {0, ..., n-1} and return it as ints."""
    arr = np.asarray(order)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidPermutationError(f"permutation must be a nonempty 1-D sequence, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        idx = np.asarray(arr, dtype=np.float64)
        if not np.all(np.isfinite(idx)) or np.any(idx != np.round(idx)):
            raise InvalidPermutationError("permutation entries must be integers")
        arr = idx.astype(np.int64)
    else:
        arr = arr.astype(np.int64)
    if not np.array_equal(np.sort(arr), np.arange(arr.size)):
        raise InvalidPermutationError(
            f"not a bijection on 0..{arr.size - 1}: {arr.tolist()}"
        )
    return arr


def apply_permutation(items, order) -> list:
    """Reorder items so position p holds items[order[p]]."""
    seq = list(items)
    arr = validate_permutation(order)
    if len(seq) != arr.size:
        raise DimensionMismatchError(f"{len(seq)} items vs permutation of length {arr.size}")
    return [seq[i] for i in arr]


@dataclass(frozen=True)
class TokenAccounting:
    """Context-length bookkeeping before and after per-image token pruning."""

    n_text: int
    n_vis: int
    n_query: int
    rho: float
    n_rho: int

    def to_json(self) -> dict:
        return {
            "n_text": self.n_text,
            "n_vis": self.n_vis,
            "n_query": self.n_query,
            "rho": self.rho,
            "n_rho": self.n_rho,
        }


def token_accounting(n_text: int, image_token_counts, n_query: int, rho: float) -> TokenAccounting:
    """Total and post-pruning context lengths for a prompt with image tokens.

    n_rho applies the per-image keep rule max(1, round(rho * n_i)), so it never
    exceeds n_text + n_vis and never drops an image entirely.
    """
    if not 0.0 < rho <= 1.0:
        raise InvalidRatioError(f"keep ratio must be in (0, 1], got {rho}")
    if n_text < 0 or n_query < 0:
        raise EmptyInputError("token counts must be nonnegative")
    if n_query > n_text:
        raise DimensionMismatchError(
            f"query tokens ({n_query}) are a subset of text tokens ({n_text})"
        )
    counts = [int(c) for c in image_token_counts]
    if any(c < 1 for c in counts):
        raise EmptyInputError("every image must contribute at least one token")
    n_vis = sum(counts)
    n_rho = n_text + sum(keep_count(rho, c) for c in counts)
    return TokenAccounting(
        n_text=int(n_text),
        n_vis=int(n_vis),
        n_query=int(n_query),
        rho=float(rho),
        n_rho=int(n_rho),
    )
