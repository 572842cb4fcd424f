"""Dense linear-algebra primitives shared by pruning and the attention oracle.

All numerics are 64-bit floats. Matrices are row-major and desk-scale (at most
a few thousand rows); no BLAS-grade tuning is attempted.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError, ZeroNormError

# Norms below this are treated as zero; normalizing them would amplify noise.
ZERO_NORM_EPS = 1e-12


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array with at least one entry."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatchError(
            f"{name} must be 1-D with at least one entry, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def as_embedding(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array with at least one row and column."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatchError(
            f"{name} must be 2-D with at least one row and column, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def l2_normalize(v) -> np.ndarray:
    """Scale a vector to unit Euclidean norm."""
    arr = as_vector(v)
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_EPS:
        raise ZeroNormError(f"cannot normalize vector with norm {norm:.3e}")
    return arr / norm


def cosine_similarity(h, v) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    a = as_vector(h, "h")
    b = as_vector(v, "v")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroNormError("cosine undefined for (near-)zero-norm vectors")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _normalized_rows(m: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1)
    bad = np.flatnonzero(norms < ZERO_NORM_EPS)
    if bad.size:
        raise ZeroNormError(f"{name} row {int(bad[0])} has (near-)zero norm")
    return m / norms[:, None]


def similarity_matrix(H, V) -> np.ndarray:
    """Cosine similarity of every row of H against every row of V.

    Entry (t, j) equals cosine_similarity(H[t], V[j]); the result is clamped
    entrywise to [-1, 1] to absorb rounding.
    """
    a = as_embedding(H, "H")
    b = as_embedding(V, "V")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(
            f"embedding width mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    sims = _normalized_rows(a, "H") @ _normalized_rows(b, "V").T
    return np.clip(sims, -1.0, 1.0)


def embedding_to_json(m) -> dict:
    """Serialize a matrix to the shared {rows, dim, data} JSON object."""
    arr = as_embedding(m)
    return {
        "rows": int(arr.shape[0]),
        "dim": int(arr.shape[1]),
        "data": [float(x) for x in arr.ravel()],
    }


def embedding_from_json(obj: dict) -> np.ndarray:
    """Parse the shared {rows, dim, data} JSON object into a matrix."""
    try:
        rows = int(obj["rows"])
        dim = int(obj["dim"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise DimensionMismatchError(
            "embedding JSON must be an object with rows, dim and data fields"
        ) from exc
    flat = np.asarray(data, dtype=np.float64)
    if flat.ndim != 1 or flat.size != rows * dim:
        raise DimensionMismatchError(
            f"data length {flat.size} does not equal rows*dim = {rows * dim}"
        )
    return as_embedding(flat.reshape(rows, dim), "embedding JSON")
