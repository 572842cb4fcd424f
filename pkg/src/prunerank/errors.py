"""Exception types shared across the package.

Everything subclasses ValueError so callers can catch broadly; the specific
classes exist so tests and tooling can pin the exact failure mode.
"""


class ZeroNormError(ValueError):
    """A vector or matrix row has (near-)zero Euclidean norm."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible shapes or lengths."""


class EmptyInputError(ValueError):
    """An operation received an empty matrix or sequence."""


class NonFiniteError(ValueError):
    """An input contains NaN or infinite entries."""


class InvalidRatioError(ValueError):
    """A keep ratio lies outside (0, 1]."""


class KOutOfRangeError(ValueError):
    """A selection size k is outside its valid range."""


class TooManyCandidatesError(ValueError):
    """More candidates than available single-symbol identifiers."""


class InvalidPermutationError(ValueError):
    """An index sequence is not a bijection on {0, ..., n-1}."""


class InvalidGammaError(ValueError):
    """A geometric decay factor lies outside (0, 1)."""


class InvalidProbabilityError(ValueError):
    """A probability lies outside (0, 1]."""


class AllMassPrunedError(ValueError):
    """Pruning removed (almost) all attention mass; renormalization undefined."""


class EmptyRelevantSetError(ValueError):
    """A query judgment has no relevant items."""


class EmptySubsetError(ValueError):
    """An aggregation subset contains no values."""


class GroundTruthNotRankedError(ValueError):
    """No relevant item appears in the ranked list."""


class DegenerateConstantError(ValueError):
    """A constant sequence has no defined rank correlation."""


class ConfigError(ValueError):
    """A configuration object violates its documented schema."""
