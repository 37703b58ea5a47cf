"""Exception types shared across the package."""


class CrossdictError(Exception):
    """Base class for all crossdict errors."""


class DimensionError(CrossdictError, ValueError):
    """Shapes or vector lengths do not line up."""


class DomainError(CrossdictError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class DegenerateAtomError(CrossdictError, ValueError):
    """A dictionary column cannot be normalized (zero norm)."""


class ConfigError(CrossdictError, ValueError):
    """A configuration object or flag combination is invalid."""


class DegenerateDataError(CrossdictError, ValueError):
    """Training data is unusable (e.g. all-zero samples)."""


class CombinatorialBudgetError(CrossdictError, ValueError):
    """An exhaustive search would exceed the enumeration budget."""


class ChecksumError(CrossdictError, IOError):
    """A serialized file failed its integrity check."""


class FormatError(CrossdictError, IOError):
    """A serialized file is malformed."""
