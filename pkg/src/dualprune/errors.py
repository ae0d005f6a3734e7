"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: OSError -> 1, everything below
except AssumptionError -> 2, AssumptionError (and failed theory checks) -> 3.
"""


class DualPruneError(Exception):
    """Base class for all library errors."""


class FormatError(DualPruneError):
    """File header or field does not match the declared format."""


class IncompleteLogError(DualPruneError):
    """The (sample, epoch) grid has missing, duplicate, or truncated cells."""


class ValidationError(DualPruneError):
    """Data violates a domain invariant (probability bounds, shapes, NaN)."""


class RangeError(DualPruneError):
    """Scalar argument outside its documented domain."""


class WindowError(DualPruneError):
    """Sliding-window length incompatible with the series length."""


class ShapeError(DualPruneError):
    """Array arguments with mismatched or empty shapes."""


class DegenerateError(DualPruneError):
    """Statistic undefined on constant input."""


class MetadataError(DualPruneError):
    """Required optional metadata absent or inconsistent."""


class NumericalError(DualPruneError):
    """A numerical routine produced a non-finite value or lost its bracket."""


class AssumptionError(DualPruneError):
    """Two-point geometry violates the separability/norm assumption."""
