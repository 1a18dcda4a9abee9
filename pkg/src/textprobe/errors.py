"""Exception hierarchy for the probe toolkit."""


class ProbeError(Exception):
    """Base class for all toolkit errors."""


class InputError(ProbeError):
    """Invalid argument value or infeasible request."""


class DimensionError(ProbeError):
    """Shapes or lengths of related objects disagree."""


class NumericError(ProbeError):
    """Non-finite value encountered where a finite one is required.

    When raised by the optimizer, ``update_index`` identifies the
    zero-based variable update that produced the bad value.
    """

    def __init__(self, message, update_index=None):
        super().__init__(message)
        self.update_index = update_index


class NormError(ProbeError):
    """A row violates the unit-norm requirement. ``row`` is its index."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class EmptyClassError(ProbeError):
    """A class has no support samples, so its hard mean is undefined."""


class DegenerateTextError(ProbeError):
    """All text embeddings are orthogonal to every feature row."""


class DegenerateWeightError(ProbeError):
    """A soft-mean weight column sums to (numerically) zero."""


class OracleScopeError(ProbeError):
    """A test oracle was invoked outside its supported problem size."""


class FormatError(ProbeError):
    """A binary or manifest file is malformed."""


class ResourceError(ProbeError):
    """An allocation or resource limit failed."""
