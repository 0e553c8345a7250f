"""Exception types shared across the package."""


class UltrawaveError(Exception):
    """Base class for all library errors."""


class SpecMismatchError(UltrawaveError):
    """Operands belong to different groups or incompatible contexts."""


class PrecisionError(UltrawaveError):
    """A value is not known to enough digits for the requested operation."""


class ValidationError(UltrawaveError):
    """Input data violates a structural invariant; message names the violation."""


class RefinementNeededError(UltrawaveError):
    """A signal window is too coarse for the wavelet being integrated."""


class WindowError(UltrawaveError):
    """A basis window does not cover the signal's support/constancy scales."""


class ConstructionError(UltrawaveError):
    """The set iteration could not certify a step (diagnostic, not a math failure)."""
