"""Exception and warning types raised across the package."""


class NhspecError(Exception):
    """Base class for all package errors."""


class OddResolution(NhspecError, ValueError):
    """Grid resolution is odd, not a power of two, or too small."""


class InvalidDimension(NhspecError, ValueError):
    """Spatial dimension outside {2, 3}."""


class NegativePowerAtZeroMode(NhspecError, ValueError):
    """A negative power of |k| was applied to a field with a nonzero mean."""


class HomogeneousNormOnNonzeroMean(NhspecError, ValueError):
    """A homogeneous norm was requested for a field with a nonzero mean."""


class GridTooLarge(NhspecError, ValueError):
    """An O(N^2) quadrature was requested on a grid that is too large."""


class NonFinite(NhspecError, FloatingPointError):
    """A solver quantity became NaN/inf or exceeded the blow-up threshold.

    ``state`` holds the last state reached, for partial output.
    """

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class DeterminantNotOne(NhspecError, ValueError):
    """A deformation is not volume preserving."""


class InconsistentVorticity(NhspecError, ValueError):
    """Vorticity components are not the curl of a periodic vector field."""


class MapLeftDomainProxy(NhspecError, RuntimeError):
    """Flow-map displacement grew beyond a quarter of the period."""


class InversionDiverged(NhspecError, RuntimeError):
    """Newton inversion of the flow map failed to converge."""


class InadmissibleParameters(NhspecError, ValueError):
    """Exponents fall outside the admissible window of an inequality."""


class SpaceMismatch(NhspecError, ValueError):
    """A field is tagged with the wrong coordinate frame for an operation."""


class CheckpointFormatError(NhspecError, ValueError):
    """A checkpoint file is malformed."""


class CflViolation(UserWarning):
    """Time step exceeds the advective CFL bound."""
