"""Exception and warning types shared across the package."""


class EllipsaxError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(EllipsaxError, ValueError):
    """Malformed or out-of-domain input (bad shapes, nonpositive axes, ...)."""


class UnsupportedDimensionError(InvalidInputError):
    """Ambient dimension outside the supported range."""


class ConstraintViolationError(InvalidInputError):
    """A phase point does not satisfy the on-shell constraints within tolerance."""


class DegenerateInputError(InvalidInputError):
    """Input degenerate for the requested operation (e.g. projecting the origin)."""


class IntegrationFailureError(EllipsaxError):
    """The adaptive integrator could not reach the requested time.

    Carries the partial trajectory computed so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NumericalFailureError(EllipsaxError):
    """A numerical routine failed to converge or to meet an internal check."""


class PoleOfQError(InvalidInputError):
    """Evaluation of Q_z or a confocal quadric at z equal to a squared semi-axis."""


class NoContactError(NumericalFailureError):
    """No well-defined tangency contact point for the requested quadric."""


class NoUmbilicFoundError(EllipsaxError):
    """No umbilic point exists (degenerate axes) or the defect did not vanish."""


class InvalidMultiplicitiesError(InvalidInputError):
    """Axis multiplicity pattern does not match the requested construction."""


class InvalidIsometryError(InvalidInputError):
    """A proposed rotation does not preserve the ellipsoid."""


class InsufficientResolutionError(InvalidInputError):
    """A sampling grid is too coarse for the requested analysis."""


class BarrierProximityError(EllipsaxError):
    """Rosochatius flow came within the configured barrier distance of {x_1 = 0}."""


class ReductionInconsistencyError(EllipsaxError):
    """Angular momentum is not constant along the orbit being reduced."""


class DegeneracyAnomalyWarning(UserWarning):
    """The Lax matrix kernel dimension differed from 2 on-shell."""


class MultiplicityWarning(UserWarning):
    """A clustered Lax eigenvalue was treated as a subspace average."""
