"""Exception taxonomy shared by the extflow modules."""


class ExtflowError(Exception):
    """Base class for all extflow errors."""


# numerics
class NoConvergence(ExtflowError):
    """Adaptive quadrature exhausted its subdivision budget."""


class StepUnderflow(ExtflowError):
    """ODE step size collapsed below machine resolution."""


class Overflow(ExtflowError):
    """Matrix exponential argument exceeds the squaring budget."""


class SingularMatrix(ExtflowError):
    """Linear solve hit a pivot below the singularity tolerance."""


class NoSignChange(ExtflowError):
    """Root bracket endpoints do not straddle a sign change."""


# mobius
class DegenerateMap(ExtflowError):
    """Linear-fractional coefficients with vanishing determinant."""


class NotDiskMap(ExtflowError):
    """Map does not take the closed unit disk into itself."""


# models
class IllPosed(ExtflowError):
    """Model parameters outside the range where the construction applies."""


class OutsideGroup(ExtflowError):
    """Affine element not representable by the model's unitary family."""


class InvalidBoundary(ExtflowError):
    """Boundary parameter invalid for the model."""


# flow
class NearSingularDenominator(ExtflowError):
    """Flow denominator too ill-conditioned to invert reliably."""


class NumericalInconsistency(ExtflowError):
    """Fixed-point sets disagree across group samples beyond tolerance."""


class UnsupportedIndices(ExtflowError):
    """Operation requires deficiency indices the model does not have."""


# spectra
class InvalidRho(ExtflowError):
    """Interval boundary multiplier with modulus >= 1 where < 1 is required."""


class DynamicRangeExceeded(ExtflowError):
    """Requested eigenvalues would span more than the supported magnitude range."""


class InsufficientData(ExtflowError):
    """Not enough eigenvalues to estimate a progression ratio."""


# weylcheck
class NotDissipative(ExtflowError):
    """Grid generator fails the dissipativity check."""


# cli
class ParseError(ExtflowError):
    """Configuration could not be parsed or is missing required fields."""


class IncompatibleModelGroup(ParseError):
    """Model is not invariant under the requested subgroup."""
