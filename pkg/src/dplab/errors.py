"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError` so the CLI can map
them to a distinct exit status; malformed input raises ``ValueError``.
"""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure."""


class StepUnderflow(NumericalError):
    """The adaptive integrator needed a step below ``min_step``."""


class ZeroShape(ValueError):
    """The shape is identically zero, so every coupling is resonant."""


class NotResonant(NumericalError):
    """The requested coupling constant is not (numerically) resonant."""


class SingularAlpha(ValueError):
    """Coupling constant at a pole of the product-formula matrix."""


class DegenerateDenominator(NumericalError):
    """A Cramer-rule denominator vanished to working precision."""


class NotConverged(NumericalError):
    """Errors did not decrease monotonically along the refinement sequence."""


class IllConditioned(NumericalError):
    """The tridiagonal elimination showed excessive growth."""
