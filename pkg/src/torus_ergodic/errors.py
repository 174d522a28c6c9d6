"""Exception types raised across the package."""


class TorusError(Exception):
    """Base class for package errors."""


class ResolutionError(TorusError, ValueError):
    """A sampling grid is too coarse for the requested frequency radius."""


class DivergenceError(TorusError, ValueError):
    """The lattice sum defining C_r diverges (r <= N)."""


class BoxMismatchError(TorusError, ValueError):
    """Operator or state boxes are incompatible."""


class DimensionError(TorusError, ValueError):
    """An operation was called on a torus of unsupported dimension."""


class BoxTooSmallError(TorusError, ValueError):
    """An operator's box does not cover the energy shell of a tau_E sum."""

    def __init__(self, required_radius: int, radius: int, energy: float):
        self.required_radius = required_radius
        self.radius = radius
        self.energy = energy
        super().__init__(
            f"input box radius {radius} does not cover the shell |n|^2/2 <= {energy}; "
            f"momentum radius >= {required_radius} required"
        )


class SizeLimitError(TorusError, ValueError):
    """Matrix too large for a dense decomposition."""


class ConvergenceError(TorusError, RuntimeError):
    """Power iteration did not reach the requested tolerance."""


class BoundViolation(TorusError, AssertionError):
    """A proven inequality failed numerically."""

    def __init__(self, inequality: str, lhs: float, rhs: float):
        self.inequality = inequality
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"violated {inequality}: {lhs!r} > {rhs!r}")
