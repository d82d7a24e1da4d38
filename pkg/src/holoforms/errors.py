"""Exception hierarchy shared by all modules."""


class GeometryError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(GeometryError, ValueError):
    """An input violates a documented precondition."""


class DegenerateFrameError(GeometryError):
    """Gram-Schmidt met an isotropic intermediate vector."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"isotropic intermediate vector at index {index}")


class DecompositionError(GeometryError):
    """A matrix is not in the image of the requested factorization."""


class SingularPointError(GeometryError):
    """Evaluation at a point where a formula is undefined."""


class GateError(GeometryError):
    """Immersion data failed a Gauss-Codazzi or positivity gate."""

    def __init__(self, message: str, residuals: dict | None = None):
        self.residuals = residuals or {}
        super().__init__(message)


class NumericalError(GeometryError):
    """A numerical procedure lost accuracy or produced non-finite values."""
