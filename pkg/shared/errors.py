"""Error types raised by the engine and reported by the CLI.

Every error that a caller may want to act on carries the data needed to
act on it (achieved estimate, attainable value, offending sample).
"""


class RieszBoundsError(Exception):
    """Base class for all riesz-bounds errors."""


class InvalidParamsError(RieszBoundsError, ValueError):
    """Raised when parameters are outside the domain of an operation."""


class ConeUndefinedError(InvalidParamsError):
    """Raised for cone-based operations at p = 2, where the cones degenerate."""

    def __init__(self, operation: str):
        self.operation = operation
        super().__init__(
            f"{operation} needs p != 2: the cone slope p/(p-2) is undefined at p = 2"
        )


class ZeroDenominatorError(RieszBoundsError, ArithmeticError):
    """Raised when a ratio has a vanishing denominator."""

    def __init__(self, what: str, denominator: float = 0.0):
        self.what = what
        self.denominator = denominator
        super().__init__(f"{what}: denominator vanishes ({denominator!r})")


class QuadratureError(RieszBoundsError):
    """Raised when adaptive quadrature misses its tolerance."""

    def __init__(self, estimate: float, abserr: float, message: str = ""):
        self.estimate = estimate
        self.abserr = abserr
        detail = f" ({message})" if message else ""
        super().__init__(
            f"quadrature did not converge: estimate={estimate!r}, "
            f"error estimate={abserr!r}{detail}"
        )


class NotBiconvexError(RieszBoundsError, ValueError):
    """Raised when a test function fails the midpoint convexity gate."""

    def __init__(self, axis: int, sample: tuple[float, float], excess: float):
        self.axis = axis
        self.sample = sample
        self.excess = excess
        super().__init__(
            f"function is not convex along axis {axis} near {sample}: "
            f"midpoint excess {excess:.3e}"
        )


class WeightSumError(RieszBoundsError, ValueError):
    """Raised when mixture weights do not sum to one."""

    def __init__(self, total: float):
        self.total = total
        super().__init__(f"weights must sum to 1, got {total!r}")


class NonDiagonalError(RieszBoundsError, ValueError):
    """Raised when a realization is requested for a non-diagonal matrix."""

    def __init__(self, a11: float, a12: float, a22: float):
        self.matrix = (a11, a12, a22)
        super().__init__(
            f"only diagonal matrices can be realized by axis-aligned strips, "
            f"got a12={a12!r} in ({a11!r}, {a12!r}, {a22!r})"
        )


class RealizationError(RieszBoundsError):
    """Raised when a prelaminate cannot be realized on the requested grid.

    ``attainable`` is the closest achievable value of the violated
    constraint (a grid size, a radius or a C1 budget depending on ``reason``).
    """

    def __init__(self, reason: str, attainable: float | None = None):
        self.reason = reason
        self.attainable = attainable
        hint = f" (attainable: {attainable:.6g})" if attainable is not None else ""
        super().__init__(f"realization failed: {reason}{hint}")


class WraparoundError(RieszBoundsError):
    """Raised when a field is too close to the boundary of its periodic cell."""

    def __init__(self, frame_energy: float):
        self.frame_energy = frame_energy
        super().__init__(
            f"support reaches the guard frame (relative frame energy "
            f"{frame_energy:.3e}); periodic wraparound would contaminate the result"
        )


class InsufficientSamplesError(RieszBoundsError):
    """Raised when a Monte Carlo statistic is too noisy to be asserted."""

    def __init__(self, standard_error: float, scale: float, paths: int):
        self.standard_error = standard_error
        self.scale = scale
        self.paths = paths
        super().__init__(
            f"standard error {standard_error:.3e} exceeds 10% of {scale:.3e} "
            f"with {paths} paths"
        )


class StageError(RieszBoundsError):
    """Raised when one stage of a multi-stage run fails; wraps the cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
