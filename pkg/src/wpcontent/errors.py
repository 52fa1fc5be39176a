"""Exception types shared across the package."""


class WpcError(Exception):
    """Base class for all package-specific errors."""


class MalformedInputError(WpcError):
    """Input file or payload does not match its documented schema."""


class NotPositiveError(WpcError):
    """Matrix has an eigenvalue below the negative clamp threshold."""

    def __init__(self, eigenvalue: float, threshold: float):
        self.eigenvalue = eigenvalue
        self.threshold = threshold
        super().__init__(
            f"matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} "
            f"is below the clamp threshold {-threshold:.6e}"
        )


class JacobiConvergenceError(WpcError):
    """Jacobi eigensolver did not converge within the sweep cap."""

    def __init__(self, max_sweeps: int, off_norm: float):
        self.max_sweeps = max_sweeps
        self.off_norm = off_norm
        super().__init__(
            f"Jacobi eigensolver hit the sweep cap of {max_sweeps} sweeps "
            f"with off-diagonal norm {off_norm:.3e} still above tolerance"
        )


class DimensionMismatchError(WpcError):
    """Operands have incompatible dimensions."""


class InvalidDepthError(WpcError):
    """Requested tree depth is out of range or incompatible with the size."""


class InvalidFilterError(WpcError):
    """Filter taps violate the quadrature-mirror orthonormality conditions."""


class UnknownNodeError(WpcError):
    """Node word does not belong to the tree."""


class AbsoluteContinuityViolation(WpcError):
    """A zero-mass cylinder carries nonzero vector energy (numerical inconsistency)."""


class NumericalBreakdownError(WpcError):
    """An extraction step produced values outside certified tolerances."""

    def __init__(self, step: int, detail: str):
        self.step = step
        super().__init__(f"numerical breakdown at step {step}: {detail}")


class UndefinedCoherenceError(WpcError):
    """Coherence is undefined because the operator is numerically zero."""


class ConfigError(WpcError):
    """Invalid parameter combination rejected before any computation."""
