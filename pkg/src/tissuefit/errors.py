"""Exception hierarchy shared across the package.

The CLI maps these onto stable exit codes: validation problems exit 1,
numerical failures exit 2, optimizer non-convergence exits 3.
"""


class TissuefitError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(TissuefitError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class InvalidStateError(TissuefitError, RuntimeError):
    """An internal invariant is violated (e.g. inverted element geometry)."""


class MeshParseError(TissuefitError, ValueError):
    """Mesh file is malformed; carries the offending 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ElementInversionError(InvalidStateError):
    """det(F) <= 0 at an element centroid during a simulation."""

    def __init__(self, element, time, det=None):
        detail = f" (det F = {det:.3e})" if det is not None else ""
        super().__init__(
            f"element {element} inverted at t = {time:.6e} s{detail}"
        )
        self.element = element
        self.time = time


class DivergenceError(TissuefitError, RuntimeError):
    """The explicit integration became unstable."""

    def __init__(self, message, time=None):
        if time is not None:
            message = f"{message} at t = {time:.6e} s"
        super().__init__(message)
        self.time = time


class ConvergenceError(TissuefitError, RuntimeError):
    """The calibration optimizer failed to converge."""
