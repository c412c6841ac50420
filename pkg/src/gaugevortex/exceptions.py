"""Error taxonomy shared by all solver stages.

The CLI maps these onto stable process exit codes: configuration problems
exit 2, I/O problems exit 3 (plain OSError), and any failure to converge
exits 4.
"""


class GaugeVortexError(Exception):
    """Base class for everything raised by this package."""


class ConfigurationError(GaugeVortexError, ValueError):
    """Invalid parameter, grid or schedule configuration."""


class DomainError(GaugeVortexError, ValueError):
    """Evaluation requested outside an operation's admissible domain."""


class ShapeError(GaugeVortexError, ValueError):
    """Array length does not match the grid."""


class ConstraintViolationError(GaugeVortexError, ValueError):
    """A field violates a manifold constraint (e.g. b(0) != 0)."""


class EvaluationError(GaugeVortexError, ArithmeticError):
    """Non-finite value produced while evaluating the functional."""


class ConvergenceError(GaugeVortexError, RuntimeError):
    """An iteration ran out of budget; carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class GeometryFailureError(ConvergenceError):
    """The descent ray never reached negative energy (bad seed)."""


class StagnationError(ConvergenceError):
    """Line search collapsed below the minimal step size."""


class SingularSystemError(ConvergenceError):
    """Linearized system could not be solved."""


class OracleFailureError(ConvergenceError):
    """Shooting solver did not converge; the parameter set is downgraded
    to variational-only diagnostics rather than aborting the pipeline."""
