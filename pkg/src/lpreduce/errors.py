"""Exception taxonomy shared by all modules."""


class LpReduceError(Exception):
    """Base class for all library errors."""


class ChartExit(LpReduceError):
    """A group-coordinate result left the validity radius of the chart."""


class SingularMatrix(LpReduceError):
    """A group-coefficient matrix became numerically singular (chart boundary)."""


class SingularFP(LpReduceError):
    """Faddeev-Popov matrix singular: gauge surface lost transversality."""


class SingularMetric(LpReduceError):
    """Configuration-space metric not invertible at the evaluation point."""


class SingularOrbitMetric(LpReduceError):
    """Orbit metric d not invertible at the evaluation point."""


class SingularLinearSystem(LpReduceError):
    """Gauge-closure (or similar) linear system is rank deficient."""


class SingularJacobian(LpReduceError):
    """Newton Jacobian rank-deficient in the equilibrium solver."""


class NoConvergence(LpReduceError):
    """Iterative solve exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateOrbit(LpReduceError):
    """Group action not free: Killing vectors linearly dependent."""


class ComplexEigenpair(LpReduceError):
    """Eigen decomposition of the orbit metric returned a complex pair."""


class ConfigError(LpReduceError):
    """Run configuration failed to parse or validate.

    ``field`` carries a dotted path to the offending entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
