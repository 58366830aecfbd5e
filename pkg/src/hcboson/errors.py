"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems -> 2,
numerical failures -> 3, trend-assertion failures -> 4.
"""


class HcbError(Exception):
    """Base class for all package errors."""


class ConfigError(HcbError):
    """Malformed or inconsistent run configuration."""


class ValidationError(ConfigError):
    """Arguments violate an operation's preconditions."""


class ConnectivityError(ValidationError):
    """Lattice graph is not a single connected component."""


class NumericalError(HcbError):
    """Base for failures of the numerical machinery."""


class ResolutionError(NumericalError):
    """Real-space grid too coarse for the requested phase-space window."""


class ConditioningError(NumericalError):
    """Near-singular Gram matrix during orthogonalization."""


class WindowError(NumericalError):
    """Level leakage above tolerance; the cell window is too small."""


class CostError(NumericalError):
    """Projected enumeration cost exceeds the configured budget."""


class ConvergenceError(NumericalError):
    """Eigensolver or propagator failed to reach the requested tolerance."""


class FitError(NumericalError):
    """Least-squares fit failed or the regressor is degenerate."""


class TrendError(HcbError):
    """A canned figure's trend assertion failed."""
