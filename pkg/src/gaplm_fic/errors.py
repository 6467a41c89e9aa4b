"""Exception hierarchy shared across the package."""


class GaplmError(Exception):
    """Base class for every error raised by gaplm_fic."""


class DomainError(GaplmError, ValueError):
    """Spline evaluation point outside [0, 1]."""


class DataError(GaplmError, ValueError):
    """Input data are malformed (non-finite values, bad responses, constant columns)."""


class ConfigError(GaplmError, ValueError):
    """Inconsistent user configuration (unknown columns, duplicate submodels, bad focus)."""


class RankDeficiencyError(GaplmError):
    """A design or Gram matrix is numerically singular.

    ``column`` names the first offending column when it can be identified.
    """

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class NonConvergenceError(GaplmError):
    """IRLS failed to converge (typically logistic separation)."""


class SingularityError(GaplmError):
    """The efficient information matrix is not positive definite."""
