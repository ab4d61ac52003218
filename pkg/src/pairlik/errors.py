"""Exception hierarchy for pairlik.

Every domain error raised by the library derives from :class:`PairlikError`,
so callers (and the CLI) can distinguish bad inputs from genuine bugs.
"""


class PairlikError(Exception):
    """Base class for all pairlik domain errors."""


class EmptyInput(PairlikError):
    """An operation received an empty point set."""


class InsufficientPoints(PairlikError):
    """The operation needs at least two points."""


class InvalidRadius(PairlikError):
    """A pairing radius resolved to a nonpositive value."""


class MissingData(PairlikError):
    """A coupled point lacks covariate or response values."""


class EmptySample(PairlikError):
    """A paired sample with zero couples was passed where data is required."""


class InvalidParams(PairlikError):
    """Parameter triple violates sigma2 > 0 or |psi| < 1."""


class SingularSystem(PairlikError):
    """The slope update denominator vanished during the fixed-point solve."""


class DegenerateVariance(PairlikError):
    """The variance estimate collapsed to a nonpositive value."""


class InsufficientCouples(PairlikError):
    """Fewer couples than the three-parameter system safely supports."""


class NoConvergence(PairlikError):
    """A numerical optimizer failed to converge."""


class InvalidK(PairlikError):
    """Neighbor count k is out of range for the point set."""


class InvalidRho(PairlikError):
    """Spatial coefficient rho lies outside the admissible interval."""


class SingularDesign(PairlikError):
    """The GLS normal equation is singular (degenerate covariate)."""


class NotPositiveDefinite(PairlikError):
    """Cholesky factorization hit a nonpositive pivot."""


class RBUndefined(PairlikError):
    """Relative bias is undefined because the true value is zero."""


class CellFailed(PairlikError):
    """Every replication in a Monte Carlo cell failed."""
