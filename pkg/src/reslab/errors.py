"""Exception and warning types raised by reslab."""


class ReslabError(Exception):
    """Base class for all reslab errors."""


class NotHyperbolic(ReslabError):
    pass


class ConeConditionFailed(ReslabError):
    pass


class BadPerturbation(ReslabError):
    pass


class CountCapExceeded(ReslabError):
    pass


class NewtonDiverged(ReslabError):
    pass


class SingularJacobian(ReslabError):
    pass


class CountMismatch(ReslabError):
    """Continuation lost or merged periodic points; the count is no longer |det(A^n - I)|."""


class SeriesRoundTripError(ReslabError):
    pass


class DegenerateLeading(ReslabError):
    pass


class NoUnitEigenvalue(ReslabError):
    pass


class MomentSystemSingular(ReslabError):
    pass


class SupportOverlap(ReslabError):
    pass


class NotMeanZero(ReslabError):
    pass


class UntrustedSpectrum(ReslabError):
    pass


class HankelIllConditioned(ReslabError):
    pass


class ConfigError(ReslabError):
    """Invalid command-line or file configuration."""


class AliasWarning(UserWarning):
    """Quadrature grid too coarse: doubling it moved a matrix entry."""


class ErrorFloorReached(UserWarning):
    """Trace errors reached the quadrature floor; the fitted slope is not meaningful."""
