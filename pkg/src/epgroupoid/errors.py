"""Exception types raised across the package."""


class EPGroupoidError(Exception):
    """Base class for all package errors."""


class NonComposable(EPGroupoidError, ValueError):
    """Two groupoid arrows do not chain: source(g) != target(h)."""


class AntipodalPoints(EPGroupoidError, ValueError):
    """The minimal geodesic between two sphere points is not unique."""


class RadiusMismatch(EPGroupoidError, ValueError):
    pass


class NotSPD(EPGroupoidError, ValueError):
    pass


class IntegrationDiverged(EPGroupoidError, ArithmeticError):
    """A time integrator produced a non-finite state."""


class CFLViolation(EPGroupoidError, ValueError):
    """The back-trace distance exceeds the mesh-resolution limit."""


class NonPositiveHorizon(EPGroupoidError, ValueError):
    pass


class BracketInvalid(EPGroupoidError, ValueError):
    pass
