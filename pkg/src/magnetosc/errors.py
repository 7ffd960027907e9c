"""Exception hierarchy shared by every module of the package."""


class MagnetoscError(Exception):
    """Base class for all errors raised by magnetosc."""


class OutOfRange(MagnetoscError, ValueError):
    """A tabulated profile was evaluated outside its knot range."""


class QuadratureFailure(MagnetoscError, RuntimeError):
    pass


class SolverFailure(MagnetoscError, RuntimeError):
    pass


class InvalidFrequency(MagnetoscError, ValueError):
    """A normal-mode squared frequency is not strictly positive."""


class InvalidScenario(MagnetoscError, ValueError):
    """The scenario lies outside the class the decoupling chain handles exactly."""


class FrameMismatch(MagnetoscError, ValueError):
    pass


class ZeroRho(MagnetoscError, ZeroDivisionError):
    pass


class GridMismatch(MagnetoscError, ValueError):
    pass


class HermiteOverflow(MagnetoscError, OverflowError):
    pass


class ScenarioError(MagnetoscError, ValueError):
    """A scenario file could not be parsed or fails schema validation."""
