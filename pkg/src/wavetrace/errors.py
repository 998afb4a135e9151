"""Exception hierarchy shared by all modules."""


class WaveTraceError(Exception):
    """Base class; the CLI maps any subclass to exit status 3."""


class NonSimpleCurve(WaveTraceError):
    pass


class ToleranceNotMet(WaveTraceError):
    pass


class OrderUnavailable(WaveTraceError):
    pass


class NonConvexCurve(WaveTraceError):
    pass


class SingularConfig(WaveTraceError):
    pass


class GrazingRay(WaveTraceError):
    pass


class NoIntersection(WaveTraceError):
    pass


class NoConvergence(WaveTraceError):
    pass


class DegenerateOrbit(WaveTraceError):
    """Raised when the length Hessian is singular within ``degen_tol``.

    ``orbit`` carries the located (but degenerate) orbit when available.
    """

    def __init__(self, message, orbit=None):
        super().__init__(message)
        self.orbit = orbit


class DomainError(WaveTraceError):
    pass


class RangeError(WaveTraceError):
    pass


class DiagonalError(WaveTraceError):
    pass


class ResolutionError(WaveTraceError):
    pass


class TargetTooClose(WaveTraceError):
    pass


class SolveFailure(WaveTraceError):
    pass


class TruncationError(WaveTraceError):
    pass


class IllConditionedFit(WaveTraceError):
    pass


class WindowNotIsolated(WaveTraceError):
    pass


class DegenerateHessian(WaveTraceError):
    pass


class RegimeError(WaveTraceError):
    pass


class JetOrderUnavailable(WaveTraceError):
    pass


class DegenerateAngle(WaveTraceError):
    pass


class ConfigError(WaveTraceError):
    """Bad job configuration (CLI exit status 2)."""
