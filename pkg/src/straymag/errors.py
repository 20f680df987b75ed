"""Exception types raised by straymag.

All errors derive from :class:`StrayMagError`, which is a ``ValueError`` so
callers that only care about bad input can catch the builtin.
"""


class StrayMagError(ValueError):
    """Base class for all straymag errors."""


# scene
class NonPositiveDimension(StrayMagError):
    pass


class NonFiniteInput(StrayMagError):
    pass


class InvalidPose(StrayMagError):
    pass


# magnetostatics
class SingularPoint(StrayMagError):
    pass


class LogSingularity(StrayMagError):
    pass


class EdgeSingularity(StrayMagError):
    pass


class NonFinitePoint(StrayMagError):
    pass


class SurfacePoint(StrayMagError):
    pass


class QuadratureTooCoarse(StrayMagError):
    pass


class CoincidentPoint(StrayMagError):
    pass


class DegenerateAxes(StrayMagError):
    pass


class SceneEvaluationError(StrayMagError):
    """A member magnet (``index``) or sample (``sample``) failed to evaluate."""

    def __init__(self, message, index=None, sample=None):
        super().__init__(message)
        self.index = index
        self.sample = sample


# squid
class DiskIntersectsMagnet(StrayMagError):
    pass


class QuadratureFailure(StrayMagError):
    pass


class PitchMismatch(StrayMagError):
    pass


class EmptyImage(StrayMagError):
    pass


class ZeroTemplateSignal(StrayMagError):
    pass


class NoSignal(StrayMagError):
    pass


class DidNotConverge(UserWarning):
    """Warning: a fit hit its iteration cap; the best-so-far result is returned."""


# epitaxy
class ZeroDirection(StrayMagError):
    pass


class FourIndexInvalid(StrayMagError):
    pass


class AngleOutOfRange(StrayMagError):
    pass


class UnknownPair(StrayMagError):
    pass


class UnknownMaterial(StrayMagError):
    pass


# config files
class ParseError(StrayMagError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(StrayMagError):
    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path


class ValidationError(StrayMagError):
    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path
