"""Exception hierarchy shared by every stage of the pipeline."""


class NucleogradeError(Exception):
    """Base class; ``stage`` names the pipeline step that failed, when known."""

    stage: str = ""


class InvalidImage(NucleogradeError, ValueError):
    pass


class ImageTooSmall(InvalidImage):
    pass


class SingularStainMatrix(NucleogradeError, ValueError):
    pass


class NonFiniteField(NucleogradeError, FloatingPointError):
    pass


class EmptyRegion(NucleogradeError, ValueError):
    pass


class MultipleComponents(NucleogradeError, ValueError):
    pass


class OutOfBounds(NucleogradeError, IndexError):
    pass


class DegenerateLabels(NucleogradeError, ValueError):
    pass


class DimensionMismatch(NucleogradeError, ValueError):
    pass


class ModelFormatError(NucleogradeError, ValueError):
    pass


class OutOfRange(NucleogradeError, ValueError):
    pass


class EmptyPopulation(NucleogradeError, ValueError):
    pass


class WrongQuarterCount(NucleogradeError, ValueError):
    pass


class EmptyCounts(NucleogradeError, ValueError):
    pass


class UndefinedMetric(NucleogradeError, ZeroDivisionError):
    pass


class LengthMismatch(NucleogradeError, ValueError):
    pass


class EmptyAnnotation(NucleogradeError, ValueError):
    pass


class MissingGroundTruth(NucleogradeError, KeyError):
    pass


class ConfigError(NucleogradeError, ValueError):
    pass
