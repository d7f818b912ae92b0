"""Exception hierarchy.

Every error raised on purpose by the library derives from ``HouLuoError`` so
callers (the CLI in particular) can separate validation failures from
programming errors.
"""


class HouLuoError(Exception):
    """Base class for library errors."""


class InvalidConfigError(HouLuoError, ValueError):
    """A configuration or specification object failed validation."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class EmptyIntervalError(HouLuoError, ValueError):
    pass


class SingularityError(HouLuoError, ValueError):
    """Evaluation requested on (or within the exclusion radius of) a singular set."""

    kind = "singular-argument"


class DiagonalSingularityError(SingularityError):
    kind = "diagonal-singularity"


class AxisSingularityError(SingularityError):
    kind = "axis-singularity"


class MeanNotZeroError(HouLuoError, ValueError):
    pass


class SymmetryError(HouLuoError, ValueError):
    pass


class SupportOverflowError(HouLuoError, ValueError):
    pass


class PerturbationError(HouLuoError, ValueError):
    """Rejected perturbation; ``reason`` is one of symmetry-violation,
    periodicity-violation, support-violation, non-smooth, f-invalid."""

    def __init__(self, reason, message):
        self.reason = reason
        super().__init__(f"{reason}: {message}")


class EpsTooLargeError(HouLuoError, ValueError):
    pass


class SupportViolationError(HouLuoError, ValueError):
    pass


class ResolutionError(HouLuoError, ValueError):
    """The requested initial data cannot be represented at the given N."""


class NumericalBlowupError(HouLuoError, FloatingPointError):
    """A field became non-finite during time stepping."""


class FitError(HouLuoError, ValueError):
    pass


class UnorderedSamplesError(HouLuoError, ValueError):
    pass
