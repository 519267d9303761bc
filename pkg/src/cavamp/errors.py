"""Exception hierarchy shared by all cavamp modules."""


class CavampError(Exception):
    """Base class for all cavamp errors."""


class ParameterError(CavampError, ValueError):
    """A physical parameter is outside its valid range."""


class NonPositiveParameter(ParameterError):
    """A parameter that must be positive (or non-negative) is not."""


class AboveThreshold(ParameterError):
    """Pump coupling at or above the oscillation threshold (pump >= 1)."""


class GridMismatch(CavampError, ValueError):
    """Two fields or a field and a basis do not share the same grid."""


class ConfigError(CavampError, ValueError):
    """A scenario configuration file is missing or malformed."""


class NumericalError(CavampError):
    """A computation left its domain of numerical validity."""


class NearSingularDenominator(NumericalError):
    """Transfer-function denominator too close to zero (instability boundary)."""


class UnderResolvedKernel(NumericalError):
    """Grid spacing too coarse to sample the pupil impulse response."""


class GridTooLargeForOracle(NumericalError):
    """Direct-summation convolution oracle refused a grid above its cost guard."""


class GridTooSmallForMode(NumericalError):
    """Requested mode does not fit inside the grid extent."""


class OddComponentDiscarded(UserWarning):
    """Confocal amplification discarded the odd part of the input field."""

    def __init__(self, weight: float):
        self.weight = weight
        super().__init__(
            f"odd component with relative L2 weight {weight:.3e} discarded"
        )
