"""Parametric amplification of optical images in planar and confocal cavities."""

from .detection import (
    DetectionReport,
    MonteCarloResult,
    PixelStats,
    detection_report,
    image_pixel_mean,
    image_pixel_variance,
    monte_carlo_image,
    noise_figure_empirical,
    object_pixel_stats,
)
from .errors import (
    AboveThreshold,
    CavampError,
    ConfigError,
    GridMismatch,
    GridTooLargeForOracle,
    GridTooSmallForMode,
    NearSingularDenominator,
    NonPositiveParameter,
    NumericalError,
    OddComponentDiscarded,
    ParameterError,
    UnderResolvedKernel,
)
from .modes import (
    Decomposition,
    ModeBasis,
    ModeIndex,
    build_basis,
    decompose,
    mode_function,
    reconstruct,
    split_even_odd,
)
from .params import (
    SPEED_OF_LIGHT,
    CavityParams,
    ComplexField,
    DetectorParams,
    Geometry,
    OpticalTrain,
    PupilShape,
    PupilSpec,
    TransverseGrid,
    ValidityCheck,
    derive_scales,
    validity_check,
    validity_figure,
)
from .propagation import (
    ImpulseResponse,
    PropagationResult,
    amplify,
    amplify_confocal,
    amplify_planar,
    convolve_fft,
    direct_convolution_oracle,
    even_projection,
    impulse_response,
    odd_fraction,
    pupil_transform_quadrature,
)
from .transfer import (
    Mismatch,
    SqueezeParams,
    TransferPair,
    gain,
    gain_map,
    mismatch,
    noise_bracket,
    noise_figure,
    noise_figure_map,
    squeeze,
    squeeze_map,
    transfer_map,
    transfer_pair,
)

__version__ = "0.1.0"
