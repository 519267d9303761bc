"""Physical parameters, derived scales, and the sampled transverse plane.

Unit conventions used throughout the package:

* transverse lengths in meters,
* detunings and analysis frequencies in units of the cavity decay rate
  (dimensionless),
* amplitudes in sqrt(photons m^-2 s^-1), so the squared modulus is a
  photon flux density.

All types are immutable after construction and can be shared freely
across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import AboveThreshold, NonPositiveParameter, ParameterError

SPEED_OF_LIGHT = 299_792_458.0  # m/s, fixed by convention rather than configurable


class Geometry(Enum):
    PLANAR = "planar"
    CONFOCAL = "confocal"


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise NonPositiveParameter(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class CavityParams:
    """Operating point of the ring-cavity degenerate parametric amplifier.

    gamma    cavity decay rate (1/s)
    detuning cavity detuning in units of gamma (planar) or the detuning of
             the even-mode family (confocal)
    pump     parametric coupling, proportional to the classical pump
             amplitude; stable below-threshold operation requires pump < 1
    """

    gamma: float
    detuning: float
    pump: float
    geometry: Geometry = Geometry.PLANAR

    def __post_init__(self) -> None:
        _require_positive("gamma", self.gamma)
        if self.pump < 0:
            raise NonPositiveParameter(f"pump must be >= 0, got {self.pump!r}")
        if self.pump >= 1:
            raise AboveThreshold(f"pump must be < 1, got {self.pump!r}")
        if not isinstance(self.geometry, Geometry):
            raise ParameterError(f"geometry must be a Geometry, got {self.geometry!r}")


class PupilShape(Enum):
    INFINITE = "infinite"
    SQUARE = "square"
    CIRCULAR = "circular"


@dataclass(frozen=True)
class PupilSpec:
    """Aperture in the Fourier plane of the imaging telescope.

    The infinite ideal pupil has an undefined area; its impulse response
    acts as a delta kernel and is handled analytically downstream.
    """

    shape: PupilShape
    side: float | None = None    # square side (m)
    radius: float | None = None  # circular radius (m)

    def __post_init__(self) -> None:
        if self.shape is PupilShape.SQUARE:
            if self.side is None:
                raise ParameterError("square pupil requires a side")
            _require_positive("side", self.side)
        elif self.shape is PupilShape.CIRCULAR:
            if self.radius is None:
                raise ParameterError("circular pupil requires a radius")
            _require_positive("radius", self.radius)

    @classmethod
    def infinite(cls) -> "PupilSpec":
        return cls(PupilShape.INFINITE)

    @classmethod
    def square(cls, side: float) -> "PupilSpec":
        return cls(PupilShape.SQUARE, side=side)

    @classmethod
    def circular(cls, radius: float) -> "PupilSpec":
        return cls(PupilShape.CIRCULAR, radius=radius)

    @property
    def is_infinite(self) -> bool:
        return self.shape is PupilShape.INFINITE

    @property
    def area(self) -> float | None:
        """Pupil area S_p in m^2, or None for the infinite ideal pupil."""
        if self.shape is PupilShape.SQUARE:
            return self.side * self.side
        if self.shape is PupilShape.CIRCULAR:
            return math.pi * self.radius * self.radius
        return None

    @property
    def width(self) -> float | None:
        """Linear size (side or diameter) that sets the kernel lobe scale."""
        if self.shape is PupilShape.SQUARE:
            return self.side
        if self.shape is PupilShape.CIRCULAR:
            return 2.0 * self.radius
        return None


@dataclass(frozen=True)
class OpticalTrain:
    """Imaging telescope parameters plus derived scales.

    The characteristic transverse length rho0 = f * sqrt(lambda gamma / (pi c))
    sets the scale on which cavity diffraction detunes the amplifier; the
    wavenumber k = 2 pi / lambda. Both are computed at construction and the
    instance is immutable afterwards.
    """

    wavelength: float
    focal: float
    gamma: float
    pupil: PupilSpec = PupilSpec.infinite()
    wavenumber: float = field(init=False)
    rho0: float = field(init=False)

    def __post_init__(self) -> None:
        _require_positive("wavelength", self.wavelength)
        _require_positive("focal", self.focal)
        _require_positive("gamma", self.gamma)
        object.__setattr__(self, "wavenumber", 2.0 * math.pi / self.wavelength)
        object.__setattr__(
            self,
            "rho0",
            self.focal
            * math.sqrt(self.wavelength * self.gamma / (math.pi * SPEED_OF_LIGHT)),
        )

    @property
    def lambda_f(self) -> float:
        """The lens Fourier-scale product lambda * f (m^2)."""
        return self.wavelength * self.focal


def derive_scales(
    cavity: CavityParams,
    wavelength: float,
    focal: float,
    pupil: PupilSpec | None = None,
) -> OpticalTrain:
    """Build the optical train for a cavity, deriving k and rho0.

    Raises NonPositiveParameter for invalid lengths and AboveThreshold if
    the cavity pump is at or above threshold (the latter cannot happen for
    a validly constructed CavityParams, but is re-checked here).
    """
    if cavity.pump >= 1:
        raise AboveThreshold(f"pump must be < 1, got {cavity.pump!r}")
    return OpticalTrain(
        wavelength=wavelength,
        focal=focal,
        gamma=cavity.gamma,
        pupil=pupil if pupil is not None else PupilSpec.infinite(),
    )


@dataclass(frozen=True)
class DetectorParams:
    """Pixelated photodetector: efficiency, pixel area (m^2), time window (s).

    The closed-form photocount statistics assume a window long compared
    with the inverse cavity bandwidth; `long_window_ok` reports whether
    window * gamma >= 100.
    """

    eta: float
    pixel_area: float
    window: float

    def __post_init__(self) -> None:
        if not 0 < self.eta <= 1:
            raise ParameterError(f"eta must be in (0, 1], got {self.eta!r}")
        _require_positive("pixel_area", self.pixel_area)
        _require_positive("window", self.window)

    def long_window_ok(self, gamma: float) -> bool:
        return self.window * gamma >= 100.0


@dataclass(frozen=True)
class TransverseGrid:
    """Square uniform sampling of the transverse plane.

    n samples per axis (even so that rho = 0 lies on a sample), physical
    half-width `extent` (m). Sample coordinates run from -extent to
    extent - spacing; under point reflection the grid is treated as
    periodic, identifying -extent with +extent.
    """

    n: int
    extent: float

    def __post_init__(self) -> None:
        if self.n < 8 or self.n % 2 != 0:
            raise ParameterError(f"n must be even and >= 8, got {self.n!r}")
        _require_positive("extent", self.extent)

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def axis(self) -> np.ndarray:
        """Sample coordinates along one axis (m)."""
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays; values[iy, ix] sits at (X[iy, ix], Y[iy, ix])."""
        ax = self.axis()
        return np.meshgrid(ax, ax)

    def radius(self) -> np.ndarray:
        x, y = self.mesh()
        return np.hypot(x, y)


def _reflect(values: np.ndarray) -> np.ndarray:
    # index i -> (n - i) % n on both axes: point reflection through the
    # origin sample, with the -extent edge wrapping onto itself
    return np.roll(values[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True)
class ComplexField:
    """Complex amplitude sampled on a TransverseGrid.

    Values are stored as a read-only complex128 array; non-finite entries
    are rejected at construction.
    """

    grid: TransverseGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128, copy=True)
        if values.shape != self.grid.shape:
            raise ParameterError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        grid: TransverseGrid,
        fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
        feature_scale: float | None = None,
    ) -> "ComplexField":
        """Sample fn(x, y) on the grid.

        When the caller knows the smallest feature scale of the field it
        can pass it here; a grid spacing at or above that scale is
        rejected.
        """
        if feature_scale is not None and grid.spacing >= feature_scale:
            raise ParameterError(
                f"grid spacing {grid.spacing:.3e} m does not resolve the "
                f"feature scale {feature_scale:.3e} m"
            )
        x, y = grid.mesh()
        return cls(grid, np.broadcast_to(fn(x, y), grid.shape))

    def reflected(self) -> "ComplexField":
        """The field evaluated at -rho (exact sample permutation)."""
        return ComplexField(self.grid, _reflect(self.values))

    def l2_norm(self) -> float:
        """Continuum L2 norm estimated by the grid Riemann sum."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2))) * self.grid.spacing

    def peak_flux(self) -> float:
        """Largest squared modulus on the grid (photons m^-2 s^-1)."""
        return float(np.max(np.abs(self.values) ** 2))


def validity_figure(s_peak_sq: float, train: OpticalTrain, cavity: CavityParams) -> float:
    """Dimensionless figure gating neglect of the residual noise terms.

    Returns s^2 * (lambda^2 f^2 / S_p) * (2 pi / gamma). The closed-form
    photocount statistics hold when this is large compared with one; the
    threshold is applied by callers, never here. For the infinite ideal
    pupil the figure is undefined and +inf is returned.
    """
    if s_peak_sq < 0:
        raise NonPositiveParameter(f"s_peak_sq must be >= 0, got {s_peak_sq!r}")
    area = train.pupil.area
    if area is None:
        return math.inf
    lam_f = train.lambda_f
    return s_peak_sq * (lam_f * lam_f / area) * (2.0 * math.pi / cavity.gamma)


@dataclass(frozen=True)
class ValidityCheck:
    """A validity figure together with the cutoff it was compared against."""

    figure: float
    threshold: float
    infinite_pupil: bool

    @property
    def satisfied(self) -> bool:
        return self.figure >= self.threshold

    def describe(self) -> str:
        status = "PASS" if self.satisfied else "FAIL"
        return f"validity_figure={self.figure:.6f} ({status}, threshold {self.threshold:.6f})"


def validity_check(
    s_peak_sq: float,
    train: OpticalTrain,
    cavity: CavityParams,
    threshold: float = 10.0,
) -> ValidityCheck:
    """Evaluate the validity figure and compare it against a cutoff."""
    figure = validity_figure(s_peak_sq, train, cavity)
    return ValidityCheck(
        figure=figure,
        threshold=threshold,
        infinite_pupil=train.pupil.is_infinite,
    )
