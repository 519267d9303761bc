"""Pixel photodetection statistics for the amplified image.

For a pixel of area S_d observed for a window T_d long compared with the
inverse cavity bandwidth, the closed forms are

    <N_I> = eta S_d T_d s^2 G,
    <dN_I^2> = <N_I> * [1 - eta + eta (cos^2 t e^{2R} + sin^2 t e^{-2R})],

and the noise figure is the ratio of object-plane to image-plane power
SNR. The object-plane reference is the intrinsic shot-noise-limited SNR
of the coherent input (unit-efficiency detection), which makes the
empirical ratio coincide with the closed form

    F = [1 - eta + eta (cos^2 t e^{2R} + sin^2 t e^{-2R})] / (eta G).

Residual noise terms are excluded from the closed forms; every report
carries the validity figure that justifies (or not) that exclusion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .params import (
    CavityParams,
    ComplexField,
    DetectorParams,
    OpticalTrain,
    TransverseGrid,
    ValidityCheck,
    validity_check,
)
from .transfer import SqueezeParams, gain_map, noise_bracket, squeeze_map

GAUSSIAN_MEAN_FLOOR = 20.0


@dataclass(frozen=True)
class PixelStats:
    """Photocount statistics of a single pixel; snr is NaN where undefined."""

    mean: float
    variance: float
    snr: float
    location: tuple[float, float] = (0.0, 0.0)


def image_pixel_mean(s, g, det: DetectorParams):
    """<N_I> = eta S_d T_d |s|^2 G; accepts scalars or per-pixel arrays."""
    return det.eta * det.pixel_area * det.window * np.abs(s) ** 2 * g


def image_pixel_variance(s, g, sq: SqueezeParams, det: DetectorParams):
    """<dN_I^2> = <N_I> * noise bracket of the squeezing parameters."""
    return image_pixel_mean(s, g, det) * noise_bracket(sq, det.eta)


def _snr(mean, variance):
    mean = np.asarray(mean, dtype=np.float64)
    variance = np.asarray(variance, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(variance > 0, mean * mean / variance, np.nan)
    return out if out.ndim else float(out)


def object_pixel_stats(
    s: float, det: DetectorParams, location: tuple[float, float] = (0.0, 0.0)
) -> PixelStats:
    """Coherent-state (Poissonian) statistics of one object-plane pixel."""
    mean = float(det.eta * det.pixel_area * det.window * abs(s) ** 2)
    return PixelStats(mean=mean, variance=mean, snr=_snr(mean, mean), location=location)


@dataclass(frozen=True)
class DetectionReport:
    """Per-pixel image and object statistics, noise figure, and validity gate.

    noise_figure is NaN (masked) wherever the object amplitude vanishes.
    Object-plane fields are the unit-efficiency reference of the input.
    """

    grid: TransverseGrid
    image_mean: np.ndarray
    image_variance: np.ndarray
    image_snr: np.ndarray
    object_mean: np.ndarray
    object_variance: np.ndarray
    object_snr: np.ndarray
    noise_figure: np.ndarray
    mask: np.ndarray  # True where the object amplitude is zero
    validity: ValidityCheck
    long_window: bool

    def image_pixel(self, iy: int, ix: int) -> PixelStats:
        return PixelStats(
            mean=float(self.image_mean[iy, ix]),
            variance=float(self.image_variance[iy, ix]),
            snr=float(self.image_snr[iy, ix]),
            location=self._location(iy, ix),
        )

    def object_pixel(self, iy: int, ix: int) -> PixelStats:
        return PixelStats(
            mean=float(self.object_mean[iy, ix]),
            variance=float(self.object_variance[iy, ix]),
            snr=float(self.object_snr[iy, ix]),
            location=self._location(iy, ix),
        )

    def _location(self, iy: int, ix: int) -> tuple[float, float]:
        ax = self.grid.axis()
        return (float(ax[ix]), float(ax[iy]))


def _snr_ratio(object_snr, image_snr, mask) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = object_snr / image_snr
    return np.where(mask, np.nan, ratio)


def noise_figure_empirical(report: DetectionReport) -> np.ndarray:
    """F = R_O / R_I from the report's SNR fields, NaN on masked pixels."""
    return _snr_ratio(report.object_snr, report.image_snr, report.mask)


def detection_report(
    obj: ComplexField,
    cavity: CavityParams,
    train: OpticalTrain,
    det: DetectorParams,
    validity_threshold: float = 10.0,
) -> DetectionReport:
    """Closed-form statistics of the amplified image of a coherent object."""
    if np.any(obj.values.imag != 0):
        warnings.warn(
            "object amplitude has an imaginary part; closed-form statistics "
            "assume a real coherent amplitude",
            stacklevel=2,
        )
    grid = obj.grid
    s_sq = np.abs(obj.values) ** 2
    g = gain_map(cavity, train, grid)
    sq = squeeze_map(cavity, train, grid)
    image_mean = det.eta * det.pixel_area * det.window * s_sq * g
    image_variance = image_mean * noise_bracket(sq, det.eta)
    # intrinsic (eta = 1) shot-noise reference of the coherent input
    object_mean = det.pixel_area * det.window * s_sq
    mask = s_sq == 0
    image_snr = _snr(image_mean, image_variance)
    object_snr = _snr(object_mean, object_mean)
    return DetectionReport(
        grid=grid,
        image_mean=image_mean,
        image_variance=image_variance,
        image_snr=image_snr,
        object_mean=object_mean,
        object_variance=object_mean.copy(),
        object_snr=object_snr,
        noise_figure=_snr_ratio(object_snr, image_snr, mask),
        mask=mask,
        validity=validity_check(float(np.max(s_sq)), train, cavity, validity_threshold),
        long_window=det.long_window_ok(cavity.gamma),
    )


@dataclass(frozen=True)
class MonteCarloResult:
    """Sampled photocounts and their empirical statistics.

    sample holds the final shot; standard errors are sqrt(var/shots) for
    the mean and var * sqrt(2/(shots-1)) for the variance.
    """

    sample: np.ndarray
    empirical_mean: np.ndarray
    empirical_variance: np.ndarray
    mean_stderr: np.ndarray
    variance_stderr: np.ndarray
    shots: int
    seed: int


def monte_carlo_image(
    mean: np.ndarray, variance: np.ndarray, seed: int, shots: int
) -> MonteCarloResult:
    """Sample per-pixel Gaussian photocounts, clamped at zero and rounded.

    Each pixel draws from its own substream spawned deterministically from
    (seed, pixel index), so results do not depend on evaluation order and
    a fixed seed reproduces bit-identical output.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots!r}")
    mean = np.asarray(mean, dtype=np.float64)
    variance = np.asarray(variance, dtype=np.float64)
    if mean.shape != variance.shape:
        raise ValueError("mean and variance shapes differ")
    if np.any((mean < GAUSSIAN_MEAN_FLOOR) & ((mean > 0) | (variance > 0))):
        warnings.warn(
            f"Gaussian photocount approximation is poor below mean = "
            f"{GAUSSIAN_MEAN_FLOOR:g}",
            stacklevel=2,
        )
    sigma = np.sqrt(variance)
    flat_mean = mean.ravel()
    flat_sigma = sigma.ravel()
    children = np.random.SeedSequence(seed).spawn(flat_mean.size)
    sample = np.empty_like(flat_mean)
    emp_mean = np.empty_like(flat_mean)
    emp_var = np.empty_like(flat_mean)
    for k, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        counts = np.rint(np.maximum(rng.normal(flat_mean[k], flat_sigma[k], shots), 0.0))
        sample[k] = counts[-1]
        emp_mean[k] = counts.mean()
        emp_var[k] = counts.var(ddof=1) if shots > 1 else 0.0
    shape = mean.shape
    emp_mean = emp_mean.reshape(shape)
    emp_var = emp_var.reshape(shape)
    return MonteCarloResult(
        sample=sample.reshape(shape),
        empirical_mean=emp_mean,
        empirical_variance=emp_var,
        mean_stderr=np.sqrt(emp_var / shots),
        variance_stderr=emp_var * np.sqrt(2.0 / (shots - 1)) if shots > 1 else np.zeros(shape),
        shots=shots,
        seed=seed,
    )
