"""Frequency-domain input-output response of the parametric cavity.

Below threshold the cavity maps the input annihilation operator at
(rho, Omega) onto a Bogoliubov pair

    U = [(1 - i d+)(1 - i d-) + Ap^2] / D,
    V = 2 Ap / D,            D = (1 + i d+)(1 - i d-) - Ap^2,

where d+ = delta(rho, Omega) and d- = delta(rho, -Omega) evaluate the
local mismatch. For the planar cavity the mismatch carries a transverse
diffraction term, delta = Delta - Omega + (rho/rho0)^2; for the confocal
cavity it is position independent, delta = Delta+ - Omega. |U|^2 - |V|^2
= 1 identically.

Gain, squeezing, and noise-figure quantities are all evaluated at
Omega = 0, where the detection window collapses the spectra.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NearSingularDenominator
from .params import CavityParams, Geometry, OpticalTrain, TransverseGrid

EPS_SINGULAR = 1e-9


@dataclass(frozen=True)
class Mismatch:
    """Local mismatch delta at one (rho, Omega); rho is None for confocal."""

    value: float
    rho: float | None
    omega: float
    geometry: Geometry


def mismatch_value(cavity: CavityParams, train: OpticalTrain, rho, omega):
    """Mismatch as a plain number (or array, broadcasting over rho/omega)."""
    if cavity.geometry is Geometry.CONFOCAL:
        return cavity.detuning - omega
    return cavity.detuning - omega + (rho / train.rho0) ** 2


def mismatch(
    cavity: CavityParams,
    train: OpticalTrain,
    rho: float = 0.0,
    omega: float = 0.0,
) -> Mismatch:
    """Evaluate the mismatch function for either geometry.

    For the confocal geometry rho is ignored and recorded as None, so two
    constructions differing only in rho compare equal.
    """
    if cavity.geometry is Geometry.CONFOCAL:
        return Mismatch(
            value=float(cavity.detuning - omega),
            rho=None,
            omega=omega,
            geometry=cavity.geometry,
        )
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho!r}")
    return Mismatch(
        value=float(mismatch_value(cavity, train, rho, omega)),
        rho=rho,
        omega=omega,
        geometry=cavity.geometry,
    )


@dataclass(frozen=True)
class TransferPair:
    """Bogoliubov coefficients (U, V) at one evaluation point."""

    u: complex
    v: complex
    delta_plus: float
    delta_minus: float
    pump: float


def _uv(delta_plus, delta_minus, pump):
    """Core U, V, D evaluation; works on scalars and arrays alike.

    Arithmetic goes through numpy so the scalar and map paths produce
    bit-identical values; a vanishing denominator yields inf/nan here and
    is turned into NearSingularDenominator by the callers.
    """
    delta_plus = np.asarray(delta_plus, dtype=np.float64)
    delta_minus = np.asarray(delta_minus, dtype=np.float64)
    den = (1 + 1j * delta_plus) * (1 - 1j * delta_minus) - pump**2
    with np.errstate(divide="ignore", invalid="ignore"):
        u = ((1 - 1j * delta_plus) * (1 - 1j * delta_minus) + pump**2) / den
        v = 2 * pump / den
    return u, v, den


def _value(delta) -> float:
    return delta.value if isinstance(delta, Mismatch) else float(delta)


def transfer_pair(
    delta_plus,
    delta_minus,
    pump: float,
    eps_singular: float = EPS_SINGULAR,
) -> TransferPair:
    """Evaluate (U, V) for mismatches at +Omega and -Omega.

    Accepts Mismatch instances or bare floats. Raises
    NearSingularDenominator when |D| <= eps_singular, which flags
    operation at or above the instability boundary.
    """
    dp = _value(delta_plus)
    dm = _value(delta_minus)
    u, v, den = _uv(dp, dm, pump)
    if abs(den) <= eps_singular:
        raise NearSingularDenominator(
            f"|D|={abs(den):.3e} <= {eps_singular:.3e} at "
            f"delta+={dp!r}, delta-={dm!r}, pump={pump!r}"
        )
    return TransferPair(u=complex(u), v=complex(v), delta_plus=dp, delta_minus=dm, pump=pump)


@dataclass(frozen=True)
class SqueezeParams:
    """Squeezing parameter R >= 0 and orientation angle theta in [-pi/2, pi/2].

    exp(+-R) = |U| +- |V| and 2 theta = arg(U+V) - arg U - arg V, all at
    Omega = 0. Fields may hold arrays when describing a whole map.
    """

    r: float
    theta: float


def _canonical_theta(theta):
    # shift by multiples of pi into [-pi/2, pi/2]; cos^2/sin^2 are invariant
    return theta - math.pi * np.round(theta / math.pi)


def squeeze(pair: TransferPair) -> SqueezeParams:
    """Polar decomposition of a transfer pair evaluated at Omega = 0.

    With V = 0 (pump off) the angle is undefined; R = 0, theta = 0 is
    returned so the noise bracket degrades continuously to 1.
    """
    if pair.v == 0:
        return SqueezeParams(r=0.0, theta=0.0)
    r = math.log(abs(pair.u) + abs(pair.v))
    two_theta = (
        cmath.phase(pair.u + pair.v) - cmath.phase(pair.u) - cmath.phase(pair.v)
    )
    return SqueezeParams(r=r, theta=float(_canonical_theta(two_theta / 2.0)))


def gain(pair: TransferPair) -> float:
    """Mean-field gain G = |U + V|^2 at Omega = 0.

    At zero mismatch this reduces to [(1 + Ap)/(1 - Ap)]^2.
    """
    return abs(pair.u + pair.v) ** 2


def noise_bracket(sq: SqueezeParams, eta):
    """The photocount noise factor 1 - eta + eta (cos^2 t e^{2R} + sin^2 t e^{-2R})."""
    c = np.cos(sq.theta)
    s = np.sin(sq.theta)
    return 1.0 - eta + eta * (c * c * np.exp(2.0 * sq.r) + s * s * np.exp(-2.0 * sq.r))


def noise_figure(g, sq: SqueezeParams, eta):
    """Noise figure F = noise_bracket / (eta G); F = 1 is noiseless."""
    return noise_bracket(sq, eta) / (eta * g)


def _delta_field(cavity: CavityParams, train: OpticalTrain, grid: TransverseGrid, omega):
    return mismatch_value(cavity, train, grid.radius(), omega)


def _check_denominator(den: np.ndarray, grid: TransverseGrid, eps_singular: float) -> None:
    mag = np.abs(den)
    idx = np.unravel_index(int(np.argmin(mag)), mag.shape)
    if mag[idx] <= eps_singular:
        x, y = grid.mesh()
        raise NearSingularDenominator(
            f"|D|={mag[idx]:.3e} <= {eps_singular:.3e} at "
            f"rho=({x[idx]:.6e}, {y[idx]:.6e}) m"
        )


def transfer_map(
    cavity: CavityParams,
    train: OpticalTrain,
    grid: TransverseGrid,
    omega: float = 0.0,
    eps_singular: float = EPS_SINGULAR,
) -> tuple[np.ndarray, np.ndarray]:
    """(U, V) arrays over the grid at analysis frequency omega.

    Confocal values are position independent and are broadcast as exactly
    constant arrays.
    """
    if cavity.geometry is Geometry.CONFOCAL:
        pair = transfer_pair(
            mismatch(cavity, train, omega=omega),
            mismatch(cavity, train, omega=-omega),
            cavity.pump,
            eps_singular,
        )
        return (
            np.full(grid.shape, pair.u, dtype=np.complex128),
            np.full(grid.shape, pair.v, dtype=np.complex128),
        )
    dp = _delta_field(cavity, train, grid, omega)
    dm = _delta_field(cavity, train, grid, -omega)
    u, v, den = _uv(dp, dm, cavity.pump)
    _check_denominator(den, grid, eps_singular)
    return u, v


def gain_map(cavity: CavityParams, train: OpticalTrain, grid: TransverseGrid) -> np.ndarray:
    """Per-sample gain at Omega = 0; constant for the confocal geometry."""
    if cavity.geometry is Geometry.CONFOCAL:
        d = mismatch(cavity, train)
        return np.full(grid.shape, gain(transfer_pair(d, d, cavity.pump)))
    u, v = transfer_map(cavity, train, grid)
    return np.abs(u + v) ** 2


def squeeze_map(cavity: CavityParams, train: OpticalTrain, grid: TransverseGrid) -> SqueezeParams:
    """Per-sample squeezing parameters at Omega = 0 (array-valued fields)."""
    if cavity.geometry is Geometry.CONFOCAL:
        d = mismatch(cavity, train)
        sq = squeeze(transfer_pair(d, d, cavity.pump))
        return SqueezeParams(
            r=np.full(grid.shape, sq.r), theta=np.full(grid.shape, sq.theta)
        )
    u, v = transfer_map(cavity, train, grid)
    vabs = np.abs(v)
    r = np.where(vabs == 0, 0.0, np.log(np.abs(u) + vabs))
    two_theta = np.where(
        vabs == 0, 0.0, np.angle(u + v) - np.angle(u) - np.angle(v)
    )
    return SqueezeParams(r=r, theta=_canonical_theta(two_theta / 2.0))


def noise_figure_map(
    cavity: CavityParams,
    train: OpticalTrain,
    grid: TransverseGrid,
    eta: float,
) -> np.ndarray:
    """Per-sample noise figure at Omega = 0; constant for confocal."""
    if cavity.geometry is Geometry.CONFOCAL:
        d = mismatch(cavity, train)
        pair = transfer_pair(d, d, cavity.pump)
        return np.full(grid.shape, noise_figure(gain(pair), squeeze(pair), eta))
    return noise_figure(gain_map(cavity, train, grid), squeeze_map(cavity, train, grid), eta)
