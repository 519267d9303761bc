"""Object-to-image field maps through the amplifying cavity and the pupil.

The image field is the convolution of the pupil impulse response with the
amplified object field,

    e(rho) = (1/lambda f) * [ kernel (*) (U s + V s*) ](rho),

with pointwise planar coefficients U(rho, Omega), V(rho, Omega), or scalar
confocal coefficients applied to the even part of the object. The impulse
response is the scaled Fourier transform of the pupil,

    kernel(rho) = (1/lambda f) * integral dxi P(xi) exp(-i 2 pi rho.xi / lambda f),

which for an infinitely large pupil acts as lambda f times a delta at the
origin; that limit is kept analytic instead of sampled.

Discrete convolutions are linear (zero padded), never circular: the
physical kernel has unbounded support and wraparound would corrupt edge
pixels. The FFT fast path and the direct Riemann-sum oracle share
identical padding and cropping semantics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from .errors import (
    GridMismatch,
    GridTooLargeForOracle,
    OddComponentDiscarded,
    ParameterError,
    UnderResolvedKernel,
)
from .params import (
    CavityParams,
    ComplexField,
    Geometry,
    OpticalTrain,
    PupilShape,
    PupilSpec,
    TransverseGrid,
    ValidityCheck,
    validity_check,
)
from .transfer import EPS_SINGULAR, mismatch, transfer_map, transfer_pair

ORACLE_MAX_N = 64
ODD_WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ImpulseResponse:
    """Sampled pupil impulse response, or the analytic delta-kernel limit.

    kernel is None exactly when the pupil is the infinite ideal one; the
    delta limit carries an implicit lambda f weight that cancels the
    1/(lambda f) prefactor of the image integral.
    """

    kernel: ComplexField | None
    pupil: PupilSpec
    lambda_f: float

    @property
    def is_delta(self) -> bool:
        return self.kernel is None


def impulse_response(
    pupil: PupilSpec, train: OpticalTrain, grid: TransverseGrid
) -> ImpulseResponse:
    """Sample the pupil impulse response on the image-plane grid.

    The grid must resolve the kernel main lobe: spacing <= (lambda f / d)/4
    for pupil side or diameter d, otherwise UnderResolvedKernel is raised.
    Square and circular pupils use the closed forms (separable sinc and
    Airy-type 2 J1(x)/x); midpoint quadrature of the defining integral is
    available separately as a test oracle.
    """
    lam_f = train.lambda_f
    if pupil.is_infinite:
        return ImpulseResponse(kernel=None, pupil=pupil, lambda_f=lam_f)
    lobe = lam_f / pupil.width
    # tiny relative slack so a spacing nominally equal to the bound passes
    if grid.spacing > (lobe / 4.0) * (1.0 + 1e-9):
        raise UnderResolvedKernel(
            f"grid spacing {grid.spacing:.3e} m exceeds (lambda f / d)/4 = "
            f"{lobe / 4.0:.3e} m for pupil width {pupil.width:.3e} m"
        )
    x, y = grid.mesh()
    if pupil.shape is PupilShape.SQUARE:
        d = pupil.side
        values = (d * d / lam_f) * np.sinc(d * x / lam_f) * np.sinc(d * y / lam_f)
    else:
        a = pupil.radius
        arg = 2.0 * np.pi * a * np.hypot(x, y) / lam_f
        safe = np.where(arg == 0.0, 1.0, arg)
        jinc = np.where(arg == 0.0, 1.0, 2.0 * j1(safe) / safe)
        values = (np.pi * a * a / lam_f) * jinc
    return ImpulseResponse(kernel=ComplexField(grid, values), pupil=pupil, lambda_f=lam_f)


def pupil_transform_quadrature(
    pupil: PupilSpec, train: OpticalTrain, x: float, y: float, samples: int = 256
) -> complex:
    """Midpoint-rule evaluation of the impulse response at one point.

    Independent oracle for the closed forms in impulse_response; cost is
    samples^2 per evaluation point.
    """
    if pupil.is_infinite:
        raise ParameterError("quadrature oracle undefined for the infinite pupil")
    lam_f = train.lambda_f
    half = pupil.width / 2.0
    step = 2.0 * half / samples
    centers = (np.arange(samples) + 0.5) * step - half
    xi, eta = np.meshgrid(centers, centers)
    inside = (
        np.ones_like(xi, dtype=bool)
        if pupil.shape is PupilShape.SQUARE
        else xi * xi + eta * eta <= pupil.radius**2
    )
    phase = np.exp(-2j * np.pi * (x * xi + y * eta) / lam_f)
    return complex(np.sum(phase[inside]) * step * step / lam_f)


def _same_grid(a: ComplexField, b: ComplexField) -> TransverseGrid:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    return a.grid


def convolve_fft(kernel: ComplexField, field: ComplexField) -> ComplexField:
    """Linear convolution (kernel (*) field) * spacing^2 via zero-padded FFT.

    The full 2n-1 support is cropped back so that a unit delta at the
    origin sample (value 1/spacing^2) acts as the identity.
    """
    grid = _same_grid(kernel, field)
    n = grid.n
    m = 2 * n
    full = np.fft.ifft2(
        np.fft.fft2(kernel.values, s=(m, m)) * np.fft.fft2(field.values, s=(m, m))
    )
    c = n // 2
    return ComplexField(grid, full[c : c + n, c : c + n] * grid.spacing**2)


def direct_convolution_oracle(
    kernel: ComplexField, field: ComplexField, max_n: int = ORACLE_MAX_N
) -> ComplexField:
    """O(n^4) Riemann-sum convolution with the same crop semantics as the FFT path.

    Verification oracle only; grids above max_n are refused.
    """
    grid = _same_grid(kernel, field)
    n = grid.n
    if n > max_n:
        raise GridTooLargeForOracle(f"oracle limited to n <= {max_n}, got {n}")
    kr = kernel.values[::-1, ::-1]
    f = field.values
    c = n // 2
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        oi = n - 1 - c - i
        ip_lo, ip_hi = max(0, -oi), min(n, n - oi)
        for j in range(n):
            oj = n - 1 - c - j
            jp_lo, jp_hi = max(0, -oj), min(n, n - oj)
            out[i, j] = np.sum(
                kr[ip_lo + oi : ip_hi + oi, jp_lo + oj : jp_hi + oj]
                * f[ip_lo:ip_hi, jp_lo:jp_hi]
            )
    return ComplexField(grid, out * grid.spacing**2)


def apply_impulse(response: ImpulseResponse, field: ComplexField) -> ComplexField:
    """(1/lambda f) * (kernel (*) field); identity for the delta-kernel limit."""
    if response.is_delta:
        return field
    convolved = convolve_fft(response.kernel, field)
    return ComplexField(field.grid, convolved.values / response.lambda_f)


def even_projection(field: ComplexField) -> ComplexField:
    """Even part (f(rho) + f(-rho))/2 under the grid's point reflection; idempotent."""
    return ComplexField(field.grid, (field.values + field.reflected().values) / 2.0)


def odd_fraction(field: ComplexField) -> float:
    """Relative L2 energy of the odd component; 0 for the zero field."""
    total = float(np.sum(np.abs(field.values) ** 2))
    if total == 0.0:
        return 0.0
    odd = field.values - even_projection(field).values
    return float(np.sum(np.abs(odd) ** 2)) / total


@dataclass(frozen=True)
class PropagationResult:
    """Amplified image field plus the transfer data and validity figure used."""

    image: ComplexField
    geometry: Geometry
    u: np.ndarray | complex
    v: np.ndarray | complex
    validity: ValidityCheck
    real_input: bool
    discarded_odd_weight: float = 0.0


def amplify_planar(
    obj: ComplexField,
    cavity: CavityParams,
    train: OpticalTrain,
    omega: float = 0.0,
    validity_threshold: float = 10.0,
    eps_singular: float = EPS_SINGULAR,
) -> PropagationResult:
    """Amplified image of an object through the planar cavity.

    U and V vary over the transverse plane through the local mismatch;
    the object is amplified pointwise and then blurred by the pupil.
    """
    if cavity.geometry is not Geometry.PLANAR:
        raise ParameterError("amplify_planar requires a planar-geometry cavity")
    grid = obj.grid
    u, v = transfer_map(cavity, train, grid, omega, eps_singular)
    amplified = ComplexField(grid, u * obj.values + v * np.conj(obj.values))
    image = apply_impulse(impulse_response(train.pupil, train, grid), amplified)
    return PropagationResult(
        image=image,
        geometry=cavity.geometry,
        u=u,
        v=v,
        validity=validity_check(obj.peak_flux(), train, cavity, validity_threshold),
        real_input=bool(np.all(obj.values.imag == 0)),
    )


def amplify_confocal(
    obj: ComplexField,
    cavity: CavityParams,
    train: OpticalTrain,
    omega: float = 0.0,
    validity_threshold: float = 10.0,
    eps_singular: float = EPS_SINGULAR,
) -> PropagationResult:
    """Amplified image of the even part of an object through the confocal cavity.

    Only the even-parity mode family is quasi-resonant; any odd component
    is projected out first, and its relative L2 weight is reported through
    an OddComponentDiscarded warning when above 1e-12.
    """
    if cavity.geometry is not Geometry.CONFOCAL:
        raise ParameterError("amplify_confocal requires a confocal-geometry cavity")
    grid = obj.grid
    even = even_projection(obj)
    weight = odd_fraction(obj)
    if weight > ODD_WEIGHT_TOLERANCE:
        warnings.warn(OddComponentDiscarded(weight), stacklevel=2)
    pair = transfer_pair(
        mismatch(cavity, train, omega=omega),
        mismatch(cavity, train, omega=-omega),
        cavity.pump,
        eps_singular,
    )
    amplified = ComplexField(grid, pair.u * even.values + pair.v * np.conj(even.values))
    image = apply_impulse(impulse_response(train.pupil, train, grid), amplified)
    return PropagationResult(
        image=image,
        geometry=cavity.geometry,
        u=pair.u,
        v=pair.v,
        validity=validity_check(obj.peak_flux(), train, cavity, validity_threshold),
        real_input=bool(np.all(obj.values.imag == 0)),
        discarded_odd_weight=weight,
    )


def amplify(
    obj: ComplexField,
    cavity: CavityParams,
    train: OpticalTrain,
    omega: float = 0.0,
    validity_threshold: float = 10.0,
) -> PropagationResult:
    """Dispatch to the planar or confocal image map by cavity geometry."""
    if cavity.geometry is Geometry.CONFOCAL:
        return amplify_confocal(obj, cavity, train, omega, validity_threshold)
    return amplify_planar(obj, cavity, train, omega, validity_threshold)
