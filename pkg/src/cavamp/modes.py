"""Gauss-Laguerre transverse mode basis for the confocal cavity.

Real-valued modes indexed by radial number p, azimuthal number l, and an
azimuthal parity label (cos/sin degeneracy):

    f(rho, phi) = C * (sqrt(2) rho / w)^l * L_p^l(2 rho^2 / w^2)
                  * exp(-rho^2 / w^2) * {cos(l phi), sin(l phi)},

normalized to unit L2 on the plane. Point-reflection parity equals
(-1)^l, so the even-l and odd-l families split the field into its even
and odd parts; in the confocal cavity the two families sit half a free
spectral range apart and only the even-l family is quasi-resonant.

The azimuthal factor is evaluated as Re/Im[(x + i y)^l] by repeated
multiplication, which keeps the (-1)^l parity exact on the sampled grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import GridMismatch, GridTooSmallForMode, ParameterError
from .params import ComplexField, TransverseGrid

COSINE = "cosine"
SINE = "sine"

# fraction of the grid half-width the mode radius w sqrt(2p + l + 1) may fill
EXTENT_FILL = 0.7


@dataclass(frozen=True)
class ModeIndex:
    p: int
    l: int
    parity: str = COSINE

    def __post_init__(self) -> None:
        if self.p < 0 or self.l < 0:
            raise ParameterError(f"mode indices must be >= 0, got p={self.p}, l={self.l}")
        if self.parity not in (COSINE, SINE):
            raise ParameterError(f"parity must be 'cosine' or 'sine', got {self.parity!r}")
        if self.l == 0 and self.parity == SINE:
            raise ParameterError("sine parity is undefined for l = 0")

    @property
    def frequency_class(self) -> str:
        """'even' or 'odd': modes within one class share a resonance frequency."""
        return "even" if self.l % 2 == 0 else "odd"


def mode_radius(idx: ModeIndex, waist: float) -> float:
    """Effective transverse extent w sqrt(2p + l + 1) of the mode."""
    return waist * math.sqrt(2 * idx.p + idx.l + 1)


def mode_function(idx: ModeIndex, waist: float, grid: TransverseGrid) -> ComplexField:
    """Sample one normalized mode; raises GridTooSmallForMode if it does not fit."""
    if waist <= 0:
        raise ParameterError(f"waist must be > 0, got {waist!r}")
    if mode_radius(idx, waist) > EXTENT_FILL * grid.extent:
        raise GridTooSmallForMode(
            f"mode (p={idx.p}, l={idx.l}) radius {mode_radius(idx, waist):.3e} m "
            f"exceeds {EXTENT_FILL} * extent = {EXTENT_FILL * grid.extent:.3e} m"
        )
    x, y = grid.mesh()
    rho_sq = x * x + y * y
    t = 2.0 * rho_sq / waist**2
    radial = eval_genlaguerre(idx.p, idx.l, t) * np.exp(-rho_sq / waist**2)
    angular_measure = 2.0 * math.pi if idx.l == 0 else math.pi
    norm = math.sqrt(
        4.0 * math.factorial(idx.p)
        / (angular_measure * waist**2 * math.factorial(idx.p + idx.l))
    )
    if idx.l == 0:
        values = norm * radial
    else:
        z_l = np.ones_like(x, dtype=np.complex128)
        for _ in range(idx.l):
            z_l = z_l * (x + 1j * y)
        angular = z_l.real if idx.parity == COSINE else z_l.imag
        values = norm * (math.sqrt(2.0) / waist) ** idx.l * angular * radial
    return ComplexField(grid, values)


@dataclass(frozen=True)
class ModeBasis:
    """Finite sampled basis up to cutoffs p <= p_max, l <= l_max."""

    waist: float
    grid: TransverseGrid
    indices: tuple[ModeIndex, ...]
    functions: np.ndarray  # (n_modes, n, n) real samples, read-only

    def __post_init__(self) -> None:
        functions = np.asarray(self.functions, dtype=np.float64)
        functions.setflags(write=False)
        object.__setattr__(self, "functions", functions)

    def __len__(self) -> int:
        return len(self.indices)

    def gram_matrix(self) -> np.ndarray:
        """Pairwise grid inner products; near identity for admissible grids."""
        flat = self.functions.reshape(len(self), -1)
        return flat @ flat.T * self.grid.spacing**2

    def even_l_mask(self) -> np.ndarray:
        return np.array([idx.l % 2 == 0 for idx in self.indices])


def basis_indices(p_max: int, l_max: int) -> tuple[ModeIndex, ...]:
    out = []
    for p in range(p_max + 1):
        for l in range(l_max + 1):
            out.append(ModeIndex(p, l, COSINE))
            if l > 0:
                out.append(ModeIndex(p, l, SINE))
    return tuple(out)


def build_basis(
    grid: TransverseGrid, waist: float, p_max: int, l_max: int
) -> ModeBasis:
    """Sample all modes up to the cutoffs on one grid."""
    indices = basis_indices(p_max, l_max)
    functions = np.stack(
        [mode_function(idx, waist, grid).values.real for idx in indices]
    )
    return ModeBasis(waist=waist, grid=grid, indices=indices, functions=functions)


@dataclass(frozen=True)
class Decomposition:
    """Mode coefficients of a field plus the reconstruction residual."""

    basis: ModeBasis
    coefficients: np.ndarray
    residual: float  # relative L2 distance between field and reconstruction


def reconstruct(coefficients: np.ndarray, basis: ModeBasis) -> ComplexField:
    values = np.tensordot(np.asarray(coefficients), basis.functions, axes=(0, 0))
    return ComplexField(basis.grid, values)


def decompose(field: ComplexField, basis: ModeBasis) -> Decomposition:
    """Grid inner products of the field against every basis mode."""
    if field.grid != basis.grid:
        raise GridMismatch("field and basis grids differ")
    flat = basis.functions.reshape(len(basis), -1)
    coefficients = flat @ field.values.ravel() * basis.grid.spacing**2
    rebuilt = reconstruct(coefficients, basis)
    norm = field.l2_norm()
    if norm == 0.0:
        residual = 0.0
    else:
        residual = (
            ComplexField(field.grid, field.values - rebuilt.values).l2_norm() / norm
        )
    return Decomposition(basis=basis, coefficients=coefficients, residual=residual)


def split_even_odd(
    coefficients: np.ndarray, basis: ModeBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Partition coefficients by the parity of l (full-length arrays, zero-filled)."""
    coefficients = np.asarray(coefficients)
    mask = basis.even_l_mask()
    even = np.where(mask, coefficients, 0)
    odd = np.where(mask, 0, coefficients)
    return even, odd
