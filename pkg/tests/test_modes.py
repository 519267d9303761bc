import math

import numpy as np
import pytest

from cavamp import (
    ComplexField,
    GridMismatch,
    GridTooSmallForMode,
    ModeIndex,
    ParameterError,
    TransverseGrid,
    build_basis,
    decompose,
    even_projection,
    mode_function,
    reconstruct,
    split_even_odd,
)

W = 1.0e-4  # generic waist for basis tests (m)


def standard_grid(n=128, fill=6.0):
    return TransverseGrid(n=n, extent=fill * W)


class TestModeIndex:
    def test_sine_invalid_for_l0(self):
        with pytest.raises(ParameterError):
            ModeIndex(0, 0, "sine")

    def test_negative_indices_rejected(self):
        with pytest.raises(ParameterError):
            ModeIndex(-1, 0)
        with pytest.raises(ParameterError):
            ModeIndex(0, -2)

    def test_frequency_class(self):
        assert ModeIndex(3, 0).frequency_class == "even"
        assert ModeIndex(0, 2).frequency_class == "even"
        assert ModeIndex(1, 3).frequency_class == "odd"


class TestModeFunction:
    def test_fundamental_is_normalized_gaussian(self):
        grid = standard_grid()
        mode = mode_function(ModeIndex(0, 0), W, grid)
        # sqrt(2/pi)/w * exp(-rho^2/w^2)
        x, y = grid.mesh()
        expected = math.sqrt(2.0 / math.pi) / W * np.exp(-(x * x + y * y) / W**2)
        assert np.max(np.abs(mode.values.real - expected)) < 1e-12 * expected.max()
        assert mode.l2_norm() == pytest.approx(1.0, abs=1e-8)

    def test_all_modes_unit_norm(self):
        grid = standard_grid()
        for idx in (ModeIndex(2, 0), ModeIndex(0, 3, "sine"), ModeIndex(3, 2, "cosine")):
            assert mode_function(idx, W, grid).l2_norm() == pytest.approx(1.0, abs=1e-8)

    def test_parity_is_exact_on_wide_grid(self):
        # tails underflow on a wide grid, so the (-1)^l parity holds at the
        # bit level including the boundary samples
        grid = TransverseGrid(n=256, extent=30 * W)
        for idx in (
            ModeIndex(0, 1, "cosine"),
            ModeIndex(0, 1, "sine"),
            ModeIndex(1, 2, "sine"),
            ModeIndex(2, 3, "cosine"),
            ModeIndex(1, 0),
        ):
            mode = mode_function(idx, W, grid)
            sign = -1.0 if idx.l % 2 else 1.0
            assert np.array_equal(mode.reflected().values, sign * mode.values)

    def test_radial_node_and_orthogonality(self):
        grid = standard_grid()
        m00 = mode_function(ModeIndex(0, 0), W, grid).values.real
        m10 = mode_function(ModeIndex(1, 0), W, grid).values.real
        # L_1(t) = 1 - t changes sign once at t = 2 rho^2/w^2 = 1
        center = grid.n // 2
        profile = m10[center, center:]
        signs = np.sign(profile[np.abs(profile) > 1e-6 * np.abs(profile).max()])
        assert np.count_nonzero(np.diff(signs) != 0) == 1
        overlap = np.sum(m00 * m10) * grid.spacing**2
        assert abs(overlap) < 1e-6

    def test_grid_too_small(self):
        grid = TransverseGrid(n=64, extent=2 * W)
        with pytest.raises(GridTooSmallForMode):
            mode_function(ModeIndex(4, 4), W, grid)

    def test_nonpositive_waist(self):
        with pytest.raises(ParameterError):
            mode_function(ModeIndex(0, 0), 0.0, standard_grid())


class TestBasis:
    def test_gram_matrix_near_identity(self):
        basis = build_basis(standard_grid(), W, 4, 4)
        gram = basis.gram_matrix()
        assert gram.shape == (45, 45)
        assert np.max(np.abs(gram - np.eye(45))) < 1e-6

    def test_index_layout(self):
        basis = build_basis(standard_grid(), W, 1, 1)
        labels = [(i.p, i.l, i.parity) for i in basis.indices]
        assert labels == [
            (0, 0, "cosine"),
            (0, 1, "cosine"),
            (0, 1, "sine"),
            (1, 0, "cosine"),
            (1, 1, "cosine"),
            (1, 1, "sine"),
        ]

    def test_functions_read_only(self):
        basis = build_basis(standard_grid(), W, 1, 1)
        with pytest.raises(ValueError):
            basis.functions[0, 0, 0] = 1.0


class TestDecompose:
    def test_single_mode_projects_to_unit_coefficient(self):
        grid = standard_grid()
        basis = build_basis(grid, W, 2, 2)
        field = mode_function(ModeIndex(0, 0), W, grid)
        dec = decompose(field, basis)
        k = basis.indices.index(ModeIndex(0, 0))
        assert dec.coefficients[k] == pytest.approx(1.0, abs=1e-8)
        others = np.delete(np.abs(dec.coefficients), k)
        assert np.max(others) < 1e-8
        assert dec.residual < 1e-8

    def test_linear_combination(self):
        grid = standard_grid()
        basis = build_basis(grid, W, 2, 2)
        f00 = mode_function(ModeIndex(0, 0), W, grid).values
        f10 = mode_function(ModeIndex(1, 0), W, grid).values
        dec = decompose(ComplexField(grid, 2.0 * f00 + 3.0 * f10), basis)
        assert dec.coefficients[basis.indices.index(ModeIndex(0, 0))] == pytest.approx(
            2.0, abs=1e-8
        )
        assert dec.coefficients[basis.indices.index(ModeIndex(1, 0))] == pytest.approx(
            3.0, abs=1e-8
        )

    def test_reconstruct_inverts_on_span(self):
        grid = standard_grid()
        basis = build_basis(grid, W, 3, 3)
        rng = np.random.default_rng(0)
        coeffs = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
        field = reconstruct(coeffs, basis)
        dec = decompose(field, basis)
        assert np.max(np.abs(dec.coefficients - coeffs)) < 1e-8
        assert dec.residual < 1e-8

    def test_truncated_gaussian_residual_decreases(self):
        # a Gaussian of waist 1.3 w needs higher radial orders; the
        # truncation residual must fall as the cutoff grows
        grid = standard_grid()
        obj = ComplexField.from_function(
            grid, lambda x, y: np.exp(-(x * x + y * y) / (1.3 * W) ** 2)
        )
        residuals = [
            decompose(obj, build_basis(grid, W, p_max, 0)).residual for p_max in (2, 4, 8)
        ]
        assert residuals[0] > residuals[1] > residuals[2]

    def test_grid_mismatch(self):
        basis = build_basis(standard_grid(), W, 1, 1)
        other = TransverseGrid(n=64, extent=6 * W)
        with pytest.raises(GridMismatch):
            decompose(ComplexField(other, np.zeros((64, 64))), basis)


class TestSplitEvenOdd:
    def test_even_only_input(self):
        basis = build_basis(standard_grid(), W, 2, 2)
        coeffs = np.array([1.0 if i.l % 2 == 0 else 0.0 for i in basis.indices])
        even, odd = split_even_odd(coeffs, basis)
        assert np.array_equal(even, coeffs)
        assert np.all(odd == 0)

    def test_single_odd_mode(self):
        grid = standard_grid()
        basis = build_basis(grid, W, 2, 2)
        k = basis.indices.index(ModeIndex(0, 1, "cosine"))
        coeffs = np.zeros(len(basis))
        coeffs[k] = 1.0
        even, odd = split_even_odd(coeffs, basis)
        assert np.all(even == 0)
        assert np.max(np.abs(reconstruct(even, basis).values)) == 0.0
        assert odd[k] == 1.0

    def test_matches_position_space_projection(self):
        grid = standard_grid()
        basis = build_basis(grid, W, 3, 3)
        rng = np.random.default_rng(1)
        coeffs = rng.normal(size=len(basis))
        field = reconstruct(coeffs, basis)
        even, _ = split_even_odd(decompose(field, basis).coefficients, basis)
        via_modes = reconstruct(even, basis)
        via_reflection = even_projection(field)
        diff = np.max(np.abs(via_modes.values - via_reflection.values))
        assert diff < 1e-8 * np.max(np.abs(field.values))


class TestConfocalCommutation:
    def test_amplification_commutes_with_even_decomposition(self):
        from cavamp import CavityParams, Geometry, amplify_confocal, derive_scales
        from cavamp.transfer import mismatch, transfer_pair

        cav = CavityParams(gamma=1e8, detuning=0.0, pump=0.5, geometry=Geometry.CONFOCAL)
        train = derive_scales(cav, 1.0e-6, 0.1)
        w = train.rho0
        grid = TransverseGrid(n=128, extent=8 * w)
        basis = build_basis(grid, w, 4, 4)
        rng = np.random.default_rng(2)
        coeffs = rng.normal(size=len(basis)) * np.array(
            [math.exp(-0.4 * (i.p + i.l)) for i in basis.indices]
        )
        field = reconstruct(coeffs, basis)

        with pytest.warns(Warning):  # the odd part is discarded, loudly
            result = amplify_confocal(field, cav, train)
        d0 = mismatch(cav, train)
        pair = transfer_pair(d0, d0, cav.pump)
        even, _ = split_even_odd(decompose(field, basis).coefficients, basis)
        via_modes = reconstruct((pair.u + pair.v) * even, basis)
        num = np.linalg.norm(result.image.values - via_modes.values)
        den = np.linalg.norm(result.image.values)
        assert num / den < 1e-8
