import math

import numpy as np
import pytest

from cavamp import (
    CavityParams,
    ComplexField,
    DetectorParams,
    Geometry,
    PupilSpec,
    TransverseGrid,
    derive_scales,
    detection_report,
    image_pixel_mean,
    image_pixel_variance,
    monte_carlo_image,
    noise_figure,
    noise_figure_empirical,
    object_pixel_stats,
)
from cavamp.transfer import SqueezeParams

DET = DetectorParams(eta=0.8, pixel_area=1.0e-10, window=1.0e-6)
S19 = math.sqrt(1.0e19)  # amplitude with |s|^2 = 1e19 photons/m^2/s


def cavity(geometry, detuning=0.0, pump=0.5):
    return CavityParams(gamma=1e8, detuning=detuning, pump=pump, geometry=geometry)


class TestPixelFormulas:
    def test_image_mean_reference_value(self):
        # 0.8 * 1e-10 * 1e-6 * 1e19 * 9 = 7200
        assert image_pixel_mean(S19, 9.0, DET) == pytest.approx(7200.0, rel=1e-12)

    def test_zero_amplitude(self):
        assert image_pixel_mean(0.0, 9.0, DET) == 0.0

    def test_unit_gain_matches_object_plane(self):
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        assert image_pixel_mean(S19, 1.0, det) == object_pixel_stats(S19, det).mean

    def test_variance_ideal_squeezed(self):
        # eta = 1, theta = 0, e^{2R} = G = 9: variance = mean * 9
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        sq = SqueezeParams(r=math.log(3.0), theta=0.0)
        s = math.sqrt(1.0e19)  # mean = 1000 * 9 = 9000
        mean = image_pixel_mean(s, 9.0, det)
        var = image_pixel_variance(s, 9.0, sq, det)
        assert mean == pytest.approx(9000.0, rel=1e-12)
        assert var == pytest.approx(81000.0, rel=1e-12)
        snr_image = mean * mean / var
        snr_object = object_pixel_stats(s, det).snr
        assert snr_image == pytest.approx(1000.0, rel=1e-12)
        assert snr_object / snr_image == pytest.approx(1.0, abs=1e-12)

    def test_variance_shot_noise_limit(self):
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        sq = SqueezeParams(r=0.0, theta=0.0)
        mean = image_pixel_mean(S19, 1.0, det)
        assert image_pixel_variance(S19, 1.0, sq, det) == pytest.approx(mean, rel=1e-12)

    def test_half_efficiency_bracket(self):
        det = DetectorParams(eta=0.5, pixel_area=1e-10, window=1e-6)
        sq = SqueezeParams(r=math.log(3.0), theta=0.0)
        mean = image_pixel_mean(S19, 9.0, det)
        var = image_pixel_variance(S19, 9.0, sq, det)
        assert var / mean == pytest.approx(5.0, rel=1e-12)  # 0.5 + 0.5 * 9
        # F via SNR ratio equals the closed form
        r_i = mean * mean / var
        r_o = det.pixel_area * det.window * 1.0e19
        assert r_o / r_i == pytest.approx(10.0 / 9.0, rel=1e-12)
        assert r_o / r_i == pytest.approx(noise_figure(9.0, sq, 0.5), rel=1e-12)

    def test_object_stats_are_poissonian(self):
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        stats = object_pixel_stats(math.sqrt(1.0e19), det)  # S_d T_d s^2 = 1000
        assert stats.mean == pytest.approx(1000.0, rel=1e-12)
        assert stats.variance == stats.mean
        assert stats.snr == pytest.approx(1000.0, rel=1e-12)

    def test_object_stats_masked_at_zero(self):
        stats = object_pixel_stats(0.0, DET)
        assert stats.mean == 0.0
        assert math.isnan(stats.snr)

    def test_object_stats_linear_in_eta(self):
        det_half = DetectorParams(eta=0.4, pixel_area=1e-10, window=1e-6)
        full = object_pixel_stats(S19, DET)
        half = object_pixel_stats(S19, det_half)
        assert half.mean == pytest.approx(full.mean / 2, rel=1e-12)
        assert half.snr == pytest.approx(full.snr / 2, rel=1e-12)

    def test_halving_pixel_area_halves_stats_exactly(self):
        det_half = DetectorParams(eta=DET.eta, pixel_area=DET.pixel_area / 2, window=DET.window)
        sq = SqueezeParams(r=0.7, theta=0.3)
        assert image_pixel_mean(S19, 9.0, det_half) == image_pixel_mean(S19, 9.0, DET) / 2
        assert (
            image_pixel_variance(S19, 9.0, sq, det_half)
            == image_pixel_variance(S19, 9.0, sq, DET) / 2
        )


class TestDetectionReport:
    def grid(self):
        return TransverseGrid(n=16, extent=6.5e-5)

    def test_confocal_ideal_noiseless(self):
        cav = cavity(Geometry.CONFOCAL)
        train = derive_scales(cav, 1e-6, 0.1)
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        obj = ComplexField(self.grid(), np.full((16, 16), S19))
        report = detection_report(obj, cav, train, det)
        assert np.max(np.abs(report.noise_figure - 1.0)) < 1e-12
        assert report.long_window

    def test_planar_ring_and_masking(self):
        cav = cavity(Geometry.PLANAR, detuning=-1.0)
        train = derive_scales(cav, 1e-6, 0.1)
        det = DetectorParams(eta=1.0, pixel_area=1e-10, window=1e-6)
        grid = TransverseGrid(n=64, extent=2 * train.rho0)
        x, y = grid.mesh()
        values = np.full(grid.shape, S19)
        values[0, 0] = 0.0  # one dark pixel
        obj = ComplexField(grid, values)
        report = detection_report(obj, cav, train, det)
        assert math.isnan(report.noise_figure[0, 0])
        r = grid.radius()
        ring = np.abs(r - train.rho0) <= grid.spacing
        assert np.nanmin(report.noise_figure[ring]) < 1.0 + 1e-9
        center = grid.n // 2
        assert report.noise_figure[center, center] > 1.01

    def test_empirical_equals_closed_form_everywhere(self):
        # the central consistency loop: R_O / R_I == bracket / (eta G)
        from cavamp.transfer import noise_figure_map

        cav = cavity(Geometry.PLANAR, detuning=0.6, pump=0.7)
        train = derive_scales(cav, 1e-6, 0.1)
        grid = TransverseGrid(n=32, extent=2.5 * train.rho0)
        det = DetectorParams(eta=0.65, pixel_area=1e-10, window=1e-6)
        rng = np.random.default_rng(12)
        obj = ComplexField(grid, S19 * (0.25 + rng.uniform(size=grid.shape)))
        report = detection_report(obj, cav, train, det)
        closed = noise_figure_map(cav, train, grid, det.eta)
        assert np.max(np.abs(report.noise_figure - closed)) < 1e-12
        empirical = noise_figure_empirical(report)
        assert np.array_equal(
            np.nan_to_num(empirical, nan=-1.0), np.nan_to_num(report.noise_figure, nan=-1.0)
        )

    def test_loss_compensation_trend(self):
        # at fixed eta < 1, higher gain pulls F toward 1
        det = DetectorParams(eta=0.5, pixel_area=1e-10, window=1e-6)
        fs = []
        for pump in (0.0, 0.5, 0.9):
            cav = cavity(Geometry.CONFOCAL, pump=pump)
            train = derive_scales(cav, 1e-6, 0.1)
            obj = ComplexField(self.grid(), np.full((16, 16), S19))
            report = detection_report(obj, cav, train, det)
            fs.append(float(report.noise_figure[0, 0]))
        assert fs[0] > fs[1] > fs[2] > 1.0

    def test_complex_object_warns(self):
        cav = cavity(Geometry.CONFOCAL)
        train = derive_scales(cav, 1e-6, 0.1)
        obj = ComplexField(self.grid(), np.full((16, 16), S19 * (1 + 0.1j)))
        with pytest.warns(UserWarning, match="imaginary"):
            detection_report(obj, cav, train, DET)

    def test_validity_attached(self):
        cav = cavity(Geometry.CONFOCAL)
        train = derive_scales(cav, 1e-6, 0.1, PupilSpec.square(1e-2))
        obj = ComplexField(self.grid(), np.full((16, 16), S19))
        report = detection_report(obj, cav, train, DET)
        assert report.validity.figure == pytest.approx(20 * math.pi, rel=1e-12)
        assert report.validity.satisfied

    def test_pixel_accessors(self):
        cav = cavity(Geometry.CONFOCAL)
        train = derive_scales(cav, 1e-6, 0.1)
        obj = ComplexField(self.grid(), np.full((16, 16), S19))
        report = detection_report(obj, cav, train, DET)
        px = report.image_pixel(8, 8)
        assert px.mean == pytest.approx(7200.0, rel=1e-12)
        assert px.location == (0.0, 0.0)
        ob = report.object_pixel(8, 8)
        assert ob.variance == ob.mean


class TestMonteCarlo:
    def test_reference_pixel_statistics(self):
        mean = np.array([[7200.0]])
        var = np.array([[64800.0]])
        mc = monte_carlo_image(mean, var, seed=2024, shots=10_000)
        assert abs(mc.empirical_mean[0, 0] - 7200.0) < 3 * math.sqrt(64800.0 / 10_000)
        rel_var_err = abs(mc.empirical_variance[0, 0] - 64800.0) / 64800.0
        assert rel_var_err < 3 * math.sqrt(2.0 / 9999)

    def test_single_shot_is_reproducible(self):
        mean = np.full((4, 4), 500.0)
        var = np.full((4, 4), 400.0)
        a = monte_carlo_image(mean, var, seed=7, shots=1)
        b = monte_carlo_image(mean, var, seed=7, shots=1)
        assert np.array_equal(a.sample, b.sample)
        assert np.array_equal(a.sample, a.empirical_mean)
        assert np.all(a.empirical_variance == 0.0)

    def test_zero_variance_degenerate(self):
        mean = np.full((3, 3), 123.4)
        var = np.zeros((3, 3))
        mc = monte_carlo_image(mean, var, seed=0, shots=50)
        assert np.all(mc.sample == 123.0)
        assert np.all(mc.empirical_mean == 123.0)
        assert np.all(mc.empirical_variance == 0.0)

    def test_counts_are_nonnegative_integers(self):
        mean = np.full((2, 2), 25.0)
        var = np.full((2, 2), 400.0)  # sigma 20: clamping active
        mc = monte_carlo_image(mean, var, seed=3, shots=500)
        assert np.all(mc.sample >= 0)
        assert np.all(mc.sample == np.rint(mc.sample))

    def test_low_mean_warns(self):
        with pytest.warns(UserWarning, match="Gaussian"):
            monte_carlo_image(np.array([[5.0]]), np.array([[5.0]]), seed=0, shots=10)

    def test_invalid_shots(self):
        with pytest.raises(ValueError):
            monte_carlo_image(np.array([[100.0]]), np.array([[100.0]]), seed=0, shots=0)

    def test_convergence_over_pixels(self):
        rng = np.random.default_rng(5)
        mean = rng.uniform(1000.0, 9000.0, (8, 8))
        var = mean * rng.uniform(1.0, 9.0, (8, 8))
        shots = 10_000
        mc = monte_carlo_image(mean, var, seed=11, shots=shots)
        ok = np.abs(mc.empirical_mean - mean) <= 3 * np.sqrt(var / shots)
        assert ok.mean() >= 0.99

    def test_pixel_substreams_do_not_collide(self):
        mean = np.full((4, 4), 5000.0)
        var = np.full((4, 4), 5000.0)
        mc = monte_carlo_image(mean, var, seed=9, shots=200)
        flat = mc.sample.ravel()
        assert len(np.unique(flat)) > 1
