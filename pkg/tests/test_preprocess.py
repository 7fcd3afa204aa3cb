import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soilspec.core import N_BANDS, DarkFrame, Roi, SpectralCube
from soilspec.errors import DimensionMismatch, RoiOutOfBounds
from soilspec.preprocess import (
    BandStats,
    NormalizationParams,
    crop_roi,
    dark_correct,
    normalize_contrast,
    preprocess_cube,
    roi_stats,
)


def make_cube(fill=None, seed=0, side=120):
    rng = np.random.default_rng(seed)
    if fill is None:
        planes = rng.integers(0, 1024, (N_BANDS, side, side), dtype=np.uint16)
    else:
        planes = np.full((N_BANDS, side, side), fill, dtype=np.uint16)
    return SpectralCube(planes=planes)


class TestDarkCorrect:
    def test_identical_inputs_cancel(self):
        cube = make_cube(seed=1, side=8)
        dark = DarkFrame(plane=cube.planes[0].copy())
        out = dark_correct(SpectralCube(planes=np.tile(dark.plane, (N_BANDS, 1, 1))),
                           dark)
        assert np.all(out == 0.0)

    def test_absolute_difference_prevents_negatives(self):
        cube = SpectralCube(planes=np.full((N_BANDS, 2, 2), 5, dtype=np.uint16))
        dark = DarkFrame(plane=np.full((2, 2), 9, dtype=np.uint16))
        out = dark_correct(cube, dark)
        assert np.all(out == 4.0)
        assert np.all(out >= 0.0)

    def test_zero_dark_is_identity(self):
        cube = make_cube(seed=2, side=6)
        out = dark_correct(cube, DarkFrame(plane=np.zeros((6, 6), dtype=np.uint16)))
        assert np.array_equal(out, cube.planes.astype(float))

    def test_dimension_mismatch(self):
        cube = make_cube(side=6)
        with pytest.raises(DimensionMismatch):
            dark_correct(cube, DarkFrame(plane=np.zeros((5, 5), dtype=np.uint16)))

    def test_output_nonnegative_random(self):
        rng = np.random.default_rng(3)
        cube = make_cube(seed=3, side=10)
        dark = DarkFrame(
            plane=rng.integers(0, 1024, (10, 10), dtype=np.uint16)
        )
        assert np.all(dark_correct(cube, dark) >= 0.0)


class TestCropRoi:
    def test_identity_crop(self):
        cube = make_cube(seed=4, side=100)
        out = crop_roi(cube, Roi(0, 0))
        assert np.array_equal(out, cube.planes)

    def test_out_of_bounds(self):
        cube = make_cube(side=100)
        with pytest.raises(RoiOutOfBounds):
            crop_roi(cube, Roi(50, 50))

    def test_index_shift(self):
        cube = make_cube(seed=5, side=120)
        roi = Roi(7, 3)
        out = crop_roi(cube, roi)
        assert out[4, 3, 7] == cube.planes[4, 3 + 3, 7 + 7]
        assert out.shape == (N_BANDS, 100, 100)


class TestRoiStats:
    def test_constant_plane(self):
        stats = roi_stats(np.full((100, 100), 7.0))
        assert stats.mean == 7.0 and stats.std == 0.0

    def test_two_point_distribution(self):
        plane = np.zeros((100, 100))
        plane[:50] = 0.0
        plane[50:] = 2.0
        stats = roi_stats(plane)
        assert stats.mean == pytest.approx(1.0, abs=1e-12)
        assert stats.std == pytest.approx(1.0, abs=1e-12)

    def test_uniform_monte_carlo(self):
        # Uniform[0, 1023]: mean 511.5, sd 1023/sqrt(12); the sample mean of
        # 10,000 draws stays within 3 standard errors.
        rng = np.random.default_rng(42)
        plane = rng.uniform(0, 1023, (100, 100))
        stats = roi_stats(plane)
        standard_error = (1023 / math.sqrt(12)) / math.sqrt(10_000)
        assert abs(stats.mean - 511.5) <= 3 * standard_error

    def test_population_denominator(self):
        plane = np.arange(10_000, dtype=float).reshape(100, 100)
        stats = roi_stats(plane)
        assert stats.std == pytest.approx(np.std(plane), abs=0)  # 1/N, not 1/(N-1)

    def test_wrong_size(self):
        with pytest.raises(DimensionMismatch):
            roi_stats(np.zeros((10, 10)))


class TestNormalizeContrast:
    def test_mean_fixed_point(self):
        stats = BandStats(mean=123.456, std=17.2)
        out = normalize_contrast(
            np.full((100, 100), stats.mean), stats, NormalizationParams()
        )
        assert np.all(np.abs(out - stats.mean) <= 1e-12)

    def test_scalar_value(self):
        # mu=100, sigma=20, kappa=0.03, in=120: independent scalar evaluation.
        stats = BandStats(mean=100.0, std=20.0)
        out = normalize_contrast(
            np.full((100, 100), 120.0), stats, NormalizationParams(kappa=0.03)
        )
        expected = 80.0 + 40.0 * (math.tanh(0.03 * 20.0) + 1.0) / 2.0
        assert expected == pytest.approx(110.741, abs=5e-4)
        assert np.all(np.abs(out - expected) <= 1e-9)

    def test_asymptotes(self):
        stats = BandStats(mean=500.0, std=50.0)
        params = NormalizationParams()
        high = normalize_contrast(np.full((100, 100), 1e9), stats, params)
        low = normalize_contrast(np.full((100, 100), -1e9), stats, params)
        assert np.all(high == stats.mean + stats.std)
        assert np.all(low == stats.mean - stats.std)

    def test_sigma_zero_degenerate(self):
        stats = BandStats(mean=42.0, std=0.0)
        out = normalize_contrast(np.full((100, 100), 977.0), stats,
                                 NormalizationParams())
        assert np.all(out == 42.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_bounds_and_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        plane = rng.uniform(0, 1023, (100, 100))
        stats = roi_stats(plane)
        out = normalize_contrast(plane, stats, NormalizationParams())
        assert np.all(out >= stats.mean - stats.std)
        assert np.all(out <= stats.mean + stats.std)
        flat_in = plane.ravel()
        flat_out = out.ravel()
        order = np.argsort(flat_in, kind="stable")
        assert np.all(np.diff(flat_out[order]) >= 0.0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_histogram_compaction(self, seed):
        rng = np.random.default_rng(seed)
        plane = rng.normal(400, rng.uniform(1, 300), (100, 100))
        stats = roi_stats(plane)
        out = normalize_contrast(plane, stats, NormalizationParams())
        assert out.std() <= plane.std() + 1e-12

    def test_kappa_must_be_positive(self):
        with pytest.raises(ValueError):
            NormalizationParams(kappa=0.0)


class TestPreprocessCube:
    def test_constant_cube_zero_dark(self):
        cube = make_cube(fill=300)
        dark = DarkFrame(plane=np.zeros((120, 120), dtype=np.uint16))
        out = preprocess_cube(cube, dark, Roi(10, 10))
        assert np.all(out.planes == 300.0)
        assert all(s.std == 0.0 for s in out.stats)

    def test_band_ranges_bounded(self):
        cube = make_cube(seed=6)
        rng = np.random.default_rng(7)
        dark = DarkFrame(plane=rng.integers(0, 60, (120, 120), dtype=np.uint16))
        out = preprocess_cube(cube, dark, Roi(10, 10))
        for i, stats in enumerate(out.stats):
            assert np.all(out.planes[i] >= stats.mean - stats.std)
            assert np.all(out.planes[i] <= stats.mean + stats.std)

    def test_stage_order_is_pinned(self):
        # Craft pixels {10, 30} with dark 20: |X - D| is constant 10, so the
        # canonical pipeline returns a flat plane of 10. Normalizing before
        # dark correction sees mean 20, sigma 10 and cannot produce that.
        planes = np.full((N_BANDS, 120, 120), 10, dtype=np.uint16)
        planes[:, ::2, :] = 30
        cube = SpectralCube(planes=planes)
        dark = DarkFrame(plane=np.full((120, 120), 20, dtype=np.uint16))
        roi = Roi(10, 10)
        out = preprocess_cube(cube, dark, roi)
        assert np.all(out.planes == 10.0)

        # permuted order: normalize the raw cropped ROI first, then |. - D|
        from soilspec.preprocess import crop_roi as cr, normalize_contrast as nc, \
            roi_stats as rs
        cropped_raw = cr(cube, roi).astype(float)
        permuted = np.empty_like(cropped_raw)
        for i in range(N_BANDS):
            stats = rs(cropped_raw[i])
            permuted[i] = np.abs(nc(cropped_raw[i], stats,
                                    NormalizationParams()) - 20.0)
        assert not np.allclose(permuted, out.planes)
