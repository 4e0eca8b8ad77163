"""
Tests for grid and density-guided seeding
"""

import logging

import numpy as np
import pytest

from conftest import random_lab, voronoi_scene
from superpixels.errors import ParameterError
from superpixels.imagecore import ColorSpace, RasterImage
from superpixels.seeding import (
    SeedSet,
    _farthest_free_pixel,
    check_superpixel_count,
    density_seeds,
    grid_seeds,
    grid_step,
)
from superpixels.spectral import DensityMap, compute_density


def flat_lab(height: int, width: int) -> RasterImage:
    return RasterImage(np.full((height, width, 3), 50.0), ColorSpace.LAB)


def assert_valid_seeds(seeds: SeedSet, k: int, shape):
    h, w = shape
    assert len(seeds) == k
    assert len(set(seeds.seeds)) == k
    assert all(0 <= x < w and 0 <= y < h for x, y in seeds.seeds)


class TestGridSeeds:
    def test_hand_placed_grid(self):
        seeds = grid_seeds(flat_lab(10, 10), 4)
        assert seeds.grid_step == pytest.approx(5.0)
        assert seeds.seeds == [(2, 2), (7, 2), (2, 7), (7, 7)]

    def test_gradient_step_moves_off_an_edge(self):
        data = np.full((10, 10, 3), 50.0)
        data[:, 7:, 0] = 90.0
        seeds = grid_seeds(RasterImage(data, ColorSpace.LAB), 4)
        # (7, y) sits next to the step at column 6/7; the flat column 8 is preferred
        assert seeds.seeds[0] == (2, 2)
        assert seeds.seeds[1] == (8, 1)

    def test_moved_seeds_stay_apart(self, rng):
        seeds = grid_seeds(random_lab(rng, 30, 30), 36)
        assert_valid_seeds(seeds, 36, (30, 30))
        points = np.array(seeds.seeds)
        for i in range(len(points)):
            others = np.delete(points, i, axis=0)
            assert np.min(np.max(np.abs(others - points[i]), axis=1)) >= 2

    def test_truncates_long_grid(self):
        # S = sqrt(16.9) lays a 4x4 grid, cut back to the first 10 in row-major order
        seeds = grid_seeds(flat_lab(13, 13), 10)
        assert_valid_seeds(seeds, 10, (13, 13))
        assert seeds.seeds[:3] == [(2, 2), (6, 2), (10, 2)]
        assert all(y <= 10 for _, y in seeds.seeds)

    def test_upper_bound(self):
        assert_valid_seeds(grid_seeds(flat_lab(8, 8), 16), 16, (8, 8))
        with pytest.raises(ParameterError):
            grid_seeds(flat_lab(8, 8), 64)

    def test_needs_lab(self):
        img = RasterImage(np.zeros((8, 8, 3), dtype=np.uint8))
        with pytest.raises(ParameterError):
            grid_seeds(img, 4)

    def test_rows_keep_order(self):
        seeds = grid_seeds(flat_lab(10, 10), 4)
        assert seeds.to_rows()[3] == (7, 7, 3)


class TestDensitySeeds:
    def test_constant_density_packs_from_the_corner(self):
        seeds = density_seeds(DensityMap.uniform(12, 12), 36)
        assert seeds.seeds[0] == (0, 0)
        assert seeds.seeds == [(x, y) for y in range(0, 12, 2) for x in range(0, 12, 2)]
        points = np.array(seeds.seeds)
        for i in range(len(points)):
            others = np.delete(points, i, axis=0)
            assert np.min(np.max(np.abs(others - points[i]), axis=1)) >= 2
            assert np.min(np.hypot(*(others - points[i]).T)) >= 2

    def test_first_seed_is_global_minimum(self, rng):
        values = rng.uniform(0.5, 2.0, (20, 20))
        values[13, 4] = 0.1
        seeds = density_seeds(DensityMap(values), 10)
        assert seeds.seeds[0] == (4, 13)

    def test_neighbours_of_a_seed_are_never_chosen(self, rng):
        density = DensityMap(np.exp(rng.uniform(-3, 3, (24, 24))))
        seeds = density_seeds(density, 40)
        assert_valid_seeds(seeds, 40, (24, 24))
        for i, (x, y) in enumerate(seeds.seeds):
            for ox, oy in seeds.seeds[i + 1:]:
                assert max(abs(ox - x), abs(oy - y)) >= 2

    def test_deterministic(self, rng):
        density = DensityMap(np.exp(rng.uniform(-3, 3, (24, 24))))
        assert density_seeds(density, 20).seeds == density_seeds(density, 20).seeds

    def test_seeds_concentrate_where_density_is_low(self):
        values = np.ones((48, 48))
        values[16:32, 16:32] = 0.05
        seeds = density_seeds(DensityMap(values), 36)
        inside = sum(16 <= x < 32 and 16 <= y < 32 for x, y in seeds.seeds)
        # the low region covers a ninth of the image
        assert inside >= 36 / 9

    def test_input_is_not_modified(self, rng):
        values = np.exp(rng.uniform(-1, 1, (16, 16)))
        snapshot = values.copy()
        density_seeds(DensityMap(values), 8)
        assert np.array_equal(values, snapshot)

    def test_dense_request_on_varied_density(self, rng):
        density = DensityMap(np.exp(rng.uniform(-3, 3, (24, 24))))
        assert_valid_seeds(density_seeds(density, 144), 144, (24, 24))

    def test_exhausted_map_falls_back_to_farthest_pixels(self, rng, caplog):
        img, _ = voronoi_scene(rng, 32, 32, 6)
        density = compute_density(img)
        with caplog.at_level(logging.WARNING, logger="superpixels.seeding"):
            seeds = density_seeds(density, 256)
        assert_valid_seeds(seeds, 256, (32, 32))
        assert "exhausted" in caplog.text

    def test_farthest_free_pixel(self):
        assert _farthest_free_pixel((5, 9), [(0, 0)]) == (8, 4)
        assert _farthest_free_pixel((3, 3), [(1, 1)]) == (0, 0)

    def test_rejects_non_positive_density(self):
        values = np.ones((10, 10))
        values[3, 3] = 0.0
        with pytest.raises(ParameterError):
            density_seeds(DensityMap(values), 4)

    def test_rejects_bad_tau(self):
        with pytest.raises(ParameterError):
            density_seeds(DensityMap.uniform(10, 10), 4, tau=0.0)


class TestCount:
    def test_grid_step(self):
        assert grid_step(10000, 400) == pytest.approx(5.0)

    @pytest.mark.parametrize("n,k", [(100, 3), (100, 26), (16, 16)])
    def test_rejects(self, n, k):
        with pytest.raises(ParameterError):
            check_superpixel_count(n, k)

    @pytest.mark.parametrize("n,k", [(100, 4), (100, 25)])
    def test_accepts(self, n, k):
        check_superpixel_count(n, k)
