"""
Tests for rasterization, the synthetic tile generators and the on-disk dataset
"""

import os

import numpy as np
import pytest

from mapsam.data import (
    DatasetSplit,
    ManifestEntry,
    bresenham_line,
    build_dataset,
    draw_polyline,
    fill_polygon,
    gen_railway,
    gen_vineyard,
    generate_tile,
    load_tiles,
    rail_lines,
    rasterize_geometry,
    read_manifest,
    read_mask,
    stroke_mask,
    subsample,
    tile_seed,
    write_mask,
)
from mapsam.data.dataset import MANIFEST_NAME
from mapsam.data.mapgen import DIRECTION_SCALE, DIRECTION_SINES, RAIL_COLOR, STROKE_COLOR, vineyard_geometry
from mapsam.errors import ConfigError, DataError


class TestRaster:
    def test_bresenham_endpoints_and_connectivity(self):
        pixels = bresenham_line((0, 0), (3, 7))
        assert pixels[0] == (0, 0) and pixels[-1] == (3, 7)
        for (r0, c0), (r1, c1) in zip(pixels, pixels[1:]):
            assert max(abs(r1 - r0), abs(c1 - c0)) == 1

    def test_single_point_line(self):
        assert bresenham_line((2, 2), (2, 2)) == [(2, 2)]

    def test_polyline_clipped_to_canvas(self):
        mask = draw_polyline((8, 8), [(4, -5), (4, 12)], radius=1)
        assert mask[3:6].all()
        assert not mask[:3].any() and not mask[6:].any()

    def test_square_fill(self):
        mask = fill_polygon((10, 10), [(2, 2), (2, 6), (6, 6), (6, 2)])
        expected = np.zeros((10, 10), dtype=bool)
        expected[2:6, 2:6] = True
        np.testing.assert_array_equal(mask, expected)

    def test_degenerate_polygon(self):
        assert not fill_polygon((5, 5), [(1, 1), (3, 3)]).any()


class TestGenerators:
    @pytest.mark.parametrize("generator", [gen_railway, gen_vineyard])
    def test_same_seed_same_tile(self, generator):
        a, b = generator(17, 64), generator(17, 64)
        assert a.raster.tobytes() == b.raster.tobytes()
        assert a.gt_mask.tobytes() == b.gt_mask.tobytes()
        assert a.raster.dtype == np.uint8 and a.raster.shape == (64, 64, 3)

    def test_different_seeds_differ(self):
        assert gen_railway(1, 64).raster.tobytes() != gen_railway(2, 64).raster.tobytes()

    def test_railway_gt_is_rasterized_geometry(self):
        for seed in range(20):
            tile = gen_railway(seed, 64)
            np.testing.assert_array_equal(tile.gt_mask, rasterize_geometry(tile.geometry, 64))
            rails = rail_lines(tile.geometry, 64)
            assert rails.any()
            assert not (rails & ~tile.gt_mask).any()
            assert (tile.raster[rails] == RAIL_COLOR).all()

    def test_vineyard_strokes_inside_gt(self):
        for seed in range(20):
            tile = gen_vineyard(seed, 64)
            np.testing.assert_array_equal(tile.gt_mask, rasterize_geometry(tile.geometry, 64))
            strokes = stroke_mask(tile.geometry, 64)
            assert not (strokes & ~tile.gt_mask).any()
            assert (tile.raster[strokes] == STROKE_COLOR).all()

    def test_direction_table_matches_sine_and_cosine(self):
        steps = len(DIRECTION_SINES)
        for k, value in enumerate(DIRECTION_SINES):
            angle = 2.0 * np.pi * k / steps
            assert abs(value - DIRECTION_SCALE * np.sin(angle)) <= 1.0
            assert abs(DIRECTION_SINES[(k + steps // 4) % steps] - DIRECTION_SCALE * np.cos(angle)) <= 1.0

    def test_vineyard_vertices_are_integers_inside_the_tile(self):
        for seed in range(50):
            geometry = vineyard_geometry(np.random.default_rng(seed), 64)
            again = vineyard_geometry(np.random.default_rng(seed), 64)
            assert geometry.vertices == again.vertices
            for r, c in geometry.vertices:
                assert type(r) is int and type(c) is int
                assert 0 <= r <= 64 and 0 <= c <= 64

    def test_railway_crosses_the_tile(self):
        for seed in range(20):
            gt = gen_railway(seed, 32).gt_mask
            crosses_rows = gt[0].any() and gt[-1].any()
            crosses_cols = gt[:, 0].any() and gt[:, -1].any()
            assert crosses_rows or crosses_cols

    def test_size_and_class_checks(self):
        with pytest.raises(ConfigError):
            gen_railway(0, 16)
        with pytest.raises(ConfigError):
            generate_tile("forest", 0, 64, "x")

    def test_tile_seed_depends_on_id_and_root(self):
        assert tile_seed(0, "railway_00001") == tile_seed(0, "railway_00001")
        assert tile_seed(0, "railway_00001") != tile_seed(0, "railway_00002")
        assert tile_seed(0, "railway_00001") != tile_seed(1, "railway_00001")

    @pytest.mark.slow
    def test_foreground_census(self):
        railway = [gen_railway(seed, 64).foreground_fraction for seed in range(1000)]
        vineyard = [gen_vineyard(seed, 64).foreground_fraction for seed in range(1000)]
        assert 0.02 <= min(railway) and max(railway) <= 0.30
        assert 0.05 <= min(vineyard) and max(vineyard) <= 0.6


class TestDataset:
    def test_split_sizes_and_manifest(self, tmp_path):
        dataset = build_dataset("railway", (70, 10, 20), root_seed=1, root=str(tmp_path), size=32)
        assert (len(dataset.train), len(dataset.val), len(dataset.test)) == (70, 10, 20)
        ids = [e.id for e in dataset.entries]
        assert len(set(ids)) == 100
        lines = (tmp_path / MANIFEST_NAME).read_text(encoding="utf-8").splitlines()
        assert len(lines) == 100
        assert all(len(line.split()) == 6 for line in lines)
        reread = read_manifest(str(tmp_path / MANIFEST_NAME))
        assert reread.entries == dataset.entries

    def test_regeneration_gives_identical_manifest(self, tmp_path):
        build_dataset("vineyard", (4, 1, 1), root_seed=9, root=str(tmp_path / "a"), size=32)
        build_dataset("vineyard", (4, 1, 1), root_seed=9, root=str(tmp_path / "b"), size=32, workers=3)
        a = (tmp_path / "a" / MANIFEST_NAME).read_bytes()
        b = (tmp_path / "b" / MANIFEST_NAME).read_bytes()
        assert a == b
        for name in os.listdir(tmp_path / "a" / "tiles"):
            assert (tmp_path / "a" / "tiles" / name).read_bytes() == (tmp_path / "b" / "tiles" / name).read_bytes()

    def test_tiles_round_trip(self, small_dataset):
        for tile in load_tiles(small_dataset, "train"):
            entry = small_dataset.entry(tile.id)
            fresh = generate_tile(entry.feature_class, entry.seed, 32, tile.id)
            assert tile.raster.tobytes() == fresh.raster.tobytes()
            np.testing.assert_array_equal(tile.gt_mask, fresh.gt_mask)

    def test_k_shot_subsample(self, tmp_path):
        dataset = build_dataset("railway", (30, 2, 2), root_seed=1, root=str(tmp_path), size=32)
        a = subsample(dataset, seed=4, k_shot=10)
        b = subsample(dataset, seed=4, k_shot=10)
        assert len(a.train) == 10 and a.train == b.train
        assert set(a.train) <= set(dataset.train)
        assert a.val == dataset.val and a.test == dataset.test
        assert a.regime == "10-shot"

    def test_fraction_subsample(self):
        entries = [ManifestEntry(f"t{i:03d}", "railway", i, "train", "r", "m") for i in range(200)]
        dataset = DatasetSplit(root=".", entries=entries)
        assert len(subsample(dataset, seed=0, fraction=0.1).train) == 20
        assert len(subsample(dataset, seed=0, fraction=0.001).train) == 1

    def test_subsample_arguments(self):
        dataset = DatasetSplit(root=".", entries=[ManifestEntry("a", "railway", 0, "train", "r", "m")])
        with pytest.raises(ConfigError):
            subsample(dataset, seed=0)
        with pytest.raises(ConfigError):
            subsample(dataset, seed=0, k_shot=2)

    def test_manifest_errors(self, tmp_path):
        with pytest.raises(DataError):
            read_manifest(str(tmp_path / "missing.txt"))
        bad = tmp_path / "bad.txt"
        bad.write_text("a railway 1 train x.ppm\n", encoding="utf-8")
        with pytest.raises(DataError):
            read_manifest(str(bad))
        dup = tmp_path / "dup.txt"
        dup.write_text("a railway 1 train x.ppm x.pgm\na railway 2 val y.ppm y.pgm\n", encoding="utf-8")
        with pytest.raises(DataError):
            read_manifest(str(dup))

    def test_mask_round_trip(self, tmp_path, rng):
        mask = rng.uniform(size=(9, 7)) > 0.5
        path = str(tmp_path / "m.pgm")
        write_mask(path, mask)
        np.testing.assert_array_equal(read_mask(path), mask)
