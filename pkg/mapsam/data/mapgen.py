"""
Map Generator Module
Deterministic synthetic historical-map tiles: railways (two parallel lines) and vineyards (vertical strokes)
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from ..errors import ConfigError
from .raster import Pixel, draw_polyline, fill_polygon

logger = logging.getLogger(__name__)

MIN_TILE_SIZE = 32
FEATURE_CLASSES = ("railway", "vineyard")

PARCHMENT_COLOR = (236, 226, 200)
PARCHMENT_NOISE = 8
RAIL_COLOR = (40, 32, 28)
STROKE_COLOR = (62, 70, 48)
DISTRACTOR_COLOR = (96, 84, 72)
GLYPH_COLOR = (34, 30, 30)

# sin(k·15°)·1024, rounded; cos(k·15°) is entry k + 6
DIRECTION_SCALE = 1024
DIRECTION_SINES = (
    0, 265, 512, 724, 887, 989, 1024, 989, 887, 724, 512, 265,
    0, -265, -512, -724, -887, -989, -1024, -989, -887, -724, -512, -265,
)


@dataclass
class RailwayGeometry:
    """Centreline polyline (may leave the tile), band radius and rail line width"""

    polyline: List[Pixel]
    radius: int
    rail_width: int = 1


@dataclass
class VineyardGeometry:
    """Simple polygon plus the vertical-stroke hatch layout"""

    vertices: List[Pixel]
    stroke_spacing: int
    stroke_offset: int


Geometry = Union[RailwayGeometry, VineyardGeometry]


@dataclass
class Tile:
    """Raster (H×W×3 uint8), ground truth (H×W bool) and provenance"""

    raster: np.ndarray
    gt_mask: np.ndarray
    feature_class: str
    seed: int
    id: str
    geometry: Optional[Geometry] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.raster.shape[0]

    @property
    def foreground_fraction(self) -> float:
        return float(self.gt_mask.mean())


def tile_seed(root_seed: int, tile_id: str) -> int:
    """u64 seed of one tile, independent of generation order"""
    digest = hashlib.blake2b(f"{root_seed}:{tile_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _check_size(size: int):
    if size < MIN_TILE_SIZE:
        raise ConfigError(f"tile size must be at least {MIN_TILE_SIZE}, got {size}")


def railway_radius(size: int) -> int:
    return max(2, size // 20)


def railway_geometry(rng: np.random.Generator, size: int) -> RailwayGeometry:
    """
    Polyline entering through one side and leaving through the opposite one

    Both endpoints sit outside the tile so the band always crosses it completely.
    """
    radius = railway_radius(size)
    outside = radius + 2
    low, high = int(0.2 * size), int(0.8 * size)
    entry, exit_ = int(rng.integers(low, high + 1)), int(rng.integers(low, high + 1))
    bends = int(rng.integers(1, 3))
    inner = [int(rng.integers(int(0.25 * size), int(0.75 * size) + 1)) for _ in range(2 * bends)]
    along = sorted(int(v) for v in rng.integers(int(0.25 * size), int(0.75 * size) + 1, size=bends))
    if rng.integers(0, 2) == 0:
        # left to right
        points = [(entry, -outside)] + [(inner[i], along[i]) for i in range(bends)] + [(exit_, size - 1 + outside)]
    else:
        points = [(-outside, entry)] + [(along[i], inner[i]) for i in range(bends)] + [(size - 1 + outside, exit_)]
    return RailwayGeometry(polyline=points, radius=radius, rail_width=1)


def vineyard_geometry(rng: np.random.Generator, size: int) -> VineyardGeometry:
    """
    Star-shaped polygon around an integer centre with one vertex per angular sector

    Vertex directions come from DIRECTION_SINES, so every coordinate is integer arithmetic.
    """
    count = int(rng.integers(6, 10))
    centre_r = int(rng.integers(int(0.4 * size), int(0.6 * size) + 1))
    centre_c = int(rng.integers(int(0.4 * size), int(0.6 * size) + 1))
    steps = len(DIRECTION_SINES)
    vertices = []
    for i in range(count):
        # sector starts are at least 2 steps apart, so a jitter of 0/1 keeps the order strict
        k = i * steps // count + int(rng.integers(0, 2))
        radius = int(rng.integers(int(0.22 * size), int(0.40 * size) + 1))
        sin, cos = DIRECTION_SINES[k], DIRECTION_SINES[(k + steps // 4) % steps]
        r = centre_r + (radius * sin + DIRECTION_SCALE // 2) // DIRECTION_SCALE
        c = centre_c + (radius * cos + DIRECTION_SCALE // 2) // DIRECTION_SCALE
        vertices.append((min(max(r, 0), size), min(max(c, 0), size)))
    spacing = int(rng.integers(3, 5))
    return VineyardGeometry(vertices=vertices, stroke_spacing=spacing, stroke_offset=int(rng.integers(0, spacing)))


def rasterize_geometry(geometry: Geometry, size: int) -> np.ndarray:
    """Ground-truth footprint of the target geometry"""
    if isinstance(geometry, RailwayGeometry):
        return draw_polyline((size, size), geometry.polyline, geometry.radius)
    return fill_polygon((size, size), geometry.vertices)


def rail_lines(geometry: RailwayGeometry, size: int) -> np.ndarray:
    """The two dark parallel lines: outer ring of the band, rail_width pixels thick"""
    band = draw_polyline((size, size), geometry.polyline, geometry.radius)
    inner = draw_polyline((size, size), geometry.polyline, geometry.radius - geometry.rail_width)
    return band & ~inner


def stroke_mask(geometry: VineyardGeometry, size: int) -> np.ndarray:
    """Broken vertical strokes, clipped to the polygon interior"""
    rows, cols = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    pattern = ((cols - geometry.stroke_offset) % geometry.stroke_spacing == 0) & (rows % 4 != 3)
    return pattern & fill_polygon((size, size), geometry.vertices)


def parchment_background(rng: np.random.Generator, size: int) -> np.ndarray:
    noise = rng.integers(-PARCHMENT_NOISE, PARCHMENT_NOISE + 1, size=(size, size, 1))
    base = np.asarray(PARCHMENT_COLOR, dtype=np.int64).reshape(1, 1, 3)
    return np.clip(base + noise, 0, 255).astype(np.int64)


def draw_distractors(raster: np.ndarray, rng: np.random.Generator):
    """Thin single lines and small text-like glyph blobs"""
    size = raster.shape[0]
    for _ in range(int(rng.integers(1, 4))):
        start = (int(rng.integers(0, size)), int(rng.integers(0, size)))
        end = (int(rng.integers(0, size)), int(rng.integers(0, size)))
        raster[draw_polyline((size, size), [start, end], 0)] = DISTRACTOR_COLOR
    for _ in range(int(rng.integers(1, 4))):
        glyph = rng.integers(0, 2, size=(5, 3)).astype(bool)
        for k in range(int(rng.integers(2, 5))):
            r0 = int(rng.integers(0, size - 5))
            c0 = int(rng.integers(0, size - 4 * 4))
            region = raster[r0:r0 + 5, c0 + 4 * k:c0 + 4 * k + 3]
            region[glyph] = GLYPH_COLOR


def _finish(raster: np.ndarray) -> np.ndarray:
    return np.clip(raster, 0, 255).astype(np.uint8)


def gen_railway(seed: int, size: int, tile_id: str = "railway") -> Tile:
    """
    Parchment background with distractors and one railway crossing the tile

    gt is the whole band between and including the two rail lines.
    """
    _check_size(size)
    rng = np.random.default_rng(seed)
    geometry = railway_geometry(rng, size)
    raster = parchment_background(rng, size)
    draw_distractors(raster, rng)
    raster[rail_lines(geometry, size)] = RAIL_COLOR
    gt = rasterize_geometry(geometry, size)
    return Tile(_finish(raster), gt, "railway", seed, tile_id, geometry)


def gen_vineyard(seed: int, size: int, tile_id: str = "vineyard") -> Tile:
    """Polygon region hatched with vertical strokes; gt is the polygon interior"""
    _check_size(size)
    rng = np.random.default_rng(seed)
    geometry = vineyard_geometry(rng, size)
    raster = parchment_background(rng, size)
    draw_distractors(raster, rng)
    raster[stroke_mask(geometry, size)] = STROKE_COLOR
    gt = rasterize_geometry(geometry, size)
    return Tile(_finish(raster), gt, "vineyard", seed, tile_id, geometry)


def generate_tile(feature_class: str, seed: int, size: int, tile_id: str) -> Tile:
    if feature_class == "railway":
        return gen_railway(seed, size, tile_id)
    if feature_class == "vineyard":
        return gen_vineyard(seed, size, tile_id)
    raise ConfigError(f"unknown feature class '{feature_class}', expected one of {FEATURE_CLASSES}")
