"""
Data Package
Synthetic railway/vineyard map tiles and their on-disk dataset format
"""

from .dataset import (
    DatasetSplit,
    ManifestEntry,
    build_dataset,
    load_tile,
    load_tiles,
    pretrain_corpus,
    read_manifest,
    read_mask,
    read_raster,
    subsample,
    write_manifest,
    write_mask,
    write_probability,
    write_tile,
)
from .mapgen import (
    FEATURE_CLASSES,
    RailwayGeometry,
    Tile,
    VineyardGeometry,
    gen_railway,
    gen_vineyard,
    generate_tile,
    rail_lines,
    rasterize_geometry,
    stroke_mask,
    tile_seed,
)
from .raster import bresenham_line, disc_offsets, draw_polyline, fill_polygon

__all__ = [
    'DatasetSplit',
    'ManifestEntry',
    'build_dataset',
    'load_tile',
    'load_tiles',
    'pretrain_corpus',
    'read_manifest',
    'read_mask',
    'read_raster',
    'subsample',
    'write_manifest',
    'write_mask',
    'write_probability',
    'write_tile',
    'FEATURE_CLASSES',
    'RailwayGeometry',
    'Tile',
    'VineyardGeometry',
    'gen_railway',
    'gen_vineyard',
    'generate_tile',
    'rail_lines',
    'rasterize_geometry',
    'stroke_mask',
    'tile_seed',
    'bresenham_line',
    'disc_offsets',
    'draw_polyline',
    'fill_polygon',
]
