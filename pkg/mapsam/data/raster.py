"""
Raster Module
Integer-only rasterization: Bresenham lines, disc dilation and scanline polygon fill
"""

from typing import List, Sequence, Tuple

import numpy as np

Pixel = Tuple[int, int]  # (row, col)


def bresenham_line(start: Pixel, end: Pixel) -> List[Pixel]:
    """Every pixel on the integer line from start to end, both inclusive"""
    r0, c0 = int(start[0]), int(start[1])
    r1, c1 = int(end[0]), int(end[1])
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    step_r = 1 if r1 >= r0 else -1
    step_c = 1 if c1 >= c0 else -1
    err = dc - dr
    pixels = []
    r, c = r0, c0
    while True:
        pixels.append((r, c))
        if r == r1 and c == c1:
            break
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += step_c
        if e2 < dc:
            err += dc
            r += step_r
    return pixels


def polyline_pixels(vertices: Sequence[Pixel]) -> List[Pixel]:
    pixels: List[Pixel] = []
    for start, end in zip(vertices[:-1], vertices[1:]):
        pixels.extend(bresenham_line(start, end))
    return pixels


def disc_offsets(radius: int) -> np.ndarray:
    """Integer (dr, dc) offsets with dr² + dc² ≤ radius²"""
    span = np.arange(-radius, radius + 1)
    dr, dc = np.meshgrid(span, span, indexing="ij")
    inside = dr * dr + dc * dc <= radius * radius
    return np.stack([dr[inside], dc[inside]], axis=-1)


def draw_polyline(shape: Tuple[int, int], vertices: Sequence[Pixel], radius: int = 0) -> np.ndarray:
    """
    Boolean mask of a polyline dilated by a disc of the given radius

    Vertices may lie outside the canvas; everything is clipped.
    """
    h, w = shape
    pixels = np.asarray(polyline_pixels(vertices), dtype=np.int64).reshape(-1, 2)
    mask = np.zeros((h, w), dtype=bool)
    for dr, dc in disc_offsets(max(radius, 0)):
        rows = pixels[:, 0] + dr
        cols = pixels[:, 1] + dc
        keep = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        mask[rows[keep], cols[keep]] = True
    return mask


def fill_polygon(shape: Tuple[int, int], vertices: Sequence[Pixel]) -> np.ndarray:
    """
    Even-odd fill: a pixel is inside when its centre is inside the polygon

    Works on doubled coordinates (centres are odd, vertices even), so no centre ever
    lies on a vertex row and the test stays in integers.
    """
    h, w = shape
    verts = np.asarray(vertices, dtype=np.int64).reshape(-1, 2) * 2
    mask = np.zeros((h, w), dtype=bool)
    if len(verts) < 3:
        return mask
    centres_x = 2 * np.arange(w, dtype=np.int64) + 1
    nxt = np.roll(verts, -1, axis=0)
    for r in range(h):
        y = 2 * r + 1
        inside = np.zeros(w, dtype=bool)
        for (y0, x0), (y1, x1) in zip(verts, nxt):
            if (y0 < y) == (y1 < y):
                continue
            dy, dx = y1 - y0, x1 - x0
            # crossing x = x0 + (y − y0)·dx/dy; centre X is right of it when X·dy > x0·dy + (y − y0)·dx (dy > 0)
            lhs = centres_x * dy
            rhs = x0 * dy + (y - y0) * dx
            right = lhs > rhs if dy > 0 else lhs < rhs
            inside ^= right
        mask[r] = inside
    return mask
