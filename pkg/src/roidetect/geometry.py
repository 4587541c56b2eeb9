"""Slide tiling and polygon geometry.

A slide is tiled into fixed-size square patches by floor division; partial
strips at the right and bottom edges are dropped so that every patch has
identical pixel area. Patch membership in an annotated region is decided by
point sampling: a regular lattice of sub-cell centers inside the patch
rectangle is tested against the polygon union.

All containment tests use the even-odd (ray crossing) rule. Points exactly
on a polygon edge count as inside.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    EmptyGridError,
    GeometryMismatchError,
    InvalidInputError,
    MalformedPolygonError,
)

# Lattice resolution for patch coverage: coverage is a multiple of 1/k^2.
COVERAGE_SAMPLES_PER_SIDE = 4


@dataclass(frozen=True, order=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise MalformedPolygonError(f"non-finite coordinates ({self.x}, {self.y})")


class Polygon:
    """Closed polygon given by ordered vertices; convexity is not required."""

    def __init__(self, vertices: Sequence[Point | tuple[float, float]]):
        if len(vertices) < 3:
            raise MalformedPolygonError(
                f"polygon needs at least 3 vertices, got {len(vertices)}"
            )
        self.vertices: tuple[Point, ...] = tuple(
            v if isinstance(v, Point) else Point(float(v[0]), float(v[1]))
            for v in vertices
        )
        # Cached (V, 2) float array for the vectorized containment test.
        self._coords = np.array([(v.x, v.y) for v in self.vertices], dtype=float)

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polygon({len(self.vertices)} vertices)"

    def as_array(self) -> np.ndarray:
        return self._coords


@dataclass(frozen=True, order=True)
class PatchRef:
    """Row-major patch coordinate inside a grid."""

    row: int
    col: int

    def __post_init__(self) -> None:
        if self.row < 0 or self.col < 0:
            raise InvalidInputError(f"negative patch index ({self.row}, {self.col})")


@dataclass(frozen=True)
class PatchGrid:
    slide_width: int
    slide_height: int
    patch_size: int
    rows: int
    cols: int

    @property
    def n(self) -> int:
        """Total number of patches."""
        return self.rows * self.cols

    def contains(self, patch: PatchRef) -> bool:
        return patch.row < self.rows and patch.col < self.cols

    def linear_index(self, patch: PatchRef) -> int:
        return patch.row * self.cols + patch.col

    def patch_rect(self, patch: PatchRef) -> tuple[int, int, int, int]:
        """Pixel rectangle (x0, y0, x1, y1) of a patch, half-open on x1/y1."""
        if not self.contains(patch):
            raise InvalidInputError(f"{patch} outside {self.rows}x{self.cols} grid")
        x0 = patch.col * self.patch_size
        y0 = patch.row * self.patch_size
        return x0, y0, x0 + self.patch_size, y0 + self.patch_size

    def iter_patches(self) -> Iterator[PatchRef]:
        for row in range(self.rows):
            for col in range(self.cols):
                yield PatchRef(row, col)


def validate_image_grid(image: np.ndarray, grid: PatchGrid) -> None:
    """Check that an (h, w, 3) image is the raster this grid was built for."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise GeometryMismatchError(f"expected (h, w, 3) image, got {image.shape}")
    h, w = image.shape[:2]
    if (w, h) != (grid.slide_width, grid.slide_height):
        raise GeometryMismatchError(
            f"image is {w}x{h} but grid was built for "
            f"{grid.slide_width}x{grid.slide_height}"
        )
    if (h // grid.patch_size, w // grid.patch_size) != (grid.rows, grid.cols):
        raise GeometryMismatchError("grid shape inconsistent with image dimensions")


def grid_from_slide(width: int, height: int, patch_size: int) -> PatchGrid:
    """Tile a width x height slide into square patches of patch_size pixels."""
    if width < 1 or height < 1 or patch_size < 1:
        raise InvalidInputError(
            f"width, height and patch_size must be >= 1, got "
            f"({width}, {height}, {patch_size})"
        )
    rows = height // patch_size
    cols = width // patch_size
    if rows < 1 or cols < 1:
        raise EmptyGridError(
            f"patch size {patch_size} exceeds slide dimensions {width}x{height}"
        )
    return PatchGrid(width, height, patch_size, rows, cols)


def points_in_polygon(points: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorized even-odd containment test for an (N, 2) array of points.

    On-edge points are inside. Horizontal edges never count as ray
    crossings; points on them are caught by the explicit on-edge test.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"expected (N, 2) point array, got {pts.shape}")
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]

    coords = poly.as_array()
    x1, y1 = coords[:, 0][None, :], coords[:, 1][None, :]
    nxt = np.roll(coords, -1, axis=0)
    x2, y2 = nxt[:, 0][None, :], nxt[:, 1][None, :]

    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    in_bbox = (
        (px >= np.minimum(x1, x2)) & (px <= np.maximum(x1, x2))
        & (py >= np.minimum(y1, y2)) & (py <= np.maximum(y1, y2))
    )
    on_edge = ((cross == 0.0) & in_bbox).any(axis=1)

    straddles = (y1 > py) != (y2 > py)
    dy = np.where(straddles, y2 - y1, 1.0)  # guarded; unused where not straddling
    x_int = x1 + (py - y1) * (x2 - x1) / dy
    crossings = (straddles & (px < x_int)).sum(axis=1)

    return on_edge | (crossings % 2 == 1)


def point_in_polygon(p: Point, poly: Polygon) -> bool:
    """Even-odd containment test for a single point."""
    return bool(points_in_polygon(np.array([[p.x, p.y]]), poly)[0])


def coverage_lattice(patch: PatchRef, grid: PatchGrid,
                     samples_per_side: int = COVERAGE_SAMPLES_PER_SIDE) -> np.ndarray:
    """(k^2, 2) sample points at the sub-cell centers of a patch rectangle."""
    x0, y0, _, _ = grid.patch_rect(patch)
    step = grid.patch_size / samples_per_side
    offsets = (np.arange(samples_per_side) + 0.5) * step
    xs, ys = np.meshgrid(x0 + offsets, y0 + offsets)
    return np.column_stack([xs.ravel(), ys.ravel()])


def patch_coverage(patch: PatchRef, grid: PatchGrid, polys: Sequence[Polygon],
                   samples_per_side: int = COVERAGE_SAMPLES_PER_SIDE) -> float:
    """Fraction of a patch's sample lattice inside the union of polygons.

    Returns m / samples_per_side^2 for integer m, so with the default
    lattice the result is always a multiple of 1/16.
    """
    if samples_per_side < 1:
        raise InvalidInputError("samples_per_side must be >= 1")
    if not grid.contains(patch):
        raise GeometryMismatchError(f"{patch} outside {grid.rows}x{grid.cols} grid")
    if not polys:
        return 0.0
    pts = coverage_lattice(patch, grid, samples_per_side)
    inside = np.zeros(len(pts), dtype=bool)
    for poly in polys:
        inside |= points_in_polygon(pts, poly)
        if inside.all():
            break
    return float(inside.sum()) / (samples_per_side * samples_per_side)
