import numpy as np
import pytest

from roidetect.errors import (
    EmptyGridError,
    GeometryMismatchError,
    InvalidInputError,
    MalformedPolygonError,
)
from roidetect.geometry import (
    PatchRef,
    Point,
    Polygon,
    coverage_lattice,
    grid_from_slide,
    patch_coverage,
    point_in_polygon,
    points_in_polygon,
)

UNIT_SQUARE = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])


def winding_number_inside(p, coords):
    """Independent reference: nonzero winding rule (Sunday's algorithm).

    Agrees with the even-odd rule on convex polygons for points off the
    boundary.
    """
    wn = 0
    n = len(coords)
    for i in range(n):
        x1, y1 = coords[i]
        x2, y2 = coords[(i + 1) % n]
        is_left = (x2 - x1) * (p[1] - y1) - (p[0] - x1) * (y2 - y1)
        if y1 <= p[1]:
            if y2 > p[1] and is_left > 0:
                wn += 1
        else:
            if y2 <= p[1] and is_left < 0:
                wn -= 1
    return wn != 0


def random_convex_polygon(rng, n_vertices):
    """Convex polygon from sorted angles on a randomly scaled circle."""
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=n_vertices))
    radius = rng.uniform(1.0, 5.0)
    cx, cy = rng.uniform(-2, 2, size=2)
    xs = cx + radius * np.cos(angles)
    ys = cy + radius * np.sin(angles)
    return Polygon(list(zip(xs, ys)))


class TestPointInPolygon:
    def test_interior(self):
        assert point_in_polygon(Point(0.5, 0.5), UNIT_SQUARE) is True

    def test_outside(self):
        assert point_in_polygon(Point(1.5, 0.5), UNIT_SQUARE) is False

    def test_on_edge_counts_as_inside(self):
        assert point_in_polygon(Point(1.0, 0.5), UNIT_SQUARE) is True

    def test_vertex_and_horizontal_edge(self):
        assert point_in_polygon(Point(0.0, 0.0), UNIT_SQUARE) is True
        assert point_in_polygon(Point(0.5, 1.0), UNIT_SQUARE) is True

    def test_nonconvex(self):
        # U-shape: the notch interior is outside.
        u_shape = Polygon([(0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)])
        assert point_in_polygon(Point(1.5, 2.0), u_shape) is False
        assert point_in_polygon(Point(0.5, 2.0), u_shape) is True

    def test_malformed_polygon_rejected(self):
        with pytest.raises(MalformedPolygonError):
            Polygon([(0, 0), (1, 1)])
        with pytest.raises(MalformedPolygonError):
            Polygon([(0, 0), (1, float("nan")), (1, 1)])

    def test_matches_winding_reference_on_convex_polygons(self):
        rng = np.random.default_rng(20240211)
        for _ in range(1000):
            poly = random_convex_polygon(rng, rng.integers(3, 10))
            p = rng.uniform(-8, 8, size=2)
            got = point_in_polygon(Point(p[0], p[1]), poly)
            want = winding_number_inside(p, poly.as_array())
            assert got == want

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(3)
        poly = random_convex_polygon(rng, 7)
        pts = rng.uniform(-6, 6, size=(200, 2))
        vec = points_in_polygon(pts, poly)
        for p, v in zip(pts, vec):
            assert point_in_polygon(Point(p[0], p[1]), poly) == bool(v)


class TestGridFromSlide:
    def test_exact_division(self):
        grid = grid_from_slide(512, 512, 32)
        assert (grid.rows, grid.cols, grid.n) == (16, 16, 256)

    def test_floor_division_drops_edge_strips(self):
        grid = grid_from_slide(100, 100, 32)
        assert (grid.rows, grid.cols, grid.n) == (3, 3, 9)

    def test_patch_wider_than_slide(self):
        with pytest.raises(EmptyGridError):
            grid_from_slide(20, 100, 32)

    def test_invalid_dimensions(self):
        with pytest.raises(InvalidInputError):
            grid_from_slide(0, 100, 32)
        with pytest.raises(InvalidInputError):
            grid_from_slide(100, 100, 0)

    def test_rectangles_disjoint_and_within_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            w = int(rng.integers(10, 200))
            h = int(rng.integers(10, 200))
            ps = int(rng.integers(1, 11))
            grid = grid_from_slide(w, h, ps)
            seen = np.zeros((h, w), dtype=np.int32)
            for patch in grid.iter_patches():
                x0, y0, x1, y1 = grid.patch_rect(patch)
                assert 0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h
                seen[y0:y1, x0:x1] += 1
            assert seen.max() <= 1
            assert seen.sum() == grid.n * ps * ps


class TestPatchCoverage:
    def setup_method(self):
        self.grid = grid_from_slide(64, 64, 32)

    def test_fully_inside(self):
        big = Polygon([(-1, -1), (70, -1), (70, 70), (-1, 70)])
        assert patch_coverage(PatchRef(0, 0), self.grid, [big]) == 1.0

    def test_disjoint(self):
        far = Polygon([(100, 100), (110, 100), (110, 110), (100, 110)])
        assert patch_coverage(PatchRef(0, 0), self.grid, [far]) == 0.0

    def test_empty_polygon_list(self):
        assert patch_coverage(PatchRef(0, 0), self.grid, []) == 0.0

    def test_half_covered_patch(self):
        # Left half of patch (0, 0): x in [0, 16). Oracle: enumerate the
        # 4x4 lattice of sub-cell centers and count the points with x < 16.
        half = Polygon([(-1, -1), (16, -1), (16, 33), (-1, 33)])
        lattice = coverage_lattice(PatchRef(0, 0), self.grid)
        assert len(lattice) == 16
        expect = sum(1 for x, _ in lattice if x <= 16) / 16.0
        assert expect == 0.5
        assert patch_coverage(PatchRef(0, 0), self.grid, [half]) == expect

    def test_values_are_sixteenths(self):
        rng = np.random.default_rng(5)
        grid = grid_from_slide(40, 40, 10)
        for _ in range(50):
            poly = random_convex_polygon(rng, 6)
            # Scale the polygon into pixel space.
            coords = poly.as_array() * 5 + 18
            poly = Polygon([tuple(c) for c in coords])
            patch = PatchRef(int(rng.integers(0, 4)), int(rng.integers(0, 4)))
            cov = patch_coverage(patch, grid, [poly])
            assert cov in {i / 16 for i in range(17)}

    def test_monotone_under_union(self):
        rng = np.random.default_rng(9)
        grid = grid_from_slide(60, 60, 12)
        for _ in range(50):
            a = random_convex_polygon(rng, 5)
            b = random_convex_polygon(rng, 5)
            a = Polygon([tuple(c) for c in a.as_array() * 6 + 30])
            b = Polygon([tuple(c) for c in b.as_array() * 6 + 30])
            patch = PatchRef(int(rng.integers(0, 5)), int(rng.integers(0, 5)))
            both = patch_coverage(patch, grid, [a, b])
            assert both >= patch_coverage(patch, grid, [a])
            assert both >= patch_coverage(patch, grid, [b])

    def test_patch_outside_grid(self):
        with pytest.raises(GeometryMismatchError):
            patch_coverage(PatchRef(5, 0), self.grid, [])

    def test_linear_index_row_major(self):
        grid = grid_from_slide(96, 64, 32)  # 2 rows x 3 cols
        assert grid.linear_index(PatchRef(0, 0)) == 0
        assert grid.linear_index(PatchRef(0, 2)) == 2
        assert grid.linear_index(PatchRef(1, 0)) == 3
        assert [grid.linear_index(p) for p in grid.iter_patches()] == list(range(6))
