import math

import numpy as np
import pytest

from oracles import brute_force_optics, random_point_set
from roidetect.detection import RoiSelection
from roidetect.errors import EmptySelectionError, InvalidInputError, NoClusterError
from roidetect.geometry import PatchRef, grid_from_slide
from roidetect.optics import (
    NOISE,
    UNDEFINED,
    OpticsParams,
    cell_boundary_edges,
    core_distance,
    extract_clusters,
    largest_cluster_boundary,
    optics_order,
)


def collinear(n):
    return [(float(i), 0.0) for i in range(n)]


def selection_of(cells, beta=0.5):
    refs = [PatchRef(r, c) for r, c in cells]
    return RoiSelection(
        slide_id="s", ranked=tuple(refs), selected=frozenset(refs),
        beta=beta, k_selected=len(refs),
    )


class TestCoreDistance:
    def test_collinear_center(self):
        # Neighborhood of the center point sorted: 0, 1, 1, 2, 2.
        d = core_distance(collinear(5), 2, OpticsParams(eps=10, min_pts=2))
        assert d == 1.0

    def test_isolated_point_undefined(self):
        d = core_distance([(0, 0), (10, 0)], 0, OpticsParams(eps=2, min_pts=2))
        assert d == UNDEFINED

    def test_three_coincident_points(self):
        pts = [(1.0, 1.0)] * 3
        assert core_distance(pts, 0, OpticsParams(eps=2, min_pts=2)) == 0.0

    def test_min_pts_larger_than_neighborhood(self):
        d = core_distance(collinear(3), 0, OpticsParams(eps=1.5, min_pts=4))
        assert d == UNDEFINED

    def test_bad_index(self):
        with pytest.raises(InvalidInputError):
            core_distance(collinear(3), 5, OpticsParams())


class TestOpticsOrder:
    def test_three_collinear_points(self):
        # Frozen from the brute-force reference.
        ordering = optics_order(collinear(3), OpticsParams(eps=10, min_pts=2))
        assert ordering.order == (0, 1, 2)
        assert ordering.reachability == (UNDEFINED, 1.0, 1.0)

    def test_single_point(self):
        ordering = optics_order([(3.0, 4.0)], OpticsParams(eps=1, min_pts=2))
        assert ordering.order == (0,)
        assert ordering.reachability == (UNDEFINED,)

    def test_far_point_starts_new_run(self):
        pts = [(0, 0), (0, 1), (10, 10)]
        ordering = optics_order(pts, OpticsParams(eps=2, min_pts=2))
        assert ordering.order == (0, 1, 2)
        assert ordering.reachability[2] == UNDEFINED

    def test_matches_brute_force_reference(self):
        rng = np.random.default_rng(31337)
        for _ in range(40):
            pts = random_point_set(rng)
            eps = float(rng.uniform(0.5, 5.0))
            min_pts = int(rng.integers(2, 7))
            ordering = optics_order(pts, OpticsParams(eps=eps, min_pts=min_pts))
            ref_order, ref_reach, ref_core = brute_force_optics(pts, eps, min_pts)
            assert list(ordering.order) == ref_order
            assert list(ordering.core_distance) == pytest.approx(ref_core, abs=1e-12)
            for got, want in zip(ordering.reachability, ref_reach):
                if want == math.inf:
                    assert got == math.inf
                else:
                    assert got == pytest.approx(want, abs=1e-12)

    def test_reachability_bounded_by_run_core_distances(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            pts = random_point_set(rng, max_points=40)
            params = OpticsParams(eps=float(rng.uniform(1, 4)), min_pts=3)
            ordering = optics_order(pts, params)
            run_cores = []
            for idx in ordering.order:
                r = ordering.reachability[idx]
                if r == UNDEFINED:
                    run_cores = []  # new run
                else:
                    assert run_cores, "finite reachability before any core"
                    assert r >= min(run_cores)
                if ordering.core_distance[idx] != UNDEFINED:
                    run_cores.append(ordering.core_distance[idx])


class TestExtractClusters:
    def test_pair_plus_outlier(self):
        pts = [(0, 0), (0, 1), (10, 10)]
        ordering = optics_order(pts, OpticsParams(eps=2, min_pts=2))
        assignment = extract_clusters(ordering, threshold=1.5)
        assert assignment.labels == (0, 0, NOISE)
        assert assignment.cluster_sizes == {0: 2}

    def test_all_points_one_cluster(self):
        pts = [(0, 0), (1, 0), (0, 1), (1, 1)]
        ordering = optics_order(pts, OpticsParams(eps=10, min_pts=2))
        assignment = extract_clusters(ordering, threshold=2.0)
        assert assignment.labels == (0, 0, 0, 0)

    def test_sparse_points_all_noise(self):
        pts = [(0, 0), (10, 0), (20, 0)]
        ordering = optics_order(pts, OpticsParams(eps=50, min_pts=2))
        assignment = extract_clusters(ordering, threshold=1.5)
        assert assignment.labels == (NOISE, NOISE, NOISE)
        assert assignment.cluster_sizes == {}

    def test_far_noise_point_leaves_labels_unchanged(self):
        rng = np.random.default_rng(8)
        pts = list(rng.normal(0, 1, size=(20, 2)))
        params = OpticsParams(eps=2.5, min_pts=3)
        base = extract_clusters(optics_order(pts, params), threshold=1.5)
        extended = extract_clusters(
            optics_order(pts + [(1e6, 1e6)], params), threshold=1.5
        )
        assert extended.labels[:20] == base.labels
        assert extended.labels[20] == NOISE

    def test_bad_threshold(self):
        ordering = optics_order([(0, 0)], OpticsParams())
        with pytest.raises(InvalidInputError):
            extract_clusters(ordering, threshold=0.0)


class TestLargestClusterBoundary:
    def setup_method(self):
        self.grid = grid_from_slide(640, 640, 32)  # 20 x 20
        self.params = OpticsParams(eps=2.0, min_pts=2)

    def test_solid_block_full_perimeter(self):
        sel = selection_of([(0, 0), (0, 1), (1, 0), (1, 1)])
        edges = largest_cluster_boundary(sel, self.grid, self.params, threshold=1.5)
        assert edges == sorted([
            ((0, 0), (1, 0)), ((1, 0), (2, 0)),
            ((0, 2), (1, 2)), ((1, 2), (2, 2)),
            ((0, 0), (0, 1)), ((0, 1), (0, 2)),
            ((2, 0), (2, 1)), ((2, 1), (2, 2)),
        ])

    def test_single_patch_no_cluster(self):
        sel = selection_of([(3, 3)])
        with pytest.raises(NoClusterError):
            largest_cluster_boundary(sel, self.grid, self.params, threshold=1.5)

    def test_largest_of_two_blocks_wins(self):
        big = [(r, c) for r in range(3) for c in range(3)]
        small = [(r, c) for r in range(10, 12) for c in range(10, 12)]
        sel = selection_of(big + small)
        edges = largest_cluster_boundary(sel, self.grid, self.params, threshold=1.5)
        assert edges == cell_boundary_edges(set(big), self.grid)
        assert len(edges) == 12

    def test_empty_selection(self):
        sel = RoiSelection("s", (), frozenset(), 0.0, 0)
        with pytest.raises(EmptySelectionError):
            largest_cluster_boundary(sel, self.grid, self.params, threshold=1.5)

    def test_boundary_even_and_at_least_four(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            rows = int(rng.integers(1, 5))
            cols = int(rng.integers(2, 5))  # at least 2 cells, else no cluster forms
            r0 = int(rng.integers(0, 16))
            c0 = int(rng.integers(0, 16))
            cells = [(r0 + r, c0 + c) for r in range(rows) for c in range(cols)]
            edges = largest_cluster_boundary(
                selection_of(cells), self.grid, self.params, threshold=1.5
            )
            assert len(edges) >= 4 and len(edges) % 2 == 0

    def test_border_cells_use_slide_border(self):
        cells = [(0, 0), (0, 1), (1, 0), (1, 1)]
        edges = cell_boundary_edges(set(cells), self.grid)
        assert ((0, 0), (1, 0)) in edges  # top edge along the slide border
        assert len(edges) == 8
