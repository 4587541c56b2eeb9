"""Density-based clustering of selected patches (OPTICS) and boundary tracing.

The ordering algorithm follows the classic OPTICS scheme: the core distance
of a point is the min_pts-th smallest distance within its eps-neighborhood,
where the neighborhood includes the point itself; reachability of o from p
is max(core_distance(p), dist(p, o)). Seeds are expanded in ascending
reachability with ties broken by ascending point index, and new runs start
at the lowest unprocessed index, so the output is fully deterministic.

UNDEFINED distances are represented as math.inf.

Clusters are extracted by a single reachability-threshold scan, and the
largest cluster's outline is reported as the unit grid edges separating
member cells from non-member cells or the slide border.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

from .errors import EmptySelectionError, InvalidInputError, NoClusterError
from .geometry import PatchGrid

if TYPE_CHECKING:
    from .detection import RoiSelection

UNDEFINED = math.inf
NOISE = -1

# An axis-aligned unit edge between two lattice corners, in patch-index
# coordinates: ((x0, y0), (x1, y1)) with the smaller corner first.
Edge = tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class OpticsParams:
    eps: float = 2.0
    min_pts: int = 5

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise InvalidInputError(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 2:
            raise InvalidInputError(f"min_pts must be >= 2, got {self.min_pts}")


@dataclass(frozen=True)
class ReachabilityOrdering:
    order: tuple[int, ...]
    reachability: tuple[float, ...]   # indexed by point, UNDEFINED for run starts
    core_distance: tuple[float, ...]  # indexed by point

    def __post_init__(self) -> None:
        n = len(self.order)
        if sorted(self.order) != list(range(n)):
            raise InvalidInputError("order is not a permutation")
        if len(self.reachability) != n or len(self.core_distance) != n:
            raise InvalidInputError("field lengths disagree")


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple[int, ...]           # cluster id per point, NOISE for none
    cluster_sizes: dict[int, int]


def _as_points(points: Sequence) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise InvalidInputError(f"expected non-empty (N, 2) points, got {pts.shape}")
    return pts


def core_distance(points: Sequence, i: int, params: OpticsParams) -> float:
    """Core distance of point i, or UNDEFINED below the density threshold."""
    pts = _as_points(points)
    if not 0 <= i < len(pts):
        raise InvalidInputError(f"point index {i} out of range")
    dists = np.linalg.norm(pts - pts[i], axis=1)
    within = np.sort(dists[dists <= params.eps])
    if len(within) < params.min_pts:
        return UNDEFINED
    return float(within[params.min_pts - 1])


def optics_order(points: Sequence, params: OpticsParams) -> ReachabilityOrdering:
    """Process all points into the OPTICS ordering with reachability values."""
    pts = _as_points(points)
    n = len(pts)
    core = [core_distance(pts, i, params) for i in range(n)]
    reach = [UNDEFINED] * n
    processed = [False] * n
    order: list[int] = []
    seeds: dict[int, float] = {}

    def expand(p: int) -> None:
        if core[p] == UNDEFINED:
            return
        dists = np.linalg.norm(pts - pts[p], axis=1)
        for o in range(n):
            if processed[o] or dists[o] > params.eps:
                continue
            r = max(core[p], float(dists[o]))
            if r < reach[o]:
                reach[o] = r
                seeds[o] = r

    for start in range(n):
        if processed[start]:
            continue
        processed[start] = True
        order.append(start)
        expand(start)
        while seeds:
            q = min(seeds, key=lambda j: (seeds[j], j))
            del seeds[q]
            processed[q] = True
            order.append(q)
            expand(q)

    return ReachabilityOrdering(tuple(order), tuple(reach), tuple(core))


def extract_clusters(ordering: ReachabilityOrdering,
                     threshold: float) -> ClusterAssignment:
    """Threshold scan over the ordering.

    A point whose reachability is within the threshold joins the current
    cluster; otherwise it starts a new cluster when its own core distance
    is within the threshold, and is noise when it is not.
    """
    if not threshold > 0:
        raise InvalidInputError(f"threshold must be > 0, got {threshold}")
    labels = [NOISE] * len(ordering.order)
    current = None
    next_id = 0
    for idx in ordering.order:
        if ordering.reachability[idx] <= threshold:
            if current is None:  # unreachable for orderings produced above
                current = next_id
                next_id += 1
            labels[idx] = current
        elif ordering.core_distance[idx] <= threshold:
            current = next_id
            next_id += 1
            labels[idx] = current
    sizes: dict[int, int] = {}
    for lab in labels:
        if lab != NOISE:
            sizes[lab] = sizes.get(lab, 0) + 1
    return ClusterAssignment(tuple(labels), sizes)


def cell_boundary_edges(cells: set[tuple[int, int]], grid: PatchGrid) -> list[Edge]:
    """Unit edges separating member cells from non-members or the border.

    Cells are (row, col) pairs; edges come back in patch-index coordinates,
    sorted lexicographically.
    """
    edges: list[Edge] = []
    for row, col in cells:
        if row == 0 or (row - 1, col) not in cells:
            edges.append(((col, row), (col + 1, row)))
        if row + 1 >= grid.rows or (row + 1, col) not in cells:
            edges.append(((col, row + 1), (col + 1, row + 1)))
        if col == 0 or (row, col - 1) not in cells:
            edges.append(((col, row), (col, row + 1)))
        if col + 1 >= grid.cols or (row, col + 1) not in cells:
            edges.append(((col + 1, row), (col + 1, row + 1)))
    return sorted(edges)


def largest_cluster_boundary(selection: "RoiSelection", grid: PatchGrid,
                             params: OpticsParams, threshold: float) -> list[Edge]:
    """Outline of the largest OPTICS cluster among the selected patches.

    Clustering runs on patch centers in patch-index coordinates (unit cell
    spacing). Cluster-size ties go to the smaller cluster id.
    """
    if not selection.selected:
        raise EmptySelectionError(f"slide {selection.slide_id!r}: nothing selected")
    cells = sorted(selection.selected)
    points = [(c.col + 0.5, c.row + 0.5) for c in cells]
    ordering = optics_order(points, params)
    assignment = extract_clusters(ordering, threshold)
    if not assignment.cluster_sizes:
        raise NoClusterError(
            f"slide {selection.slide_id!r}: all {len(cells)} selected patches are noise"
        )
    largest = min(
        assignment.cluster_sizes,
        key=lambda cid: (-assignment.cluster_sizes[cid], cid),
    )
    members = {
        (cells[i].row, cells[i].col)
        for i, lab in enumerate(assignment.labels)
        if lab == largest
    }
    return cell_boundary_edges(members, grid)


def boundary_to_pixels(edges: Sequence[Edge], patch_size: int) -> list[list[list[int]]]:
    """Scale patch-index edges to pixel coordinates for the JSON export."""
    return [
        [[x0 * patch_size, y0 * patch_size], [x1 * patch_size, y1 * patch_size]]
        for (x0, y0), (x1, y1) in edges
    ]
