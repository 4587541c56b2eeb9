"""Regenerate the golden renderer fixtures in this directory.

Run from the repository root:  python3 tests/golden/make_goldens.py
The fixtures use a 2x2 patch grid (16x16 px, patch size 8) and exercise the
documented blend constants: the (128, 128, 255) overlay blend on white and
the (153, 0, 0) / (0, 0, 153) heatmap extremes on black.
"""

from pathlib import Path

import numpy as np

from roidetect.classifier import MELANOMA, ScoreTriple
from roidetect.detection import RoiSelection
from roidetect.geometry import PatchRef, grid_from_slide
from roidetect.render import render_boundary, render_heatmap, render_overlay, save_png

HERE = Path(__file__).parent
GRID = grid_from_slide(16, 16, 8)


def overlay_fixture():
    slide = np.full((16, 16, 3), 255, dtype=np.uint8)
    selected = (PatchRef(0, 0),)
    ranked = tuple(GRID.iter_patches())
    sel = RoiSelection("golden", ranked, frozenset(selected), beta=0.25, k_selected=1)
    return render_overlay(slide, sel, GRID)


def boundary_fixture():
    slide = np.full((16, 16, 3), 255, dtype=np.uint8)
    edges = [  # perimeter of patch (0, 0)
        ((0, 0), (1, 0)), ((0, 1), (1, 1)),
        ((0, 0), (0, 1)), ((1, 0), (1, 1)),
    ]
    return render_boundary(slide, edges, GRID)


def heatmap_fixture():
    slide = np.zeros((16, 16, 3), dtype=np.uint8)
    scores = {
        PatchRef(0, 0): ScoreTriple(1.0, 0.0, 0.0),
        PatchRef(0, 1): ScoreTriple(0.0, 0.6, 0.4),
        PatchRef(1, 0): ScoreTriple(0.5, 0.3, 0.2),
        PatchRef(1, 1): ScoreTriple(0.25, 0.35, 0.4),
    }
    return render_heatmap(slide, scores, MELANOMA, GRID)


def main():
    save_png(overlay_fixture(), HERE / "overlay.png")
    save_png(boundary_fixture(), HERE / "boundary.png")
    save_png(heatmap_fixture(), HERE / "heatmap.png")
    print(f"golden fixtures written to {HERE}")


if __name__ == "__main__":
    main()
