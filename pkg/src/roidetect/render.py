"""The three slide maps: overlay, cluster boundary, and score heatmap.

All blending is integer-only (round half up), so renders are bit-stable
across platforms and safe to pin as golden images. Output size always
equals input size; pixels in the partial strips outside the patch grid are
masked by the overlay and left untouched by the other two maps.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image

from .classifier import ScoreTriple
from .detection import RoiSelection
from .errors import IncompleteScoresError, InvalidBoundaryError
from .geometry import PatchGrid, PatchRef, validate_image_grid
from .optics import Edge
from .util import round_half_up

OVERLAY_BLUE = np.array([0, 0, 255], dtype=np.uint16)
BOUNDARY_BRUSH_PX = 3


def render_overlay(slide: np.ndarray, selection: RoiSelection,
                   grid: PatchGrid) -> np.ndarray:
    """Selected patches kept as-is; everything else blended half into blue."""
    validate_image_grid(slide, grid)
    out = ((slide.astype(np.uint16) + OVERLAY_BLUE + 1) // 2).astype(np.uint8)
    for patch in selection.selected:
        x0, y0, x1, y1 = grid.patch_rect(patch)
        out[y0:y1, x0:x1] = slide[y0:y1, x0:x1]
    return out


def render_boundary(slide: np.ndarray, boundary: Sequence[Edge],
                    grid: PatchGrid) -> np.ndarray:
    """Draw each boundary edge as a 3-pixel-wide black line over a copy.

    Edges are unit grid edges in patch-index coordinates and are scaled by
    the grid's patch size; the brush is clipped at the image border.
    """
    validate_image_grid(slide, grid)
    h, w = slide.shape[:2]
    ps = grid.patch_size
    out = slide.copy()
    half = BOUNDARY_BRUSH_PX // 2
    for (ax, ay), (bx, by) in boundary:
        x0, y0, x1, y1 = ax * ps, ay * ps, bx * ps, by * ps
        if not (0 <= x0 <= w and 0 <= x1 <= w and 0 <= y0 <= h and 0 <= y1 <= h):
            raise InvalidBoundaryError(
                f"edge ({ax},{ay})-({bx},{by}) outside {w}x{h} image"
            )
        if x0 != x1 and y0 != y1:
            raise InvalidBoundaryError(
                f"edge ({ax},{ay})-({bx},{by}) is not axis-aligned"
            )
        if y0 == y1:  # horizontal line
            rows = slice(max(y0 - half, 0), min(y0 + half + 1, h))
            cols = slice(max(min(x0, x1), 0), min(max(x0, x1) + 1, w))
        else:
            rows = slice(max(min(y0, y1), 0), min(max(y0, y1) + 1, h))
            cols = slice(max(x0 - half, 0), min(x0 + half + 1, w))
        out[rows, cols] = 0
    return out


def render_heatmap(slide: np.ndarray, scores: Mapping[PatchRef, ScoreTriple],
                   target: str, grid: PatchGrid) -> np.ndarray:
    """Blend a red-high / blue-low score colormap over every patch.

    Colormap: (round(255*s), 0, round(255*(1-s))); the patch color carries
    weight 0.6 against 0.4 for the slide pixels. The colormap rounds before
    the blend rounds.
    """
    validate_image_grid(slide, grid)
    out = slide.copy()
    for patch in grid.iter_patches():
        if patch not in scores:
            raise IncompleteScoresError(f"no score for {patch}")
        s = scores[patch].get(target)
        color = np.array(
            [round_half_up(255 * s), 0, round_half_up(255 * (1 - s))],
            dtype=np.uint16,
        )
        x0, y0, x1, y1 = grid.patch_rect(patch)
        src = slide[y0:y1, x0:x1].astype(np.uint16)
        out[y0:y1, x0:x1] = ((6 * color + 4 * src + 5) // 10).astype(np.uint8)
    return out


def save_png(image: np.ndarray, path: str | Path) -> None:
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
