"""Seeded synthetic slide generator for desk-scale pipeline runs.

Each slide is a stroma-colored raster with 1-3 planted tumor blobs drawn
from the slide label's color distribution, plus two background rectangles
recorded as other-regions. The annotation file deliberately covers only a
random 60-100% of the planted regions (largest regions first), mimicking
annotators who outline the prominent regions and leave smaller ones
untraced; unannotated blobs are still painted into the image.

Everything derives from one seeded generator, so regeneration with the same
seed is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import MELANOMA, NEVUS
from .errors import InvalidInputError
from .geometry import Polygon, points_in_polygon
from .util import round_half_up


@dataclass(frozen=True)
class ColorModel:
    stroma: tuple[float, float, float] = (230.0, 180.0, 190.0)
    melanoma: tuple[float, float, float] = (120.0, 80.0, 60.0)
    nevus: tuple[float, float, float] = (170.0, 120.0, 140.0)
    std: float = 12.0


@dataclass(frozen=True)
class SynthConfig:
    n_slides: int = 40
    slide_width: int = 512
    slide_height: int = 512
    patch_size: int = 32
    max_regions: int = 3
    primary_radius: tuple[float, float] = (95.0, 125.0)
    secondary_radius: tuple[float, float] = (40.0, 60.0)
    other_rect_side: tuple[float, float] = (56.0, 96.0)
    annotated_fraction: tuple[float, float] = (0.6, 1.0)
    colors: ColorModel = field(default_factory=ColorModel)

    def __post_init__(self) -> None:
        if self.n_slides < 1 or self.max_regions < 1:
            raise InvalidInputError(f"invalid synthetic config {self}")


def _blob_polygon(rng, cx, cy, radius, n_vertices=10):
    """Star-shaped blob around a center: jittered angles and radii."""
    base = np.linspace(0.0, 2.0 * np.pi, n_vertices, endpoint=False)
    angles = base + rng.uniform(-0.15, 0.15, size=n_vertices)
    radii = radius * rng.uniform(0.75, 1.2, size=n_vertices)
    xs = cx + radii * np.cos(angles)
    ys = cy + radii * np.sin(angles)
    return Polygon([(float(x), float(y)) for x, y in zip(xs, ys)])


def _polygon_area(poly: Polygon) -> float:
    coords = poly.as_array()
    x, y = coords[:, 0], coords[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _place_regions(rng, config: SynthConfig):
    """Blob centers/radii: one primary and up to two smaller secondaries."""
    w, h = config.slide_width, config.slide_height
    n_regions = int(rng.integers(1, config.max_regions + 1))
    placed = []  # (cx, cy, radius)
    for i in range(n_regions):
        lo, hi = config.primary_radius if i == 0 else config.secondary_radius
        radius = float(rng.uniform(lo, hi))
        margin = radius * 1.2 + 4
        for _ in range(60):
            cx = float(rng.uniform(margin, w - margin))
            cy = float(rng.uniform(margin, h - margin))
            if all(
                np.hypot(cx - px, cy - py) > 1.25 * (radius + pr) + config.patch_size
                for px, py, pr in placed
            ):
                placed.append((cx, cy, radius))
                break
            # else retry; give up silently after the attempt budget
    return placed


def _place_other_rects(rng, config: SynthConfig, regions):
    """Two background rectangles clear of every planted region.

    When space is tight the sampled size shrinks every 25 failed attempts,
    so even small slides usually get their background regions.
    """
    w, h = config.slide_width, config.slide_height
    lo, hi = config.other_rect_side
    rects = []
    for _ in range(2):
        for attempt in range(100):
            shrink = 0.8 ** (attempt // 25)
            rw = float(rng.uniform(lo, hi)) * shrink
            rh = float(rng.uniform(lo, hi)) * shrink
            x0 = float(rng.uniform(4, w - rw - 4))
            y0 = float(rng.uniform(4, h - rh - 4))
            cx, cy = x0 + rw / 2, y0 + rh / 2
            clear = all(
                np.hypot(cx - px, cy - py) > 1.3 * pr + np.hypot(rw, rh) / 2
                for px, py, pr in regions
            )
            if clear and all(
                abs(cx - (ox0 + ow / 2)) > (rw + ow) / 2 + 8
                or abs(cy - (oy0 + oh / 2)) > (rh + oh) / 2 + 8
                for ox0, oy0, ow, oh in rects
            ):
                rects.append((x0, y0, rw, rh))
                break
    return [
        Polygon([(x0, y0), (x0 + rw, y0), (x0 + rw, y0 + rh), (x0, y0 + rh)])
        for x0, y0, rw, rh in rects
    ]


def _fill_polygon(rng, image, poly, mean, std):
    """Paint polygon pixels with per-pixel draws from the class color."""
    coords = poly.as_array()
    x0 = max(int(np.floor(coords[:, 0].min())), 0)
    x1 = min(int(np.ceil(coords[:, 0].max())) + 1, image.shape[1])
    y0 = max(int(np.floor(coords[:, 1].min())), 0)
    y1 = min(int(np.ceil(coords[:, 1].max())) + 1, image.shape[0])
    if x0 >= x1 or y0 >= y1:
        return
    xs, ys = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    mask = points_in_polygon(pts, poly).reshape(y1 - y0, x1 - x0)
    block = rng.normal(mean, std, size=(y1 - y0, x1 - x0, 3))
    block = np.clip(np.rint(block), 0, 255).astype(np.uint8)
    region = image[y0:y1, x0:x1]
    region[mask] = block[mask]


def generate_synthetic(out_dir: str | Path, config: SynthConfig, seed: int) -> Path:
    """Write N slides, their annotation files for some of the planted
    regions, and a manifest. Returns the manifest path."""
    from .render import save_png  # local import keeps module deps one-way

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "annotations").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    colors = config.colors
    n_melanoma = round_half_up(config.n_slides / 2)

    entries = []
    for i in range(config.n_slides):
        slide_id = f"slide_{i:03d}"
        label = MELANOMA if i < n_melanoma else NEVUS
        tumor_mean = colors.melanoma if label == MELANOMA else colors.nevus

        image = np.clip(
            np.rint(rng.normal(
                colors.stroma, colors.std,
                size=(config.slide_height, config.slide_width, 3),
            )),
            0, 255,
        ).astype(np.uint8)

        regions = _place_regions(rng, config)
        blobs = [_blob_polygon(rng, cx, cy, r) for cx, cy, r in regions]
        for blob in blobs:
            _fill_polygon(rng, image, blob, tumor_mean, colors.std)
        other_polys = _place_other_rects(rng, config, regions)

        lo, hi = config.annotated_fraction
        u = float(rng.uniform(lo, hi))
        n_annotated = min(max(round_half_up(u * len(blobs)), 1), len(blobs))
        by_area = sorted(blobs, key=_polygon_area, reverse=True)
        annotated = by_area[:n_annotated]

        save_png(image, out_dir / "images" / f"{slide_id}.png")
        annotation = {
            "roi": [
                [[v.x, v.y] for v in poly.vertices] for poly in annotated
            ],
            "other": [
                [[v.x, v.y] for v in poly.vertices] for poly in other_polys
            ],
        }
        (out_dir / "annotations" / f"{slide_id}.json").write_text(
            json.dumps(annotation)
        )
        entries.append({
            "slide_id": slide_id,
            "image": f"images/{slide_id}.png",
            "label": label,
            "annotations": f"annotations/{slide_id}.json",
            "patch_size": config.patch_size,
        })

    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2))
    return manifest
