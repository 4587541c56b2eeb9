"""Slide manifests, polygon annotations, patch labeling, and dataset splits.

A manifest is a JSON array of slide entries; annotation files hold the
"roi" polygons (tumor regions traced by the annotator) and the manually
chosen "other" polygons (background regions). Patches are labeled by
coverage: a patch whose annotated-region coverage reaches tau inherits the
slide label, a patch covered by an other-region becomes background, and
everything else stays unlabeled because regions outside the annotations may
still contain tumor.

Splits shuffle slide ids with an explicitly seeded generator, so a plan is
a pure function of (catalog order, fraction, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .classifier import MELANOMA, NEVUS, OTHER
from .errors import (
    DegenerateSplitError,
    DuplicateIdError,
    GeometryMismatchError,
    InvalidInputError,
    ManifestError,
    UnknownLabelError,
)
from .geometry import PatchGrid, PatchRef, Polygon, patch_coverage
from .util import round_half_up

SLIDE_LABELS = (MELANOMA, NEVUS)

# Minimum coverage for a patch to count as inside a region.
DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class SlideRecord:
    slide_id: str
    image_path: Path
    slide_label: str
    annotation_path: Path
    patch_size: int


@dataclass(frozen=True)
class AnnotationSet:
    roi_polygons: tuple[Polygon, ...]
    other_polygons: tuple[Polygon, ...]


@dataclass(frozen=True)
class LabeledPatch:
    slide_id: str
    patch: PatchRef
    label: str


@dataclass(frozen=True)
class DatasetCatalog:
    slides: tuple[SlideRecord, ...]

    def ids(self) -> list[str]:
        return [s.slide_id for s in self.slides]

    def by_id(self, slide_id: str) -> SlideRecord:
        for slide in self.slides:
            if slide.slide_id == slide_id:
                return slide
        raise ManifestError(f"unknown slide_id {slide_id!r}")


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int


def load_catalog(manifest_path: str | Path) -> DatasetCatalog:
    """Parse a manifest file into a catalog, order preserved."""
    manifest_path = Path(manifest_path)
    try:
        entries = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(entries, list) or not entries:
        raise ManifestError(f"{manifest_path}: expected a non-empty JSON array")

    base = manifest_path.parent
    slides = []
    seen = set()
    for i, entry in enumerate(entries):
        try:
            slide_id = str(entry["slide_id"])
            image = entry["image"]
            label = entry["label"]
            annotations = entry["annotations"]
            patch_size = int(entry["patch_size"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"{manifest_path}: entry {i} malformed: {exc}") from exc
        if slide_id in seen:
            raise DuplicateIdError(f"{manifest_path}: duplicate slide_id {slide_id!r}")
        seen.add(slide_id)
        if label not in SLIDE_LABELS:
            raise UnknownLabelError(
                f"{manifest_path}: entry {i}: unknown label {label!r} "
                f"(expected one of {SLIDE_LABELS})"
            )
        if patch_size < 1:
            raise ManifestError(f"{manifest_path}: entry {i}: patch_size {patch_size}")
        slides.append(SlideRecord(
            slide_id=slide_id,
            image_path=base / image,
            slide_label=label,
            annotation_path=base / annotations,
            patch_size=patch_size,
        ))
    return DatasetCatalog(tuple(slides))


def _parse_polygons(raw, path, key) -> tuple[Polygon, ...]:
    polys = []
    for i, coords in enumerate(raw):
        try:
            polys.append(Polygon([(float(x), float(y)) for x, y in coords]))
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"{path}: {key}[{i}] malformed: {exc}") from exc
    return tuple(polys)


def load_annotations(path: str | Path) -> AnnotationSet:
    """Read an annotation file: {"roi": [[[x, y], ...], ...], "other": [...]}"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    return AnnotationSet(
        roi_polygons=_parse_polygons(payload.get("roi", []), path, "roi"),
        other_polygons=_parse_polygons(payload.get("other", []), path, "other"),
    )


def load_slide_image(record: SlideRecord) -> np.ndarray:
    """Slide raster as an (h, w, 3) uint8 array."""
    with Image.open(record.image_path) as img:
        return np.asarray(img.convert("RGB"))


def extract_labeled_patches(slide: SlideRecord, ann: AnnotationSet,
                            grid: PatchGrid, tau: float = DEFAULT_TAU) -> list[LabeledPatch]:
    """Label the patches of one slide; unlabeled patches are omitted.

    Coverage >= tau against the roi polygons gives the slide label,
    otherwise coverage >= tau against the other polygons gives the
    background label. Patches matching neither are deliberately excluded:
    they may contain unannotated tumor.
    """
    if not 0 < tau <= 1:
        raise InvalidInputError(f"tau must be in (0, 1], got {tau}")
    if grid.patch_size != slide.patch_size:
        raise GeometryMismatchError(
            f"grid patch_size {grid.patch_size} != slide patch_size {slide.patch_size}"
        )
    labeled = []
    for patch in grid.iter_patches():
        if patch_coverage(patch, grid, ann.roi_polygons) >= tau:
            labeled.append(LabeledPatch(slide.slide_id, patch, slide.slide_label))
        elif patch_coverage(patch, grid, ann.other_polygons) >= tau:
            labeled.append(LabeledPatch(slide.slide_id, patch, OTHER))
    return labeled


def annotated_patches(ann: AnnotationSet, grid: PatchGrid,
                      tau: float = DEFAULT_TAU) -> set[PatchRef]:
    """Patches inside the annotated roi regions (the reference set for IoU)."""
    return {
        patch for patch in grid.iter_patches()
        if patch_coverage(patch, grid, ann.roi_polygons) >= tau
    }


def make_split(catalog: DatasetCatalog, train_frac: float, seed: int) -> SplitPlan:
    """Seeded shuffle split; the first round(train_frac * N) ids train."""
    if not 0 < train_frac < 1:
        raise DegenerateSplitError(f"train_frac must be in (0, 1), got {train_frac}")
    ids = catalog.ids()
    n_train = round_half_up(train_frac * len(ids))
    if n_train == 0 or n_train == len(ids):
        raise DegenerateSplitError(
            f"train_frac {train_frac} leaves an empty side for {len(ids)} slides"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    return SplitPlan(
        train_ids=tuple(shuffled[:n_train]),
        test_ids=tuple(shuffled[n_train:]),
        seed=seed,
    )


def subsample_training(plan: SplitPlan, fraction: float, repeats: int,
                       seed: int) -> list[SplitPlan]:
    """Repeated seeded subsamples of the training ids; test ids untouched.

    Each subsample keeps the parent plan's training order. Sizes use
    round-to-nearest, so a 0.6 fraction of 134 slides keeps 80.
    """
    if not 0 < fraction <= 1:
        raise InvalidInputError(f"fraction must be in (0, 1], got {fraction}")
    if repeats < 1:
        raise InvalidInputError(f"repeats must be >= 1, got {repeats}")
    size = round_half_up(fraction * len(plan.train_ids))
    if size == 0:
        raise DegenerateSplitError(
            f"fraction {fraction} of {len(plan.train_ids)} training slides is empty"
        )
    rng = np.random.default_rng(seed)
    plans = []
    for _ in range(repeats):
        chosen = np.sort(rng.permutation(len(plan.train_ids))[:size])
        plans.append(SplitPlan(
            train_ids=tuple(plan.train_ids[i] for i in chosen),
            test_ids=plan.test_ids,
            seed=seed,
        ))
    return plans


def write_labeled_patches(path: str | Path,
                          patches: Iterable[LabeledPatch]) -> None:
    """Dump labeled patches as JSON lines: {slide_id, row, col, label}."""
    with open(path, "w") as fh:
        for lp in patches:
            fh.write(json.dumps({
                "slide_id": lp.slide_id,
                "row": lp.patch.row,
                "col": lp.patch.col,
                "label": lp.label,
            }) + "\n")


def read_labeled_patches(path: str | Path) -> list[LabeledPatch]:
    patches = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            patches.append(LabeledPatch(
                slide_id=row["slide_id"],
                patch=PatchRef(int(row["row"]), int(row["col"])),
                label=row["label"],
            ))
    return patches


def plan_to_json(plan: SplitPlan) -> str:
    """Canonical serialization used by the determinism contract."""
    return json.dumps({
        "train_ids": list(plan.train_ids),
        "test_ids": list(plan.test_ids),
        "seed": plan.seed,
    }, sort_keys=True)
