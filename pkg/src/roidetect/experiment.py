"""Experiment harness: repeated-split sweeps, evaluation, and detection.

run_experiment reproduces the robustness-table protocol on any catalog:
for every training fraction it draws repeated subsamples of the training
split, trains the built-in classifier per subsample, and evaluates patch
accuracy, slide accuracy and ROI IoU on the fixed test split, aggregating
each metric into a mean with a 95% CI. Outputs are a CSV table, a JSON
report embedding the full config, and one JSON-lines record per evaluated
slide. Everything is a pure function of (dataset bytes, config, seed).
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import (
    ModelParams,
    argmax_class,
    extract_features,
    import_scores,
    score_slide,
    softmax_forward,
    train,
)
from .config import RunConfig
from .dataset import (
    DatasetCatalog,
    SlideRecord,
    annotated_patches,
    extract_labeled_patches,
    load_annotations,
    load_catalog,
    load_slide_image,
    make_split,
    subsample_training,
)
from .detection import (
    EvalSummary,
    aggregate_ci,
    annotated_ratio,
    classify_slide,
    patch_accuracy,
    patch_iou,
    rank_patches,
    select_roi,
)
from .errors import InvalidInputError, NoClusterError
from .geometry import PatchGrid, grid_from_slide
from .optics import boundary_to_pixels, largest_cluster_boundary
from .render import render_boundary, render_heatmap, render_overlay, save_png
from .util import RNG_NAME

log = logging.getLogger(__name__)

METRICS = ("patch_acc", "slide_acc", "iou")

CSV_HEADER = "fraction,metric,mean,ci_low,ci_high,k"


@dataclass(frozen=True)
class ReportRow:
    fraction: float
    metric: str
    mean: float
    ci_low: float
    ci_high: float
    k: int


@dataclass
class SlideData:
    """Everything derived once per slide and reused across repeats."""

    record: SlideRecord
    grid: PatchGrid
    image: np.ndarray
    features: list[np.ndarray]          # row-major, one per patch
    truth: dict                          # PatchRef -> label (labeled patches)
    annotated: set                       # PatchRef set inside roi annotations
    beta: float


class SlideStore:
    """Lazy per-slide cache keyed by slide_id."""

    def __init__(self, catalog: DatasetCatalog, tau: float):
        self.catalog = catalog
        self.tau = tau
        self._cache: dict[str, SlideData] = {}

    def get(self, slide_id: str) -> SlideData:
        if slide_id not in self._cache:
            self._cache[slide_id] = self._load(self.catalog.by_id(slide_id))
        return self._cache[slide_id]

    def _load(self, record: SlideRecord) -> SlideData:
        image = load_slide_image(record)
        h, w = image.shape[:2]
        grid = grid_from_slide(w, h, record.patch_size)
        features = []
        for patch in grid.iter_patches():
            x0, y0, x1, y1 = grid.patch_rect(patch)
            features.append(extract_features(image[y0:y1, x0:x1]))
        ann = load_annotations(record.annotation_path)
        labeled = extract_labeled_patches(record, ann, grid, tau=self.tau)
        truth = {lp.patch: lp.label for lp in labeled}
        annotated = annotated_patches(ann, grid, tau=self.tau)
        beta = annotated_ratio(len(annotated), grid.n)
        return SlideData(record, grid, image, features, truth, annotated, beta)


def slide_scores(params: ModelParams, data: SlideData) -> dict:
    """Score a prepared slide through its cached per-patch features."""
    return {
        patch: softmax_forward(params, data.features[data.grid.linear_index(patch)])
        for patch in data.grid.iter_patches()
    }


def training_examples(store: SlideStore, slide_ids) -> list:
    examples = []
    for slide_id in slide_ids:
        data = store.get(slide_id)
        for patch in sorted(data.truth):
            features = data.features[data.grid.linear_index(patch)]
            examples.append((features, data.truth[patch]))
    return examples


def evaluate_slide(scores: dict, data: SlideData) -> dict:
    """One slide's result record: vote, selection, IoU."""
    pred = classify_slide(scores, slide_id=data.record.slide_id)
    ranked = rank_patches(scores, pred.predicted_label)
    selection = select_roi(ranked, data.grid.n, data.beta,
                           slide_id=data.record.slide_id)
    iou = patch_iou(data.annotated, selection.selected)
    record = {
        "slide_id": data.record.slide_id,
        "predicted_label": pred.predicted_label,
        "votes": pred.votes,
        "beta": data.beta,
        "k_selected": selection.k_selected,
        "iou": iou,
        "selected": [[p.row, p.col] for p in sorted(selection.selected)],
    }
    if not data.annotated and not selection.selected:
        record["iou_degenerate"] = True
    return record


def evaluate_test_set(params: ModelParams, store: SlideStore,
                      test_ids) -> tuple[EvalSummary, list[dict]]:
    """Pooled patch accuracy, slide accuracy and mean IoU over a test set."""
    matches = 0
    total = 0
    correct_slides = 0
    ious = []
    records = []
    for slide_id in test_ids:
        data = store.get(slide_id)
        scores = slide_scores(params, data)
        record = evaluate_slide(scores, data)
        if data.truth:
            predictions = {p: argmax_class(scores[p]) for p in data.truth}
            record["patch_accuracy"] = patch_accuracy(predictions, data.truth)
            matches += sum(
                1 for p, label in data.truth.items() if predictions[p] == label
            )
            total += len(data.truth)
        if record["predicted_label"] == data.record.slide_label:
            correct_slides += 1
        ious.append(record["iou"])
        records.append(record)
    summary = EvalSummary(
        patch_accuracy=matches / total if total else 0.0,
        slide_accuracy=correct_slides / len(test_ids),
        iou=float(np.mean(ious)) if ious else 0.0,
    )
    return summary, records


def run_experiment(config: RunConfig, out_dir: str | Path | None = None) -> dict:
    """Full sweep over config.fractions x config.repeats.

    Returns {"csv": ..., "json": ..., "records": ...} output paths.
    """
    out = Path(out_dir if out_dir is not None else config.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = load_catalog(config.paths.manifest)
    store = SlideStore(catalog, tau=config.tau)
    plan = make_split(catalog, config.train_frac, config.seed)

    rows: list[ReportRow] = []
    all_records: list[dict] = []
    for fraction in config.fractions:
        plans = subsample_training(plan, fraction, config.repeats, config.seed)
        per_metric: dict[str, list[float]] = {m: [] for m in METRICS}
        for repeat, sub in enumerate(plans):
            examples = training_examples(store, sub.train_ids)
            params = train(examples, config.classifier)
            summary, records = evaluate_test_set(params, store, plan.test_ids)
            per_metric["patch_acc"].append(summary.patch_accuracy)
            per_metric["slide_acc"].append(summary.slide_accuracy)
            per_metric["iou"].append(summary.iou)
            for record in records:
                all_records.append({"fraction": fraction, "repeat": repeat, **record})
            log.info(
                "fraction %.2f repeat %d: patch_acc=%.4f slide_acc=%.4f iou=%.4f",
                fraction, repeat, summary.patch_accuracy, summary.slide_accuracy,
                summary.iou,
            )
        for metric in METRICS:
            values = per_metric[metric]
            if len(values) >= 2:
                ci = aggregate_ci(values)
                rows.append(ReportRow(fraction, metric, ci.mean, ci.lower,
                                      ci.upper, ci.k))
            else:
                rows.append(ReportRow(fraction, metric, values[0], values[0],
                                      values[0], 1))

    csv_path = out / "report.csv"
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(
                f"{row.fraction:g},{row.metric},{row.mean:.6f},"
                f"{row.ci_low:.6f},{row.ci_high:.6f},{row.k}\n"
            )

    json_path = out / "report.json"
    report = {
        "rng": RNG_NAME,
        "config": config.to_dict(),
        "manifest": str(config.paths.manifest),
        "train_ids": list(plan.train_ids),
        "test_ids": list(plan.test_ids),
        "rows": [vars(row) for row in rows],
    }
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True))

    records_path = out / "records.jsonl"
    with open(records_path, "w") as fh:
        for record in all_records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    return {"csv": csv_path, "json": json_path, "records": records_path}


def detect(config: RunConfig, slide_id: str,
           model: ModelParams | None = None,
           scores_path: str | Path | None = None,
           beta: float | None = None,
           out_dir: str | Path | None = None,
           write_images: bool = True,
           write_record: bool = True) -> dict:
    """Score one slide, classify it, select its ROI, and render all maps.

    A scores file takes the place of a model when given. Without an
    annotation file on disk the selection budget must come from `beta`.
    """
    if model is None and scores_path is None:
        raise InvalidInputError("detect needs a trained model or a scores file")
    out = Path(out_dir if out_dir is not None else config.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = load_catalog(config.paths.manifest)
    record = catalog.by_id(slide_id)
    image = load_slide_image(record)
    h, w = image.shape[:2]
    grid = grid_from_slide(w, h, record.patch_size)

    if scores_path is not None:
        scores = import_scores(scores_path, grid, slide_id=slide_id)
    else:
        scores = score_slide(model, image, grid)

    pred = classify_slide(scores, slide_id=slide_id)
    ranked = rank_patches(scores, pred.predicted_label)

    annotated = None
    if Path(record.annotation_path).exists():
        ann = load_annotations(record.annotation_path)
        annotated = annotated_patches(ann, grid, tau=config.tau)
        slide_beta = annotated_ratio(len(annotated), grid.n)
    elif beta is not None:
        slide_beta = beta
    else:
        raise InvalidInputError(
            f"slide {slide_id!r} has no annotation file; pass --beta"
        )

    selection = select_roi(ranked, grid.n, slide_beta, slide_id=slide_id)
    result = {
        "slide_id": slide_id,
        "predicted_label": pred.predicted_label,
        "votes": pred.votes,
        "beta": slide_beta,
        "k_selected": selection.k_selected,
        "selected": [[p.row, p.col] for p in sorted(selection.selected)],
        "clustering": {
            "coordinates": "patch-index",
            "eps": config.optics.eps,
            "min_pts": config.optics.min_pts,
            "threshold": config.optics.threshold,
        },
    }
    if annotated is not None:
        result["iou"] = patch_iou(annotated, selection.selected)
        if not annotated and not selection.selected:
            result["iou_degenerate"] = True

    try:
        edges = largest_cluster_boundary(
            selection, grid, config.optics.params(), config.optics.threshold
        )
    except NoClusterError:
        edges = []
        result["no_cluster"] = True
    result["boundary_px"] = boundary_to_pixels(edges, grid.patch_size)

    if write_images:
        save_png(render_overlay(image, selection, grid),
                 out / f"{slide_id}.overlay.png")
        save_png(render_boundary(image, edges, grid),
                 out / f"{slide_id}.boundary.png")
        save_png(render_heatmap(image, scores, pred.predicted_label, grid),
                 out / f"{slide_id}.heatmap.png")

    if write_record:
        (out / f"{slide_id}.json").write_text(json.dumps(result, indent=2))
    return result


def evaluate_catalog(config: RunConfig,
                     model: ModelParams | None = None,
                     scores_path: str | Path | None = None,
                     out_dir: str | Path | None = None) -> dict:
    """Evaluate every slide of the manifest as a fixed test set."""
    if model is None and scores_path is None:
        raise InvalidInputError("evaluate needs a trained model or a scores file")
    out = Path(out_dir if out_dir is not None else config.paths.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = load_catalog(config.paths.manifest)
    store = SlideStore(catalog, tau=config.tau)

    matches = 0
    total = 0
    correct_slides = 0
    records = []
    for record in catalog.slides:
        data = store.get(record.slide_id)
        if scores_path is not None:
            scores = import_scores(scores_path, data.grid, slide_id=record.slide_id)
        else:
            scores = slide_scores(model, data)
        row = evaluate_slide(scores, data)
        if data.truth:
            predictions = {p: argmax_class(scores[p]) for p in data.truth}
            row["patch_accuracy"] = patch_accuracy(predictions, data.truth)
            matches += sum(
                1 for p, label in data.truth.items() if predictions[p] == label
            )
            total += len(data.truth)
        if row["predicted_label"] == record.slide_label:
            correct_slides += 1
        records.append(row)

    summary = EvalSummary(
        patch_accuracy=matches / total if total else 0.0,
        slide_accuracy=correct_slides / len(catalog.slides),
        iou=float(np.mean([r["iou"] for r in records])),
    )
    payload = {
        "summary": {
            **dataclasses.asdict(summary),
            "n_slides": len(catalog.slides),
            "rng": RNG_NAME,
        },
        "config": config.to_dict(),
        "per_slide": records,
    }
    (out / "evaluation.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    return payload
