"""Command-line entry point: `roi-detect <command> --config <path> ...`

Exit codes: 0 success, 2 validation error, 3 IO error, 4 degenerate data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classifier import load_model, save_model, score_slide, train, write_scores
from .config import load_config
from .dataset import (
    extract_labeled_patches,
    load_annotations,
    load_catalog,
    load_slide_image,
    write_labeled_patches,
)
from .errors import DegenerateDataError, RoiDetectError, ValidationError
from .experiment import detect, evaluate_catalog, run_experiment, training_examples, SlideStore
from .geometry import grid_from_slide
from .synthetic import generate_synthetic
from .util import RNG_NAME

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roi-detect",
        description="Patch-based ROI detection pipeline for tumor slide images.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log per-cell progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override output directory")
        return p

    p = add("synth", "generate a seeded synthetic dataset")
    p = add("extract", "dump labeled patches for every slide in the manifest")
    p.add_argument("--manifest", help="override manifest path")

    p = add("train", "train the built-in classifier on the whole manifest")
    p.add_argument("--manifest", help="override manifest path")

    p = add("score", "score every slide with a trained model")
    p.add_argument("--manifest", help="override manifest path")
    p.add_argument("--model", help="model JSON file (default from config paths)")

    for name in ("detect", "visualize"):
        p = add(name, "run detection for one slide" if name == "detect"
                else "render the three maps for one slide")
        p.add_argument("--slide", required=True, help="slide_id from the manifest")
        p.add_argument("--manifest", help="override manifest path")
        p.add_argument("--model", help="model JSON file")
        p.add_argument("--scores", help="imported scores JSONL file")
        p.add_argument("--beta", type=float,
                       help="selection budget when the slide has no annotations")

    p = add("evaluate", "evaluate a model or scores file on the whole manifest")
    p.add_argument("--manifest", help="override manifest path")
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--scores", help="imported scores JSONL file")

    p = add("experiment", "repeated-split sweep over the configured fractions")
    p.add_argument("--manifest", help="override manifest path")
    return parser


def _config_from(args) -> "RunConfig":
    return load_config(
        getattr(args, "config", None),
        seed=getattr(args, "seed", None),
        out_dir=getattr(args, "out", None),
        manifest=getattr(args, "manifest", None),
    )


def _model_for(args, config):
    if getattr(args, "scores", None):
        return None
    path = getattr(args, "model", None) or config.paths.model
    return load_model(path)


def run(args) -> int:
    config = _config_from(args)
    out = Path(config.paths.out_dir)

    if args.command == "synth":
        # The dataset lands where the other commands will look for it,
        # unless --out points somewhere else explicitly.
        root = Path(args.out) if args.out else Path(config.paths.manifest).parent
        manifest = generate_synthetic(root, config.synth, config.seed)
        print(f"wrote {config.synth.n_slides} slides; manifest: {manifest}")
        return EXIT_OK

    if args.command == "extract":
        catalog = load_catalog(config.paths.manifest)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "labeled_patches.jsonl"
        labeled = []
        # dump rows are sorted by (slide_id, row-major patch index)
        for record in sorted(catalog.slides, key=lambda r: r.slide_id):
            image = load_slide_image(record)
            h, w = image.shape[:2]
            grid = grid_from_slide(w, h, record.patch_size)
            ann = load_annotations(record.annotation_path)
            labeled.extend(extract_labeled_patches(record, ann, grid, tau=config.tau))
        write_labeled_patches(path, labeled)
        print(f"wrote {len(labeled)} labeled patches to {path}")
        return EXIT_OK

    if args.command == "train":
        catalog = load_catalog(config.paths.manifest)
        store = SlideStore(catalog, tau=config.tau)
        examples = training_examples(store, catalog.ids())
        params = train(examples, config.classifier)
        model_path = Path(config.paths.model)
        model_path.parent.mkdir(parents=True, exist_ok=True)
        save_model(params, model_path)
        meta = {
            "examples": len(examples),
            "slides": len(catalog.slides),
            "rng": RNG_NAME,
            "config": config.to_dict(),
        }
        model_path.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True)
        )
        print(f"trained on {len(examples)} patches from "
              f"{len(catalog.slides)} slides; model: {model_path}")
        return EXIT_OK

    if args.command == "score":
        catalog = load_catalog(config.paths.manifest)
        params = _model_for(args, config)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "scores.jsonl"
        for i, record in enumerate(catalog.slides):
            image = load_slide_image(record)
            h, w = image.shape[:2]
            grid = grid_from_slide(w, h, record.patch_size)
            scores = score_slide(params, image, grid)
            write_scores(path, record.slide_id, scores, append=i > 0)
        print(f"wrote scores for {len(catalog.slides)} slides to {path}")
        return EXIT_OK

    if args.command in ("detect", "visualize"):
        model = _model_for(args, config)
        result = detect(
            config,
            args.slide,
            model=model,
            scores_path=args.scores,
            beta=args.beta,
            out_dir=out,
            write_record=args.command == "detect",
        )
        line = f"{result['slide_id']}: {result['predicted_label']}"
        if "iou" in result:
            line += f" iou={result['iou']:.4f}"
        print(line + f" (maps in {out})")
        return EXIT_OK

    if args.command == "evaluate":
        model = _model_for(args, config)
        payload = evaluate_catalog(
            config, model=model, scores_path=args.scores, out_dir=out
        )
        s = payload["summary"]
        print(
            f"patch_acc={s['patch_accuracy']:.4f} "
            f"slide_acc={s['slide_accuracy']:.4f} iou={s['iou']:.4f} "
            f"({s['n_slides']} slides; report in {out})"
        )
        return EXIT_OK

    if args.command == "experiment":
        paths = run_experiment(config, out_dir=out)
        print(f"report: {paths['csv']}")
        return EXIT_OK

    raise ValidationError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except (ValidationError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RoiDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
