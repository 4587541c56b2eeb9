"""Patch-based region-of-interest detection for melanocytic tumor slides.

The pipeline tiles a slide raster into fixed-size patches, scores each
patch with a three-class classifier (melanoma / nevus / other), classifies
the slide by majority vote over tumor-class patches, selects the top
ranked patches under the slide's annotated-ratio budget, and evaluates the
selection with patch-set IoU. OPTICS clustering of the selected patches
yields the boundary map; overlay and heatmap renders round out the three
visualization outputs.
"""

from .classifier import (
    CLASSES,
    MELANOMA,
    NEVUS,
    OTHER,
    ModelParams,
    ScoreTriple,
    TrainConfig,
    argmax_class,
    extract_features,
    import_scores,
    load_model,
    loss_gradient,
    save_model,
    score_slide,
    softmax_forward,
    train,
    write_scores,
)
from .config import OpticsConfig, PathsConfig, RunConfig, load_config
from .dataset import (
    AnnotationSet,
    DatasetCatalog,
    LabeledPatch,
    SlideRecord,
    SplitPlan,
    annotated_patches,
    extract_labeled_patches,
    load_annotations,
    load_catalog,
    load_slide_image,
    make_split,
    subsample_training,
)
from .detection import (
    ConfidenceInterval,
    EvalSummary,
    RoiSelection,
    SlidePrediction,
    aggregate_ci,
    annotated_ratio,
    classify_slide,
    patch_accuracy,
    patch_iou,
    rank_patches,
    select_roi,
)
from .experiment import detect, evaluate_catalog, run_experiment
from .geometry import (
    PatchGrid,
    PatchRef,
    Point,
    Polygon,
    grid_from_slide,
    patch_coverage,
    point_in_polygon,
)
from .optics import (
    NOISE,
    UNDEFINED,
    ClusterAssignment,
    OpticsParams,
    ReachabilityOrdering,
    core_distance,
    extract_clusters,
    largest_cluster_boundary,
    optics_order,
)
from .render import render_boundary, render_heatmap, render_overlay
from .synthetic import ColorModel, SynthConfig, generate_synthetic

__version__ = "0.1.0"
