"""Three-class patch scorer: handcrafted color features + softmax regression.

The built-in classifier is deliberately small: 14 color features per patch
(channel means, channel standard deviations, 8-bin grayscale histogram)
feeding a softmax layer trained with mini-batch SGD. Externally computed
scores can be imported from a JSON-lines file instead, so a heavier model
can replace the built-in one without touching anything downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateTrainingSetError,
    GeometryMismatchError,
    IncompleteScoresError,
    InvalidDistributionError,
    InvalidInputError,
    NumericalError,
)
from .geometry import PatchGrid, PatchRef, validate_image_grid

MELANOMA = "melanoma"
NEVUS = "nevus"
OTHER = "other"
CLASSES = (MELANOMA, NEVUS, OTHER)
CLASS_INDEX = {c: i for i, c in enumerate(CLASSES)}

FEATURE_DIM = 14
HIST_BINS = 8

# Probability sums may deviate by at most this much before a row of an
# imported scores file is rejected rather than renormalized.
SCORE_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ScoreTriple:
    p_melanoma: float
    p_nevus: float
    p_other: float

    def __post_init__(self) -> None:
        probs = (self.p_melanoma, self.p_nevus, self.p_other)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidDistributionError(f"probability out of [0, 1]: {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise InvalidDistributionError(f"probabilities sum to {sum(probs)!r}")

    def get(self, label: str) -> float:
        return (self.p_melanoma, self.p_nevus, self.p_other)[CLASS_INDEX[label]]

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_melanoma, self.p_nevus, self.p_other)


def argmax_class(triple: ScoreTriple) -> str:
    """Most probable class; exact ties resolve in CLASSES order."""
    probs = triple.as_tuple()
    best = 0
    for i in (1, 2):
        if probs[i] > probs[best]:
            best = i
    return CLASSES[best]


@dataclass
class ModelParams:
    weights: np.ndarray  # (3, FEATURE_DIM)
    biases: np.ndarray   # (3,)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.shape != (len(CLASSES), FEATURE_DIM):
            raise InvalidInputError(f"weights shape {self.weights.shape}")
        if self.biases.shape != (len(CLASSES),):
            raise InvalidInputError(f"biases shape {self.biases.shape}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise NumericalError("non-finite model parameters")

    @classmethod
    def zeros(cls) -> "ModelParams":
        return cls(np.zeros((len(CLASSES), FEATURE_DIM)), np.zeros(len(CLASSES)))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 150
    batch_size: int = 32
    seed: int = 0
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise InvalidInputError(f"invalid training config {self}")
        if self.l2 < 0:
            raise InvalidInputError("l2 must be >= 0")


def extract_features(patch_pixels: np.ndarray) -> np.ndarray:
    """14 color features of an RGB patch, each normalized to [0, 1].

    Layout: mean R, G, B; std R, G, B; 8-bin grayscale histogram. The gray
    value of a pixel is its channel mean; bin width is 32 intensity levels.
    """
    block = np.asarray(patch_pixels)
    if block.ndim != 3 or block.shape[2] != 3 or block.shape[0] != block.shape[1]:
        raise GeometryMismatchError(f"expected square (s, s, 3) block, got {block.shape}")
    flat = block.reshape(-1, 3).astype(float)
    means = flat.mean(axis=0) / 255.0
    stds = flat.std(axis=0) / 255.0
    gray = flat.mean(axis=1)
    bins = np.minimum((gray // 32).astype(int), HIST_BINS - 1)
    hist = np.bincount(bins, minlength=HIST_BINS) / len(flat)
    return np.concatenate([means, stds, hist])


def _logits(params: ModelParams, features: np.ndarray) -> np.ndarray:
    return params.weights @ features + params.biases


def _stable_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def softmax_forward(params: ModelParams, features: np.ndarray) -> ScoreTriple:
    """Class probabilities for one feature vector."""
    f = np.asarray(features, dtype=float)
    if f.shape != (FEATURE_DIM,):
        raise InvalidInputError(f"feature vector shape {f.shape}")
    z = _logits(params, f)
    if not np.isfinite(z).all():
        raise NumericalError(f"non-finite logits {z}")
    p = _stable_softmax(z)
    return ScoreTriple(float(p[0]), float(p[1]), float(p[2]))


def _as_xy(batch: Sequence[tuple[np.ndarray, str]]) -> tuple[np.ndarray, np.ndarray]:
    if not batch:
        raise InvalidInputError("empty batch")
    x = np.stack([np.asarray(f, dtype=float) for f, _ in batch])
    if x.shape[1] != FEATURE_DIM:
        raise InvalidInputError(f"feature matrix shape {x.shape}")
    y = np.array([CLASS_INDEX[label] for _, label in batch])
    return x, y


def _batch_probs(params: ModelParams, x: np.ndarray) -> np.ndarray:
    z = x @ params.weights.T + params.biases
    z -= z.max(axis=1, keepdims=True)
    exps = np.exp(z)
    return exps / exps.sum(axis=1, keepdims=True)


def loss_gradient(params: ModelParams,
                  batch: Sequence[tuple[np.ndarray, str]],
                  l2: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the regularized mean cross-entropy over a batch.

    Returns (weight gradient, bias gradient). The weight row of class c is
    the batch mean of (p_c - 1{label=c}) * features, plus l2 * weights.
    """
    x, y = _as_xy(batch)
    p = _batch_probs(params, x)
    p[np.arange(len(y)), y] -= 1.0
    grad_w = p.T @ x / len(y) + l2 * params.weights
    grad_b = p.mean(axis=0)
    return grad_w, grad_b


def regularized_loss(params: ModelParams,
                     batch: Sequence[tuple[np.ndarray, str]],
                     l2: float = 0.0) -> float:
    """Mean cross-entropy plus (l2 / 2) * ||weights||^2.

    Computed in log-sum-exp form, so probabilities that underflow to zero
    still yield a finite loss.
    """
    x, y = _as_xy(batch)
    z = x @ params.weights.T + params.biases
    zmax = z.max(axis=1)
    lse = zmax + np.log(np.exp(z - zmax[:, None]).sum(axis=1))
    ce = lse - z[np.arange(len(y)), y]
    return float(ce.mean() + 0.5 * l2 * (params.weights ** 2).sum())


def train(examples: Sequence[tuple[np.ndarray, str]],
          config: TrainConfig,
          history: list[float] | None = None) -> ModelParams:
    """Mini-batch SGD from zero-initialized parameters.

    Shuffling is reseeded from config.seed, so identical inputs give
    bit-identical parameters. When a `history` list is passed, the
    full-data loss after each epoch is appended to it.
    """
    x, y = _as_xy(examples)
    if len(set(y.tolist())) < 2:
        raise DegenerateTrainingSetError("training set contains a single class")
    labels = [CLASSES[i] for i in y]
    params = ModelParams.zeros()
    rng = np.random.default_rng(config.seed)
    n = len(y)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            batch = [(x[i], labels[i]) for i in idx]
            grad_w, grad_b = loss_gradient(params, batch, l2=config.l2)
            params = ModelParams(
                params.weights - config.learning_rate * grad_w,
                params.biases - config.learning_rate * grad_b,
            )
        if history is not None:
            history.append(regularized_loss(params, list(zip(x, labels)), l2=config.l2))
    return params


def score_slide(params: ModelParams, image: np.ndarray,
                grid: PatchGrid) -> dict[PatchRef, ScoreTriple]:
    """Score every patch of a slide image. One entry per grid patch."""
    validate_image_grid(image, grid)
    scores: dict[PatchRef, ScoreTriple] = {}
    for patch in grid.iter_patches():
        x0, y0, x1, y1 = grid.patch_rect(patch)
        features = extract_features(image[y0:y1, x0:x1])
        scores[patch] = softmax_forward(params, features)
    return scores


def save_model(params: ModelParams, path: str | Path) -> None:
    payload = {"weights": params.weights.tolist(), "biases": params.biases.tolist()}
    Path(path).write_text(json.dumps(payload, indent=2))


def load_model(path: str | Path) -> ModelParams:
    payload = json.loads(Path(path).read_text())
    return ModelParams(np.array(payload["weights"]), np.array(payload["biases"]))


def write_scores(path: str | Path, slide_id: str,
                 scores: Mapping[PatchRef, ScoreTriple], append: bool = False) -> None:
    """Write a score map in the JSON-lines exchange format."""
    mode = "a" if append else "w"
    with open(path, mode) as fh:
        for patch in sorted(scores):
            t = scores[patch]
            fh.write(json.dumps({
                "slide_id": slide_id,
                "row": patch.row,
                "col": patch.col,
                "p_mel": t.p_melanoma,
                "p_nev": t.p_nevus,
                "p_other": t.p_other,
            }) + "\n")


def import_scores(path: str | Path, grid: PatchGrid,
                  slide_id: str | None = None) -> dict[PatchRef, ScoreTriple]:
    """Load a JSON-lines scores file into a complete per-patch map.

    Rows are {slide_id, row, col, p_mel, p_nev, p_other}. Probability rows
    whose sum is within SCORE_SUM_TOLERANCE of 1 are renormalized; anything
    further off is rejected. The file must cover every patch of the grid
    exactly once (for the requested slide_id, if given).
    """
    scores: dict[PatchRef, ScoreTriple] = {}
    seen_ids = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            if slide_id is not None and row.get("slide_id") != slide_id:
                continue
            seen_ids.add(row.get("slide_id"))
            if len(seen_ids) > 1:
                raise InvalidInputError(
                    f"{path} mixes slides {sorted(seen_ids)}; pass slide_id"
                )
            patch = PatchRef(int(row["row"]), int(row["col"]))
            if not grid.contains(patch):
                raise InvalidInputError(f"{path}:{lineno}: {patch} outside grid")
            if patch in scores:
                raise InvalidInputError(f"{path}:{lineno}: duplicate entry for {patch}")
            probs = [float(row["p_mel"]), float(row["p_nev"]), float(row["p_other"])]
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise InvalidDistributionError(
                    f"{path}:{lineno}: probability out of range {probs}"
                )
            total = sum(probs)
            if abs(total - 1.0) > SCORE_SUM_TOLERANCE:
                raise InvalidDistributionError(
                    f"{path}:{lineno}: probabilities sum to {total}"
                )
            probs = [p / total for p in probs]
            scores[patch] = ScoreTriple(*probs)
    missing = grid.n - len(scores)
    if missing:
        for patch in grid.iter_patches():
            if patch not in scores:
                raise IncompleteScoresError(
                    f"{path} has no scores for {patch} "
                    f"({missing} of {grid.n} patches missing)"
                )
    return scores
