"""Slide-level classification, ROI selection and evaluation metrics.

A slide is classified by majority vote over its patches: every patch votes
for its argmax class, votes for the background class are discarded, and the
tumor class with more votes wins. ROI selection takes the top n*beta
patches of the per-class ranking, where beta is the annotated ratio of the
slide. All functions are pure and iterate score maps in a canonical
(row, col) order so that results never depend on dict insertion order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .classifier import CLASSES, MELANOMA, NEVUS, OTHER, ScoreTriple, argmax_class
from .errors import (
    EmptyInputError,
    InsufficientRepeatsError,
    InvalidCountsError,
    InvalidInputError,
    MissingPredictionError,
)
from .geometry import PatchRef
from .util import round_half_up

# Half-width multiplier of a normal-approximation 95% confidence interval.
Z_95 = 1.96


@dataclass(frozen=True)
class SlidePrediction:
    slide_id: str
    predicted_label: str
    votes_melanoma: int
    votes_nevus: int
    votes_other: int

    @property
    def votes(self) -> dict[str, int]:
        return {
            MELANOMA: self.votes_melanoma,
            NEVUS: self.votes_nevus,
            OTHER: self.votes_other,
        }


@dataclass(frozen=True)
class RoiSelection:
    slide_id: str
    ranked: tuple[PatchRef, ...]
    selected: frozenset[PatchRef]
    beta: float
    k_selected: int


@dataclass(frozen=True)
class EvalSummary:
    patch_accuracy: float
    slide_accuracy: float
    iou: float


@dataclass(frozen=True)
class ConfidenceInterval:
    mean: float
    lower: float
    upper: float
    k: int


def _sorted_items(scores: Mapping[PatchRef, ScoreTriple]):
    return sorted(scores.items(), key=lambda kv: (kv[0].row, kv[0].col))


def classify_slide(scores: Mapping[PatchRef, ScoreTriple],
                   slide_id: str = "") -> SlidePrediction:
    """Majority vote over patch argmax classes, ignoring background votes.

    Ties between the tumor classes are broken by the larger class
    probability summed over all patches, then in favor of melanoma. If no
    patch votes for either tumor class, the mean melanoma and nevus
    probabilities over all patches are compared instead.
    """
    if not scores:
        raise EmptyInputError("empty score map")
    votes = {c: 0 for c in CLASSES}
    sum_mel = 0.0
    sum_nev = 0.0
    for _, triple in _sorted_items(scores):
        votes[argmax_class(triple)] += 1
        sum_mel += triple.p_melanoma
        sum_nev += triple.p_nevus

    if votes[MELANOMA] > votes[NEVUS]:
        label = MELANOMA
    elif votes[NEVUS] > votes[MELANOMA]:
        label = NEVUS
    else:
        # Covers both the exact vote tie and the all-background fallback;
        # in either case the summed (equivalently mean) probabilities decide.
        label = MELANOMA if sum_mel >= sum_nev else NEVUS
    return SlidePrediction(
        slide_id=slide_id,
        predicted_label=label,
        votes_melanoma=votes[MELANOMA],
        votes_nevus=votes[NEVUS],
        votes_other=votes[OTHER],
    )


def rank_patches(scores: Mapping[PatchRef, ScoreTriple],
                 target: str) -> list[PatchRef]:
    """All patches sorted by descending target-class probability.

    Background-predicted patches participate like any other. Ties fall back
    to ascending row-major position, making the order total and
    deterministic.
    """
    if not scores:
        raise EmptyInputError("empty score map")
    if target not in (MELANOMA, NEVUS):
        raise InvalidInputError(f"ranking target must be a tumor class, got {target!r}")
    return sorted(
        scores,
        key=lambda p: (-scores[p].get(target), p.row, p.col),
    )


def annotated_ratio(a_p: int, c_p: int) -> float:
    """Annotated patches over total patches."""
    if c_p == 0:
        raise ZeroDivisionError("slide has zero patches")
    if c_p < 0 or a_p < 0 or a_p > c_p:
        raise InvalidCountsError(f"invalid counts a_p={a_p}, c_p={c_p}")
    return a_p / c_p


def select_roi(ranked: Sequence[PatchRef], n: int, beta: float,
               slide_id: str = "") -> RoiSelection:
    """Select the top round(n*beta) patches of a full ranking.

    Rounding is half away from zero, which keeps the selected fraction as
    close to beta as possible; beta = 0 selects nothing.
    """
    if len(ranked) != n:
        raise InvalidInputError(f"ranking has {len(ranked)} entries, expected n={n}")
    if not 0.0 <= beta <= 1.0:
        raise InvalidInputError(f"beta must be in [0, 1], got {beta}")
    k = round_half_up(n * beta)
    k = min(k, n)  # guard against beta=1.0 float overshoot
    return RoiSelection(
        slide_id=slide_id,
        ranked=tuple(ranked),
        selected=frozenset(ranked[:k]),
        beta=beta,
        k_selected=k,
    )


def patch_iou(annotated: Iterable[PatchRef], predicted: Iterable[PatchRef]) -> float:
    """Intersection over union of two patch sets; 0.0 when both are empty."""
    a = set(annotated)
    b = set(predicted)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def patch_accuracy(predictions: Mapping[PatchRef, str],
                   truth: Mapping[PatchRef, str]) -> float:
    """Fraction of truth patches whose predicted label matches."""
    if not truth:
        raise EmptyInputError("empty truth map")
    correct = 0
    for patch, label in truth.items():
        if patch not in predictions:
            raise MissingPredictionError(f"no prediction for {patch}")
        if predictions[patch] == label:
            correct += 1
    return correct / len(truth)


def aggregate_ci(values: Sequence[float]) -> ConfidenceInterval:
    """Mean with a normal-approximation 95% CI over repeated runs."""
    k = len(values)
    if k < 2:
        raise InsufficientRepeatsError(f"need at least 2 values, got {k}")
    mean = math.fsum(values) / k
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    half = Z_95 * math.sqrt(var) / math.sqrt(k)
    return ConfidenceInterval(mean=mean, lower=mean - half, upper=mean + half, k=k)
