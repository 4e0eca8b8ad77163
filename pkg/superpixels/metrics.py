"""
Metrics
Boundary recall, boundary precision and undersegmentation error against a
ground-truth partition, plus the cross-method improvement rate
"""

import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy import ndimage

from superpixels.errors import DimensionMismatchError, ParameterError, UndefinedRateError
from superpixels.imagecore import GroundTruth, LabelMap, boundary_mask

logger = logging.getLogger(__name__)


class SegmentationMetrics(BaseModel):
    boundary_recall: float = Field(ge=0.0, le=1.0)
    underseg_error: float = Field(ge=0.0)
    boundary_precision: float = Field(ge=0.0, le=1.0)
    num_superpixels: int = Field(ge=1)
    runtime_seconds: float = Field(default=0.0, ge=0.0)


def _check_shapes(gt: GroundTruth, labels: LabelMap):
    if gt.regions.shape != labels.shape:
        raise DimensionMismatchError(
            f"ground truth is {gt.width}x{gt.height}, segmentation is {labels.width}x{labels.height}"
        )


def boundary_pixels(labels: LabelMap) -> np.ndarray:
    """(x, y) coordinates of every boundary pixel, in row-major order"""
    ys, xs = np.nonzero(boundary_mask(labels))
    return np.stack([xs, ys], axis=1)


def fraction_within(targets: np.ndarray, reference: np.ndarray, tol: float) -> float:
    """Share of target pixels within Euclidean distance tol of a reference pixel"""
    targets = np.asarray(targets, dtype=bool)
    reference = np.asarray(reference, dtype=bool)
    total = int(targets.sum())
    if total == 0:
        return 1.0
    if not reference.any():
        return 0.0
    # distance from every pixel to the nearest reference pixel
    dist = ndimage.distance_transform_edt(~reference)
    return float(np.count_nonzero(dist[targets] <= tol)) / total


def boundary_recall(gt: GroundTruth, labels: LabelMap, tol: float = 2.0) -> float:
    _check_shapes(gt, labels)
    return fraction_within(boundary_mask(gt.regions), boundary_mask(labels), tol)


def boundary_precision(gt: GroundTruth, labels: LabelMap, tol: float = 2.0) -> float:
    _check_shapes(gt, labels)
    return fraction_within(boundary_mask(labels), boundary_mask(gt.regions), tol)


def underseg_error(gt: GroundTruth, labels: LabelMap, fraction: float = 0.05) -> float:
    """
    U = (sum over regions g_i of the total size of superpixels overlapping
    g_i by at least fraction * |g_i|, minus N) / N

    Every superpixel also counts for the region it overlaps most, so U >= 0
    even when a superpixel straddles regions below every threshold.
    """
    _check_shapes(gt, labels)
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"fraction must lie in (0, 1), got {fraction}")

    truth = np.asarray(gt.regions.labels).ravel()
    seg = np.asarray(labels.labels).ravel()
    n = truth.size
    m, k = gt.num_regions, labels.num_labels

    overlap = np.bincount(truth * k + seg, minlength=m * k).reshape(m, k)
    region_sizes = overlap.sum(axis=1)
    superpixel_sizes = overlap.sum(axis=0)

    thresholds = fraction * region_sizes
    counted = overlap >= thresholds[:, None]
    counted |= overlap == overlap.max(axis=0, keepdims=True)
    covered = int((counted * superpixel_sizes[None, :]).sum())
    return (covered - n) / n


def improvement_rate(ours: Sequence[float], baseline: Sequence[float]) -> float:
    """Mean relative reduction of ours against baseline, in percent"""
    ours = np.asarray(ours, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if ours.shape != baseline.shape or ours.size == 0:
        raise DimensionMismatchError(f"series lengths differ: {ours.size} vs {baseline.size}")
    if np.any(baseline == 0):
        raise UndefinedRateError("baseline is zero at some k, the relative rate is undefined")
    return float(np.mean((baseline - ours) / baseline) * 100.0)


def evaluate(gt: GroundTruth, labels: LabelMap, runtime_seconds: float = 0.0,
             tol: float = 2.0, fraction: float = 0.05,
             num_superpixels: Optional[int] = None) -> SegmentationMetrics:
    return SegmentationMetrics(
        boundary_recall=boundary_recall(gt, labels, tol),
        underseg_error=underseg_error(gt, labels, fraction),
        boundary_precision=boundary_precision(gt, labels, tol),
        num_superpixels=num_superpixels or labels.num_labels,
        runtime_seconds=runtime_seconds,
    )
