import os
import sys

import numpy as np
import pytest
from scipy import ndimage

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from superpixels.imagecore import ColorSpace, GroundTruth, LabelMap, RasterImage

BLOCK_COLORS = [(200, 30, 30), (30, 200, 30), (30, 30, 200), (220, 220, 40)]


def block_image(size: int = 32):
    """Four uniform quadrants and their ground truth"""
    half = size // 2
    data = np.zeros((size, size, 3), dtype=np.uint8)
    truth = np.zeros((size, size), dtype=np.int64)
    for index, (y0, x0) in enumerate([(0, 0), (0, half), (half, 0), (half, half)]):
        data[y0:y0 + half, x0:x0 + half] = BLOCK_COLORS[index]
        truth[y0:y0 + half, x0:x0 + half] = index
    return RasterImage(data), GroundTruth(LabelMap(truth, 4))


def random_lab(rng, height: int, width: int) -> RasterImage:
    data = np.empty((height, width, 3))
    data[..., 0] = rng.uniform(0, 100, (height, width))
    data[..., 1:] = rng.uniform(-100, 100, (height, width, 2))
    return RasterImage(data, ColorSpace.LAB)


def random_rgb(rng, height: int, width: int) -> RasterImage:
    return RasterImage(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))


def voronoi_scene(rng, height: int, width: int, regions: int):
    """Piecewise-constant image over random Voronoi cells, with its ground truth"""
    sites = np.column_stack([rng.uniform(0, width, regions), rng.uniform(0, height, regions)])
    yy, xx = np.mgrid[0:height, 0:width]
    dist = (xx[..., None] - sites[:, 0]) ** 2 + (yy[..., None] - sites[:, 1]) ** 2
    truth = np.argmin(dist, axis=2)
    palette = rng.integers(0, 256, (regions, 3), dtype=np.uint8)
    return RasterImage(palette[truth]), GroundTruth(LabelMap.from_array(truth))


def component_count(labels: np.ndarray) -> int:
    total = 0
    for value in np.unique(labels):
        _, count = ndimage.label(labels == value)
        total += count
    return total


def assert_partition(labels: LabelMap, k: int):
    raw = np.asarray(labels.labels)
    assert raw.min() >= 0
    assert labels.num_labels <= k
    assert len(np.unique(raw)) == labels.num_labels
    assert component_count(raw) == labels.num_labels


def write_seg(path, labels: np.ndarray):
    h, w = labels.shape
    lines = ["format ascii cr", "image 0", "user 0", f"width {w}", f"height {h}",
             f"segments {len(np.unique(labels))}", "gray 0", "invert 0", "flipflop 0", "data"]
    for row in range(h):
        start = 0
        for col in range(1, w + 1):
            if col == w or labels[row, col] != labels[row, start]:
                lines.append(f"{labels[row, start]} {row} {start} {col - 1}")
                start = col
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
