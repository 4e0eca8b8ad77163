"""
Seeding
Initial cluster-centre placement: the regular-grid strategy with gradient
perturbation, and the density-guided strategy that picks low-density pixels
and hedges around every pick
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from superpixels.errors import ParameterError
from superpixels.imagecore import ColorSpace, RasterImage, gradient_field
from superpixels.spectral import DensityMap

logger = logging.getLogger(__name__)

DEFAULT_TAU = 13.0 / 2.0

Seed = Tuple[int, int]


@dataclass(frozen=True)
class SeedSet:
    seeds: List[Seed]
    grid_step: float

    def __len__(self) -> int:
        return len(self.seeds)

    def to_rows(self) -> List[Tuple[int, int, int]]:
        return [(x, y, order) for order, (x, y) in enumerate(self.seeds)]


def grid_step(num_pixels: int, k: int) -> float:
    return math.sqrt(num_pixels / k)


def check_superpixel_count(num_pixels: int, k: int):
    if k < 4 or 4 * k > num_pixels:
        raise ParameterError(f"k={k} outside [4, {num_pixels // 4}] for a {num_pixels}-pixel image")


def _farthest_free_pixel(shape, taken: List[Seed]) -> Seed:
    """Pixel farthest from every taken seed; ties go to the smallest row-major index"""
    free = np.ones(shape, dtype=bool)
    for x, y in taken:
        free[y, x] = False
    dist = ndimage.distance_transform_edt(free)
    idx = int(np.argmax(dist))
    return idx % shape[1], idx // shape[1]


def _perturb_to_low_gradient(grad: np.ndarray, seeds: List[Seed]) -> List[Seed]:
    h, w = grad.shape
    occupancy = np.zeros((h, w), dtype=np.int64)
    for x, y in seeds:
        occupancy[y, x] += 1

    moved = []
    for x, y in seeds:
        cx = min(max(x, 1), w - 2)
        cy = min(max(y, 1), h - 2)
        best = (x, y)
        best_grad = grad[y, x]
        # row-major scan, strict improvement only: ties keep the earlier candidate
        for ny in range(cy - 1, cy + 2):
            for nx in range(cx - 1, cx + 2):
                if grad[ny, nx] >= best_grad or (nx, ny) == (x, y):
                    continue
                # the seed's own mark is not a neighbour
                occupancy[y, x] -= 1
                crowded = occupancy[max(0, ny - 1):ny + 2, max(0, nx - 1):nx + 2].any()
                occupancy[y, x] += 1
                if crowded:
                    continue
                best, best_grad = (nx, ny), grad[ny, nx]
        occupancy[y, x] -= 1
        occupancy[best[1], best[0]] += 1
        moved.append(best)
    return moved


def grid_seeds(img: RasterImage, k: int) -> SeedSet:
    if img.colorspace is not ColorSpace.LAB:
        raise ParameterError("grid seeding works on Lab images")
    h, w = img.shape
    check_superpixel_count(h * w, k)

    step = grid_step(h * w, k)
    cols = math.ceil(w / step)
    rows = math.ceil(h / step)
    xs = [min(int(math.floor(step / 2 + i * step)), w - 1) for i in range(cols)]
    ys = [min(int(math.floor(step / 2 + j * step)), h - 1) for j in range(rows)]
    seeds = [(x, y) for y in ys for x in xs]

    # ceil(W/S) * ceil(H/S) >= N / S^2 = k, so the grid is only ever cut back
    seeds = seeds[:k]

    seeds = _perturb_to_low_gradient(gradient_field(img), seeds)
    logger.info(f"Placed {len(seeds)} grid seeds with step {step:.2f}")
    return SeedSet(seeds, step)


def _smooth_disk(values: np.ndarray, disk: np.ndarray, tau: float):
    """
    In-place normalised Gaussian smoothing of values over the finite pixels
    of disk. Non-finite pixels neither contribute nor change.
    """
    support = disk & np.isfinite(values)
    if not support.any():
        return
    radius = max(1, math.ceil(3.0 * tau))
    weights = support.astype(np.float64)
    filled = np.where(support, values, 0.0)
    num = ndimage.gaussian_filter(filled, tau, mode="constant", cval=0.0, radius=radius)
    den = ndimage.gaussian_filter(weights, tau, mode="constant", cval=0.0, radius=radius)
    values[support] = num[support] / den[support]


def density_seeds(density: DensityMap, k: int, tau: float = DEFAULT_TAU) -> SeedSet:
    values = np.asarray(density.values, dtype=np.float64)
    h, w = values.shape
    check_superpixel_count(h * w, k)
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if not np.all(np.isfinite(values)) or values.min() <= 0:
        raise ParameterError("density map must be finite and strictly positive")

    work = values.copy()
    ratio = float(values.max() / values.min())
    boost = math.sqrt(ratio)
    reach = grid_step(h * w, k)
    span = int(math.ceil(reach))

    seeds: List[Seed] = []
    relaxed_from = None
    for _ in range(k):
        idx = int(np.argmin(work))
        y, x = divmod(idx, w)
        if not np.isfinite(work[y, x]):
            # every pixel is unselectable: place the rest as far from the others as possible
            if relaxed_from is None:
                relaxed_from = len(seeds)
                logger.warning(
                    f"Density map exhausted after {relaxed_from} of {k} seeds, "
                    f"placing the rest at the farthest free pixels"
                )
            seeds.append(_farthest_free_pixel((h, w), seeds))
            continue
        seeds.append((x, y))

        work[max(0, y - 1):y + 2, max(0, x - 1):x + 2] = np.inf

        y0, y1 = max(0, y - span), min(h, y + span + 1)
        x0, x1 = max(0, x - span), min(w, x + span + 1)
        window = work[y0:y1, x0:x1]
        yy, xx = np.mgrid[y0:y1, x0:x1]
        disk = (xx - x) ** 2 + (yy - y) ** 2 < reach * reach
        finite_disk = disk & np.isfinite(window)
        window[finite_disk] *= boost
        _smooth_disk(window, disk, tau)

    logger.info(f"Placed {len(seeds)} density seeds, r={ratio:.3f}, range={reach:.2f}")
    return SeedSet(seeds, reach)
