"""
Clustering
Restricted-search Lloyd iteration over (x, y, l, a, b): distance metric,
per-centre search windows scaled by the density map, centre updates,
orphan filling and connectivity enforcement
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from skimage import measure

from superpixels.config import ClusteringParams, SeedingParams
from superpixels.errors import DimensionMismatchError, ParameterError
from superpixels.imagecore import ColorSpace, LabelMap, RasterImage, srgb_to_lab
from superpixels.seeding import SeedSet, density_seeds, grid_seeds, grid_step
from superpixels.spectral import DensityMap

logger = logging.getLogger(__name__)

UNASSIGNED = -1


@dataclass(frozen=True)
class ClusterCenter:
    x: float
    y: float
    l: float
    a: float
    b: float
    id: int

    def features(self) -> Tuple[float, float, float, float, float]:
        return self.x, self.y, self.l, self.a, self.b


@dataclass
class ClusteringState:
    # one row per centre: x, y, l, a, b
    centers: np.ndarray
    labels: np.ndarray
    distances: np.ndarray
    residual_error: float = math.inf
    iteration: int = 0

    @classmethod
    def from_seeds(cls, img: RasterImage, seeds: Sequence[Tuple[int, int]]) -> "ClusteringState":
        data = img.data
        centers = np.array(
            [(float(x), float(y), *(float(v) for v in data[y, x])) for x, y in seeds],
            dtype=np.float64,
        ).reshape(-1, 5)
        return cls(
            centers=centers,
            labels=np.full(img.shape, UNASSIGNED, dtype=np.int64),
            distances=np.full(img.shape, np.inf),
        )

    @property
    def cluster_centers(self) -> List[ClusterCenter]:
        return [ClusterCenter(*row, id=i) for i, row in enumerate(self.centers.tolist())]


@dataclass
class SegmentationResult:
    labels: LabelMap
    seeds: SeedSet
    iterations: int
    residual_error: float
    runtime_seconds: float
    density: Optional[DensityMap] = None
    centers: List[ClusterCenter] = field(default_factory=list)


def distance(pixel, center, step: float, m: float):
    """
    d = sqrt(d_c^2 + (d_s / S)^2 m^2) with d_c the Lab distance and d_s the
    spatial distance. pixel is (x, y, l, a, b), scalars or broadcastable arrays;
    center is a ClusterCenter or an (x, y, l, a, b) sequence.
    """
    if isinstance(center, ClusterCenter):
        center = center.features()
    px, py, pl, pa, pb = pixel
    cx, cy, cl, ca, cb = center
    dl = pl - cl
    da = pa - ca
    db = pb - cb
    dx = px - cx
    dy = py - cy
    color = dl * dl + da * da + db * db
    spatial = dx * dx + dy * dy
    return np.sqrt(color + spatial / (step * step) * (m * m))


def search_radius(center: np.ndarray, step: float, method: str,
                  density: Optional[DensityMap]) -> float:
    if method == "dsr":
        return max(2.0 * step * density.at(center[0], center[1]), step)
    return 2.0 * step


def assign(state: ClusteringState, img: RasterImage, density: Optional[DensityMap],
           step: float, m: float, method: str = "slic"):
    """
    One assignment pass. Each centre scores the pixels inside the square of
    half-width R_i around it; a pixel keeps the centre with the smallest
    (distance, id). Pixels no window reaches stay UNASSIGNED.
    """
    if method == "dsr" and density is None:
        raise ParameterError("dsr assignment needs a density map")
    h, w = img.shape
    lab = img.data
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)

    state.labels.fill(UNASSIGNED)
    state.distances.fill(np.inf)

    for i, center in enumerate(state.centers):
        radius = search_radius(center, step, method, density)
        x0 = max(0, math.ceil(center[0] - radius))
        x1 = min(w - 1, math.floor(center[0] + radius))
        y0 = max(0, math.ceil(center[1] - radius))
        y1 = min(h - 1, math.floor(center[1] + radius))
        if x0 > x1 or y0 > y1:
            continue

        window = lab[y0:y1 + 1, x0:x1 + 1]
        pixel = (
            xs[None, x0:x1 + 1],
            ys[y0:y1 + 1, None],
            window[..., 0],
            window[..., 1],
            window[..., 2],
        )
        d = distance(pixel, center, step, m)
        best = state.distances[y0:y1 + 1, x0:x1 + 1]
        closer = d < best
        best[closer] = d[closer]
        state.labels[y0:y1 + 1, x0:x1 + 1][closer] = i


def update_centers(state: ClusteringState, img: RasterImage) -> float:
    """Move each centre to the mean of its pixels; returns the mean spatial shift"""
    k = len(state.centers)
    h, w = img.shape
    assigned = state.labels >= 0
    owners = state.labels[assigned]
    counts = np.bincount(owners, minlength=k).astype(np.float64)

    yy, xx = np.indices((h, w), dtype=np.float64)
    features = (xx, yy, img.data[..., 0], img.data[..., 1], img.data[..., 2])
    sums = np.stack(
        [np.bincount(owners, weights=f[assigned], minlength=k) for f in features],
        axis=1,
    )

    updated = state.centers.copy()
    populated = counts > 0
    updated[populated] = sums[populated] / counts[populated, None]

    shift = np.hypot(updated[:, 0] - state.centers[:, 0], updated[:, 1] - state.centers[:, 1])
    state.centers = updated
    state.residual_error = float(shift.mean()) if k else 0.0
    return state.residual_error


def resolve_orphans(labels: np.ndarray) -> np.ndarray:
    """
    Fill UNASSIGNED pixels by breadth-first growth from assigned ones over
    4-neighbours. Each wave takes the smallest label among its neighbours,
    so equidistant sources resolve to the smallest label.
    """
    out = np.array(labels, dtype=np.int64)
    missing = out < 0
    if not missing.any():
        return out
    if missing.all():
        raise ParameterError("no assigned pixel to grow orphans from")

    sentinel = np.iinfo(np.int64).max
    orphans = int(missing.sum())
    waves = 0
    while missing.any():
        source = np.where(missing, sentinel, out)
        best = np.full_like(out, sentinel)
        np.minimum(best[1:, :], source[:-1, :], out=best[1:, :])
        np.minimum(best[:-1, :], source[1:, :], out=best[:-1, :])
        np.minimum(best[:, 1:], source[:, :-1], out=best[:, 1:])
        np.minimum(best[:, :-1], source[:, 1:], out=best[:, :-1])
        reached = missing & (best != sentinel)
        out[reached] = best[reached]
        missing &= ~reached
        waves += 1

    logger.debug(f"Resolved {orphans} orphan pixels in {waves} waves")
    return out


def _component_adjacency(components: np.ndarray) -> Dict[int, Dict[int, int]]:
    """Shared 4-connected boundary length between every pair of touching components"""
    pairs = []
    for a, b in ((components[:, :-1], components[:, 1:]), (components[:-1, :], components[1:, :])):
        differ = a != b
        pairs.append(np.stack([a[differ], b[differ]], axis=1))
    pairs = np.concatenate(pairs)
    pairs = np.concatenate([pairs, pairs[:, ::-1]])

    adjacency: Dict[int, Dict[int, int]] = {}
    if len(pairs):
        unique, counts = np.unique(pairs, axis=0, return_counts=True)
        for (a, b), count in zip(unique.tolist(), counts.tolist()):
            adjacency.setdefault(a, {})[b] = count
    return adjacency


def enforce_connectivity(labels: LabelMap, min_size: int) -> LabelMap:
    """
    Keep, per label, its largest 4-connected component when it has at least
    min_size pixels. Every other component is merged, smallest first, into
    the touching region with the longest shared boundary (ties: smallest
    label, then earliest component). Each surviving label is one region.
    """
    raw = np.asarray(labels.labels)
    components = measure.label(raw + 1, background=0, connectivity=1) - 1
    num_components = int(components.max()) + 1
    flat = components.ravel()

    sizes = np.bincount(flat, minlength=num_components)
    order = np.full(num_components, flat.size)
    np.minimum.at(order, flat, np.arange(flat.size))
    component_label = np.empty(num_components, dtype=np.int64)
    component_label[flat] = raw.ravel()

    keepers = set()
    best_for_label: Dict[int, int] = {}
    for c in sorted(range(num_components), key=lambda c: (-sizes[c], order[c])):
        lbl = int(component_label[c])
        if lbl not in best_for_label:
            best_for_label[lbl] = c
            if sizes[c] >= min_size:
                keepers.add(c)

    if len(keepers) == num_components:
        return labels

    adjacency = _component_adjacency(components)
    parent = np.arange(num_components)
    size = sizes.astype(np.int64)
    pending = sorted((c for c in range(num_components) if c not in keepers),
                     key=lambda c: (sizes[c], order[c]))

    merges = 0
    for c in pending:
        neighbours = adjacency.get(c, {})
        if not neighbours:
            continue
        target = min(
            neighbours,
            key=lambda t: (-neighbours[t], component_label[t], order[t]),
        )
        parent[c] = target
        size[target] += size[c]
        target_edges = adjacency.setdefault(target, {})
        target_edges.pop(c, None)
        for other, count in neighbours.items():
            if other == target:
                continue
            target_edges[other] = target_edges.get(other, 0) + count
            other_edges = adjacency[other]
            other_edges.pop(c, None)
            other_edges[target] = other_edges.get(target, 0) + count
        del adjacency[c]
        merges += 1

    # each merged component points at a region that absorbed it; follow to the root
    root = parent.copy()
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            break
        root = nxt

    logger.debug(f"Connectivity: {num_components} components, {merges} merged")
    return LabelMap.from_array(component_label[root][components])


class SuperpixelSegmenter:
    """Runs one slic or dsr segmentation end to end"""

    def __init__(self, params: ClusteringParams, seeding: Optional[SeedingParams] = None):
        self.params = params
        self.seeding = seeding or SeedingParams()

    def _seeds(self, lab: RasterImage, density: Optional[DensityMap],
               seeds: Optional[Sequence[Tuple[int, int]]]) -> SeedSet:
        k = self.params.k
        if seeds is not None:
            h, w = lab.shape
            checked = [(int(x), int(y)) for x, y in seeds]
            for x, y in checked:
                if not (0 <= x < w and 0 <= y < h):
                    raise ParameterError(f"seed ({x}, {y}) lies outside the {w}x{h} image")
            return SeedSet(checked, grid_step(lab.num_pixels, len(checked)))
        if self.params.method == "dsr":
            return density_seeds(density, k, self.seeding.tau)
        return grid_seeds(lab, k)

    def run(self, img: RasterImage, density: Optional[DensityMap] = None,
            seeds: Optional[Sequence[Tuple[int, int]]] = None) -> SegmentationResult:
        params = self.params
        if params.method == "dsr":
            if density is None:
                raise ParameterError("method dsr requires a density map")
            if density.shape != img.shape:
                raise DimensionMismatchError(f"density {density.shape} does not match image {img.shape}")
        elif density is not None:
            logger.debug("Ignoring density map for method slic")
            density = None

        started = time.perf_counter()
        lab = img if img.colorspace is ColorSpace.LAB else srgb_to_lab(img)
        seed_set = self._seeds(lab, density, seeds)
        k = len(seed_set)
        step = grid_step(lab.num_pixels, k)

        state = ClusteringState.from_seeds(lab, seed_set.seeds)
        while state.iteration < params.max_iters:
            assign(state, lab, density, step, params.m, params.method)
            update_centers(state, lab)
            state.iteration += 1
            logger.debug(f"Iteration {state.iteration}: residual error {state.residual_error:.4f}")
            if state.residual_error < params.convergence_tol:
                break

        filled = LabelMap.from_array(resolve_orphans(state.labels))
        final = enforce_connectivity(filled, lab.num_pixels // (4 * k))
        elapsed = time.perf_counter() - started

        logger.info(
            f"{params.method} segmentation: k={k} -> {final.num_labels} superpixels, "
            f"{state.iteration} iterations, residual {state.residual_error:.4f}, {elapsed:.3f}s"
        )
        return SegmentationResult(
            labels=final,
            seeds=seed_set,
            iterations=state.iteration,
            residual_error=state.residual_error,
            runtime_seconds=elapsed,
            density=density,
            centers=state.cluster_centers,
        )


def segment(img: RasterImage, params: ClusteringParams, density: Optional[DensityMap] = None,
            seeds: Optional[Sequence[Tuple[int, int]]] = None,
            seeding: Optional[SeedingParams] = None) -> LabelMap:
    return SuperpixelSegmenter(params, seeding).run(img, density, seeds).labels
