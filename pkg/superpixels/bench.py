"""
Benchmark Harness
Pairs images with ground truth, runs every (image, method, k) cell on a
worker pool and writes CSV and JSON reports
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from superpixels import __version__
from superpixels.clustering import SuperpixelSegmenter
from superpixels.config import BenchConfig
from superpixels.errors import SuperpixelError, UndefinedRateError
from superpixels.imagecore import GroundTruth, RasterImage, load_image, read_ground_truth
from superpixels.metrics import evaluate, improvement_rate
from superpixels.spectral import compute_density

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm")
GT_SUFFIXES = (".seg", ".png")
CSV_COLUMNS = ["image", "method", "k", "k_final", "ue", "br", "bp", "runtime_s"]


class BenchCell(BaseModel):
    image: str
    method: str
    k: int
    k_final: Optional[int] = None
    ue: Optional[float] = None
    br: Optional[float] = None
    bp: Optional[float] = None
    runtime_s: Optional[float] = None
    skip_reason: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.skip_reason is None


class BenchAggregate(BaseModel):
    method: str
    k: int
    images: int
    mean_ue: float
    mean_br: float
    mean_bp: float
    mean_runtime_s: float


class BenchReport(BaseModel):
    version: str
    config: dict
    cells: List[BenchCell]
    aggregates: List[BenchAggregate]
    improvement: Dict[str, Optional[float]]
    skipped_images: Dict[str, str]


@dataclass(frozen=True)
class Sample:
    name: str
    image: RasterImage
    truth: GroundTruth


def pair_dataset(image_dir: Path, gt_dir: Path) -> Tuple[List[Tuple[str, Path, Path]], Dict[str, str]]:
    """Match images to ground truth by file stem; the first gt suffix found wins"""
    pairs = []
    skipped = {}
    images = sorted(p for p in Path(image_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    for image_path in images:
        gt_path = next(
            (Path(gt_dir) / f"{image_path.stem}{suffix}" for suffix in GT_SUFFIXES
             if (Path(gt_dir) / f"{image_path.stem}{suffix}").exists()),
            None,
        )
        if gt_path is None:
            logger.warning(f"No ground truth for {image_path.name}, skipping")
            skipped[image_path.name] = "no matching ground truth"
            continue
        pairs.append((image_path.name, image_path, gt_path))
    return pairs, skipped


class BenchRunner:
    def __init__(self, config: BenchConfig):
        self.config = config

    def load_samples(self) -> Tuple[List[Sample], Dict[str, str]]:
        pairs, skipped = pair_dataset(self.config.image_dir, self.config.gt_dir)
        samples = []
        for name, image_path, gt_path in pairs:
            try:
                image = load_image(image_path)
                truth = read_ground_truth(gt_path)
            except (SuperpixelError, OSError) as e:
                logger.warning(f"Skipping {name}: {e}")
                skipped[name] = str(e)
                continue
            if image.shape != truth.regions.shape:
                reason = f"image is {image.width}x{image.height}, ground truth is {truth.width}x{truth.height}"
                logger.warning(f"Skipping {name}: {reason}")
                skipped[name] = reason
                continue
            samples.append(Sample(name, image, truth))
        return samples, skipped

    def run_cell(self, sample: Sample, method: str, k: int) -> BenchCell:
        n = sample.image.num_pixels
        if k < 4 or 4 * k > n:
            reason = f"k={k} outside [4, {n // 4}]"
            logger.warning(f"Skipping {sample.name}/{method}/k={k}: {reason}")
            return BenchCell(image=sample.name, method=method, k=k, skip_reason=reason)

        segmenter = SuperpixelSegmenter(self.config.clustering_params(k, method), self.config.seeding)
        try:
            # density time counts towards the dsr runtime; image I/O does not
            started = time.perf_counter()
            density = compute_density(sample.image, self.config.spectral) if method == "dsr" else None
            density_seconds = time.perf_counter() - started
            result = segmenter.run(sample.image, density)
            scores = evaluate(sample.truth, result.labels, density_seconds + result.runtime_seconds)
        except (SuperpixelError, ValidationError) as e:
            logger.error(f"Cell {sample.name}/{method}/k={k} failed: {e}")
            return BenchCell(image=sample.name, method=method, k=k, skip_reason=str(e))

        return BenchCell(
            image=sample.name,
            method=method,
            k=k,
            k_final=scores.num_superpixels,
            ue=scores.underseg_error,
            br=scores.boundary_recall,
            bp=scores.boundary_precision,
            runtime_s=scores.runtime_seconds,
        )

    def run(self) -> BenchReport:
        samples, skipped = self.load_samples()
        if not samples:
            raise SuperpixelError(f"no image in {self.config.image_dir} pairs with ground truth in {self.config.gt_dir}")

        tasks = [
            (sample, method, k)
            for sample in samples
            for method in self.config.methods
            for k in self.config.k_values
        ]
        workers = max(1, self.config.parallelism)
        logger.info(f"Running {len(tasks)} cells on {len(samples)} images with {workers} workers")

        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(lambda task: self.run_cell(*task), tasks))
        cells.sort(key=lambda c: (c.image, c.method, c.k))

        aggregates = aggregate(cells)
        return BenchReport(
            version=__version__,
            config=self.config.model_dump(mode="json"),
            cells=cells,
            aggregates=aggregates,
            improvement=improvements(aggregates),
            skipped_images=skipped,
        )


def aggregate(cells: List[BenchCell]) -> List[BenchAggregate]:
    groups: Dict[Tuple[str, int], List[BenchCell]] = {}
    for cell in cells:
        if cell.completed:
            groups.setdefault((cell.method, cell.k), []).append(cell)

    rows = []
    for (method, k), group in sorted(groups.items()):
        rows.append(BenchAggregate(
            method=method,
            k=k,
            images=len(group),
            mean_ue=float(np.mean([c.ue for c in group])),
            mean_br=float(np.mean([c.br for c in group])),
            mean_bp=float(np.mean([c.bp for c in group])),
            mean_runtime_s=float(np.mean([c.runtime_s for c in group])),
        ))
    return rows


def improvements(aggregates: List[BenchAggregate]) -> Dict[str, Optional[float]]:
    """
    improvement_rate of dsr over slic on UE and on the BR/BP deficits
    (1 - BR, 1 - BP), over the k values both methods completed
    """
    by_method = {(a.method, a.k): a for a in aggregates}
    shared = sorted(k for method, k in by_method if method == "dsr" and ("slic", k) in by_method)
    if not shared:
        return {}

    series = {
        "ue": lambda a: a.mean_ue,
        "br_deficit": lambda a: 1.0 - a.mean_br,
        "bp_deficit": lambda a: 1.0 - a.mean_bp,
    }
    rates: Dict[str, Optional[float]] = {}
    for name, pick in series.items():
        ours = [pick(by_method[("dsr", k)]) for k in shared]
        baseline = [pick(by_method[("slic", k)]) for k in shared]
        try:
            rates[name] = improvement_rate(ours, baseline)
        except UndefinedRateError as e:
            logger.warning(f"Improvement rate for {name} undefined: {e}")
            rates[name] = None
    return rates


def _fmt(value) -> str:
    return "" if value is None else repr(value)


def write_csv(report: BenchReport, path: Path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for cell in report.cells:
            if not cell.completed:
                continue
            writer.writerow([
                cell.image, cell.method, cell.k, cell.k_final,
                _fmt(cell.ue), _fmt(cell.br), _fmt(cell.bp), _fmt(cell.runtime_s),
            ])
    logger.info(f"Wrote CSV report to {path}")


def write_json(report: BenchReport, path: Path):
    Path(path).write_text(report.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote JSON report to {path}")


def format_table(report: BenchReport) -> str:
    lines = ["=" * 72, f"{'method':<8}{'k':>6}{'images':>8}{'UE':>12}{'BR':>12}{'BP':>12}{'time s':>12}", "-" * 72]
    for a in report.aggregates:
        lines.append(
            f"{a.method:<8}{a.k:>6}{a.images:>8}{a.mean_ue:>12.4f}{a.mean_br:>12.4f}"
            f"{a.mean_bp:>12.4f}{a.mean_runtime_s:>12.3f}"
        )
    if report.improvement:
        lines.append("-" * 72)
        for name, rate in report.improvement.items():
            shown = "undefined" if rate is None else f"{rate:.2f}%"
            lines.append(f"dsr vs slic improvement ({name}): {shown}")
    lines.append("=" * 72)
    return "\n".join(lines)
