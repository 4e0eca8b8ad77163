"""
Command-line entry points
segment: one image to a label map and optional debug artefacts
bench:   the UE/BR/BP sweep over an image directory
"""

import argparse
import csv
import json
import logging
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from superpixels import __version__
from superpixels.bench import BenchRunner, format_table, write_csv, write_json
from superpixels.clustering import SuperpixelSegmenter
from superpixels.config import (
    DEFAULT_K_VALUES,
    BenchConfig,
    ClusteringParams,
    SeedingParams,
    SpectralParams,
    configure_logging,
    env_threads,
)
from superpixels.errors import ParameterError, SuperpixelError
from superpixels.imagecore import (
    load_image,
    mark_points,
    render_overlay,
    resolve_color,
    save_image,
    write_label_map,
    write_scalar_png,
)
from superpixels.seeding import check_superpixel_count
from superpixels.spectral import compute_density, compute_saliency, density_map

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_algorithm_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--compactness", type=float, default=10.0, help="compactness m (default 10)")
    parser.add_argument("--max-iters", type=int, default=10, help="Lloyd iteration cap (default 10)")
    parser.add_argument("--tolerance", type=float, default=0.25,
                        help="stop when the mean centre shift drops below this many pixels")
    parser.add_argument("--sigma", type=float, default=20.0, help="saliency smoothing std (default 20)")
    parser.add_argument("--tau", type=float, default=6.5, help="seed hedging smoothing std (default 6.5)")
    parser.add_argument("--density-sign", choices=["literal", "inverted"], default="inverted",
                        help="density sign convention (default inverted)")
    parser.add_argument("--downsample", type=int, choices=[1, 2, 4], default=1,
                        help="compute saliency on a down-sampled image")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superpixels", description="SLIC and dynamic spectral residual superpixels")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="logging level (default from DSR_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image")
    seg.add_argument("--input", required=True, type=Path, help="PNG or PPM image")
    seg.add_argument("--superpixels", required=True, type=int, help="requested superpixel count k")
    seg.add_argument("--method", choices=["slic", "dsr"], default="dsr")
    _add_algorithm_flags(seg)
    seg.add_argument("--out", type=Path, help="16-bit PNG label map")
    seg.add_argument("--overlay", type=Path, help="PNG with superpixel boundaries drawn")
    seg.add_argument("--overlay-color", default=None, help="boundary colour, '#rrggbb' or 'r,g,b'")
    seg.add_argument("--seeds", type=Path, help="CSV of seed positions (x,y,order)")
    seg.add_argument("--seeds-overlay", type=Path, help="PNG with seed positions marked")
    seg.add_argument("--density", type=Path, help="normalised density map PNG")
    seg.add_argument("--saliency", type=Path, help="normalised saliency map PNG")
    seg.set_defaults(handler=cmd_segment)

    bench = sub.add_parser("bench", help="run the UE/BR/BP sweep")
    bench.add_argument("--images", required=True, type=Path, help="directory of PNG/PPM images")
    bench.add_argument("--ground-truth", required=True, type=Path, help="directory of .seg or 16-bit PNG ground truth")
    bench.add_argument("--k", type=int, nargs="+", default=list(DEFAULT_K_VALUES), help="superpixel counts")
    bench.add_argument("--methods", nargs="+", choices=["slic", "dsr"], default=["slic", "dsr"])
    _add_algorithm_flags(bench)
    bench.add_argument("--out", type=Path, default=Path("bench_report"),
                       help="report path; .csv and .json are written next to each other")
    bench.add_argument("--workers", type=int, default=1, help="worker count (DSR_THREADS overrides)")
    bench.set_defaults(handler=cmd_bench)
    return parser


def _spectral_params(args) -> SpectralParams:
    return SpectralParams(sigma=args.sigma, convention=args.density_sign, downsample_factor=args.downsample)


def cmd_segment(args) -> int:
    try:
        params = ClusteringParams(
            k=args.superpixels,
            m=args.compactness,
            max_iters=args.max_iters,
            convergence_tol=args.tolerance,
            method=args.method,
        )
        spectral = _spectral_params(args)
        seeding = SeedingParams(tau=args.tau)
        color = resolve_color(args.overlay_color)
    except (ValidationError, SuperpixelError) as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE

    try:
        image = load_image(args.input)
    except (SuperpixelError, OSError) as e:
        logger.error(f"Segmentation failed: {e}")
        return EXIT_FAILURE

    try:
        check_superpixel_count(image.num_pixels, params.k)
    except ParameterError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE

    try:
        density = None
        if args.saliency:
            saliency = compute_saliency(image, spectral)
            write_scalar_png(saliency.values, args.saliency)
            density = density_map(saliency, spectral.convention)
        elif params.method == "dsr" or args.density:
            density = compute_density(image, spectral)
        if args.density:
            write_scalar_png(density.values, args.density)

        result = SuperpixelSegmenter(params, seeding).run(image, density)

        if args.out:
            write_label_map(result.labels, args.out)
        if args.overlay:
            render_overlay(image, result.labels, args.overlay, color)
        if args.seeds:
            with open(args.seeds, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(["x", "y", "order"])
                writer.writerows(result.seeds.to_rows())
        if args.seeds_overlay:
            save_image(mark_points(image, result.seeds.seeds), args.seeds_overlay)
    except (SuperpixelError, OSError) as e:
        logger.error(f"Segmentation failed: {e}")
        return EXIT_FAILURE

    print(json.dumps({
        "k_final": result.labels.num_labels,
        "iterations": result.iterations,
        "runtime_s": round(result.runtime_seconds, 6),
    }))
    return EXIT_OK


def cmd_bench(args) -> int:
    workers = env_threads() or args.workers
    try:
        config = BenchConfig(
            image_dir=args.images,
            gt_dir=args.ground_truth,
            k_values=args.k,
            methods=args.methods,
            m=args.compactness,
            max_iters=args.max_iters,
            convergence_tol=args.tolerance,
            spectral=_spectral_params(args),
            seeding=SeedingParams(tau=args.tau),
            out_path=args.out,
            parallelism=workers,
        )
    except ValidationError as e:
        logger.error(f"Invalid arguments: {e}")
        return EXIT_USAGE

    try:
        report = BenchRunner(config).run()
        out = Path(config.out_path)
        if out.parent and not out.parent.exists():
            out.parent.mkdir(parents=True)
        write_csv(report, out.with_suffix(".csv"))
        write_json(report, out.with_suffix(".json"))
    except (SuperpixelError, OSError) as e:
        logger.error(f"Benchmark failed: {e}")
        return EXIT_FAILURE

    print(format_table(report))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    return args.handler(args)
