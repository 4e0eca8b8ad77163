"""
Tests for dataset pairing, the benchmark runner and its reports
"""

import csv
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import voronoi_scene, write_seg
from superpixels.bench import (
    CSV_COLUMNS,
    BenchAggregate,
    BenchRunner,
    format_table,
    improvements,
    pair_dataset,
    write_csv,
    write_json,
)
from superpixels.clustering import SuperpixelSegmenter
from superpixels.config import BenchConfig, ClusteringParams
from superpixels.errors import SuperpixelError
from superpixels.imagecore import save_image, write_label_map
from superpixels.metrics import SegmentationMetrics
from superpixels.spectral import compute_density

FIXTURES = Path(__file__).parent / "fixtures"


def make_dataset(root, rng, count=2, size=32, regions=5):
    images = root / "images"
    truth = root / "truth"
    images.mkdir()
    truth.mkdir()
    for i in range(count):
        img, gt = voronoi_scene(rng, size, size, regions)
        save_image(img, images / f"scene{i}.png")
        if i % 2:
            write_label_map(gt.regions, truth / f"scene{i}.png")
        else:
            write_seg(truth / f"scene{i}.seg", np.asarray(gt.regions.labels))
    return images, truth


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestPairing:
    def test_pairs_by_stem(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=3)
        pairs, skipped = pair_dataset(images, truth)
        assert [name for name, _, _ in pairs] == ["scene0.png", "scene1.png", "scene2.png"]
        assert pairs[0][2].suffix == ".seg"
        assert pairs[1][2].suffix == ".png"
        assert skipped == {}

    def test_seg_wins_over_png(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=1)
        _, gt = voronoi_scene(rng, 32, 32, 3)
        write_label_map(gt.regions, truth / "scene0.png")
        pairs, _ = pair_dataset(images, truth)
        assert pairs[0][2].name == "scene0.seg"

    def test_unpaired_image_is_skipped(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=2)
        (truth / "scene1.png").unlink()
        pairs, skipped = pair_dataset(images, truth)
        assert len(pairs) == 1
        assert "scene1.png" in skipped

    def test_size_mismatch_is_skipped(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=2)
        _, small = voronoi_scene(rng, 16, 16, 3)
        write_label_map(small.regions, truth / "scene1.png")
        config = BenchConfig(image_dir=images, gt_dir=truth)
        samples, skipped = BenchRunner(config).load_samples()
        assert [s.name for s in samples] == ["scene0.png"]
        assert "scene1.png" in skipped


class TestRunner:
    def test_cardinality(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=2, size=48)
        config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[100, 200], max_iters=3)
        report = BenchRunner(config).run()
        assert len(report.cells) == 8
        assert all(cell.completed for cell in report.cells)
        assert [(c.image, c.method, c.k) for c in report.cells][:4] == [
            ("scene0.png", "dsr", 100),
            ("scene0.png", "dsr", 200),
            ("scene0.png", "slic", 100),
            ("scene0.png", "slic", 200),
        ]
        assert len(report.aggregates) == 4
        assert set(report.improvement) == {"ue", "br_deficit", "bp_deficit"}

    def test_worker_count_does_not_change_metrics(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=2)
        tables = []
        for workers in (1, 8):
            config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[20, 60],
                                 max_iters=4, parallelism=workers)
            out = tmp_path / f"report{workers}.csv"
            write_csv(BenchRunner(config).run(), out)
            tables.append([{k: v for k, v in row.items() if k != "runtime_s"} for row in read_rows(out)])
        assert tables[0] == tables[1]

    def test_invalid_k_is_skipped(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=1)
        config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[10, 1000], methods=["slic"])
        report = BenchRunner(config).run()
        skipped = [c for c in report.cells if not c.completed]
        assert [c.k for c in skipped] == [1000]
        assert "outside" in skipped[0].skip_reason

    def test_metric_failure_is_recorded(self, tmp_path, rng, monkeypatch):
        images, truth = make_dataset(tmp_path, rng, count=1)

        def broken_evaluate(gt, labels, runtime_seconds=0.0):
            return SegmentationMetrics(boundary_recall=1.0, underseg_error=-0.005,
                                       boundary_precision=1.0, num_superpixels=labels.num_labels)

        monkeypatch.setattr("superpixels.bench.evaluate", broken_evaluate)
        config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[16], methods=["slic"], max_iters=2)
        report = BenchRunner(config).run()
        assert len(report.cells) == 1
        assert not report.cells[0].completed
        assert "underseg_error" in report.cells[0].skip_reason

    def test_no_pairs(self, tmp_path):
        (tmp_path / "images").mkdir()
        (tmp_path / "truth").mkdir()
        config = BenchConfig(image_dir=tmp_path / "images", gt_dir=tmp_path / "truth")
        with pytest.raises(SuperpixelError):
            BenchRunner(config).run()


class TestReports:
    def test_csv_and_json_agree(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=1)
        config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[16, 40], max_iters=3)
        report = BenchRunner(config).run()
        write_csv(report, tmp_path / "r.csv")
        write_json(report, tmp_path / "r.json")

        rows = read_rows(tmp_path / "r.csv")
        assert list(rows[0].keys()) == CSV_COLUMNS
        cells = json.loads((tmp_path / "r.json").read_text())["cells"]
        assert len(rows) == len(cells) == 4
        for row, cell in zip(rows, cells):
            assert row["image"] == cell["image"]
            assert int(row["k_final"]) == cell["k_final"]
            for key in ("ue", "br", "bp"):
                assert float(row[key]) == cell[key]

    def test_improvements(self):
        aggregates = [
            BenchAggregate(method="slic", k=100, images=1, mean_ue=0.20, mean_br=0.8,
                           mean_bp=0.5, mean_runtime_s=0.1),
            BenchAggregate(method="dsr", k=100, images=1, mean_ue=0.10, mean_br=0.9,
                           mean_bp=0.5, mean_runtime_s=0.1),
            BenchAggregate(method="slic", k=200, images=1, mean_ue=0.10, mean_br=1.0,
                           mean_bp=0.5, mean_runtime_s=0.1),
            BenchAggregate(method="dsr", k=200, images=1, mean_ue=0.08, mean_br=1.0,
                           mean_bp=0.5, mean_runtime_s=0.1),
        ]
        rates = improvements(aggregates)
        assert rates["ue"] == pytest.approx(35.0)
        assert rates["br_deficit"] is None
        assert rates["bp_deficit"] == pytest.approx(0.0)

    def test_improvements_need_both_methods(self):
        only_slic = [BenchAggregate(method="slic", k=100, images=1, mean_ue=0.2, mean_br=0.8,
                                    mean_bp=0.5, mean_runtime_s=0.1)]
        assert improvements(only_slic) == {}

    def test_table(self, tmp_path, rng):
        images, truth = make_dataset(tmp_path, rng, count=1)
        config = BenchConfig(image_dir=images, gt_dir=truth, k_values=[16], max_iters=2)
        table = format_table(BenchRunner(config).run())
        assert "slic" in table and "dsr" in table
        assert "improvement (ue)" in table


class TestBundledScenes:
    """Frozen results on the text fixtures under tests/fixtures"""

    def test_slic_matches_golden_csv(self, tmp_path):
        scenes = FIXTURES / "quads"
        config = BenchConfig(image_dir=scenes / "images", gt_dir=scenes / "truth", k_values=[4], methods=["slic"])
        out = tmp_path / "quads.csv"
        write_csv(BenchRunner(config).run(), out)

        rows = read_rows(out)
        golden = read_rows(scenes / "golden_slic.csv")
        assert len(rows) == len(golden) == 3
        for row, expected in zip(rows, golden):
            for key in ("image", "method", "k", "k_final"):
                assert row[key] == expected[key]
            for key in ("ue", "br", "bp"):
                assert float(row[key]) == pytest.approx(float(expected[key]), abs=1e-12)

    def test_dsr_cells_complete(self):
        scenes = FIXTURES / "quads"
        config = BenchConfig(image_dir=scenes / "images", gt_dir=scenes / "truth", k_values=[4], methods=["dsr"])
        report = BenchRunner(config).run()
        assert len(report.cells) == 3
        for cell in report.cells:
            assert cell.completed
            assert 1 <= cell.k_final <= 4
            assert cell.ue >= 0.0
            assert 0.0 <= cell.br <= 1.0 and 0.0 <= cell.bp <= 1.0

    def test_more_superpixels_lower_underseg_error(self):
        scenes = FIXTURES / "checker"
        config = BenchConfig(image_dir=scenes / "images", gt_dir=scenes / "truth",
                             k_values=[4, 144], methods=["slic"])
        by_k = {a.k: a.mean_ue for a in BenchRunner(config).run().aggregates}
        # four superpixels cannot follow 36 cells
        assert by_k[4] > 0.0
        assert by_k[144] < by_k[4]


class TestRuntime:
    @pytest.fixture(scope="class")
    def timings(self):
        rng = np.random.default_rng(20240611)
        img, _ = voronoi_scene(rng, 321, 481, 40)

        def best_of(runs, method):
            best = float("inf")
            for _ in range(runs):
                started = time.perf_counter()
                density = compute_density(img) if method == "dsr" else None
                SuperpixelSegmenter(ClusteringParams(k=400, method=method)).run(img, density)
                best = min(best, time.perf_counter() - started)
            return best

        return {method: best_of(3, method) for method in ("slic", "dsr")}

    def test_dsr_overhead_over_slic(self, timings):
        assert timings["dsr"] <= 1.5 * timings["slic"]

    def test_dsr_within_two_seconds(self, timings):
        assert timings["dsr"] <= 2.0
