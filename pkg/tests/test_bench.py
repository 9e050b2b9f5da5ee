import json
import time

import pytest

from groundgate.bench import (
    BenchmarkReport,
    DetectorReport,
    LatencyStats,
    SplitResult,
    emit_report,
    evaluate_records,
    measure_latency,
    run_benchmark,
)
from groundgate.detectors import build_detector
from groundgate.errors import ProviderError, UnparseableVerdict
from groundgate.metrics import MacroMetrics
from groundgate.model import DetectorVerdict, Label, SentenceScore

from reference_rows import reference_report
from conftest import GOLDEN


class FakeDetector:
    """Predicts from the gold label, so the expected metrics are known."""

    thresholded = False

    def __init__(self, name, family="prompting", invert=False, sleep=0.0, fail_ids=(), bad_ids=()):
        self.name = name
        self.family = family
        self.invert = invert
        self.sleep = sleep
        self.fail_ids = set(fail_ids)
        self.bad_ids = set(bad_ids)

    def __call__(self, record):
        if self.sleep:
            time.sleep(self.sleep)
        if record.record_id in self.fail_ids:
            raise ProviderError("boom")
        if record.record_id in self.bad_ids:
            raise UnparseableVerdict("no json")
        grounded = (record.gold_label is Label.GROUNDED) != self.invert
        s = 1.0 if grounded else 0.0
        return DetectorVerdict(self.name, grounded, s, (SentenceScore(0, s, grounded),))


class TestRunBenchmark:
    def test_oracle_and_anti_oracle(self, dev_records):
        report = run_benchmark([FakeDetector("zz_oracle"), FakeDetector("aa_anti", invert=True)], {"dev": dev_records}, measure=False)
        by_name = {r.name: r for r in report.rows}
        assert by_name["zz_oracle"].splits["dev"].metrics == MacroMetrics(1.0, 1.0, 1.0, 1.0)
        assert by_name["aa_anti"].splits["dev"].metrics == MacroMetrics(0.0, 0.0, 0.0, 0.0)

    def test_rows_sorted_by_family_then_name(self, dev_records, mock_providers):
        dets = [build_detector(n, mock_providers) for n in ("claims", "nli", "quip", "cos_sim", "direct")]
        report = run_benchmark(dets, {"dev": dev_records[:6]}, measure=False)
        assert [r.name for r in report.rows] == ["cos_sim", "quip", "nli", "claims", "direct"]

    def test_errors_counted_not_scored(self, dev_records):
        ids = [r.record_id for r in dev_records]
        det = FakeDetector("x", fail_ids=ids[:2], bad_ids=ids[2:5])
        res = run_benchmark([det], {"dev": dev_records}, measure=False).rows[0].splits["dev"]
        assert (res.n_errors, res.n_unparseable) == (2, 3)
        assert res.confusion.total == len(dev_records) - 5

    def test_deterministic(self, dev_records, test_records, mock_providers):
        def run():
            dets = [build_detector(n, mock_providers) for n in ("cos_sim", "quip", "triplet")]
            return emit_report(run_benchmark(dets, {"dev": dev_records, "test": test_records}, measure=False))

        assert run() == run()

    def test_unlabeled_split_rejected(self, simple_record):
        from dataclasses import replace

        with pytest.raises(ValueError):
            run_benchmark([FakeDetector("x")], {"dev": [replace(simple_record, gold_label=None)]})

    def test_parallel_matches_sequential(self, dev_records):
        det = FakeDetector("x", fail_ids=[dev_records[0].record_id])
        seq = evaluate_records(det, dev_records, 1)
        par = evaluate_records(det, dev_records, 8)
        assert [o.record_id for o in seq] == [o.record_id for o in par]
        assert [o.ok for o in seq] == [o.ok for o in par]


class TestLatency:
    def test_sleep_is_measured(self, dev_records):
        stats = measure_latency(FakeDetector("x", sleep=0.01), dev_records[:10])
        assert 0.010 <= stats.mean_seconds < 0.015
        assert stats.n == 10

    def test_zero_work(self, dev_records):
        stats = measure_latency(FakeDetector("x"), dev_records)
        assert stats.mean_seconds < 1e-3

    def test_percentile_order(self, dev_records):
        stats = measure_latency(FakeDetector("x", sleep=0.001), dev_records[:20])
        assert stats.p50 <= stats.p95 <= stats.max

    def test_failures_counted(self, dev_records):
        det = FakeDetector("x", fail_ids=[dev_records[0].record_id])
        stats = measure_latency(det, dev_records[:5])
        assert (stats.n, stats.n_failed) == (4, 1)

    def test_fake_clock(self, dev_records):
        ticks = iter(range(100))
        stats = measure_latency(FakeDetector("x"), dev_records[:3], clock=lambda: next(ticks))
        assert stats == LatencyStats(1.0, 1.0, 1.0, 1.0, 3, 0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            measure_latency(FakeDetector("x"), [])

    def test_caching_disabled_during_timing(self, dev_records, mock_providers):
        seen = []
        det = build_detector("cos_sim", mock_providers)
        orig = mock_providers.set_caching
        mock_providers.set_caching = lambda on: (seen.append(on), orig(on))
        measure_latency(det, dev_records[:2])
        assert seen == [False, True]


class TestEmit:
    def test_reference_rows_golden(self):
        assert emit_report(reference_report()) == (GOLDEN / "reference_rows.md").read_text()

    def test_empty_report_is_header_only(self):
        text = emit_report(BenchmarkReport())
        assert text.count("\n") == 2
        assert text.startswith("| # | Model Name | Dev Precision")

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="unknown report format"):
            emit_report(BenchmarkReport(), "html")

    def test_csv_and_scatter(self):
        row = DetectorReport(
            "cos_sim",
            "similarity",
            {"dev": SplitResult(MacroMetrics(0.5, 0.5, 0.5, 0.5))},
            LatencyStats(0.0123, 0.01, 0.02, 0.03, 3),
        )
        rep = BenchmarkReport((row,), ("dev",))
        lines = emit_report(rep, "csv").splitlines()
        assert lines[0].startswith("name,family,split,precision")
        assert lines[1].startswith("cos_sim,similarity,dev,0.500,0.500,0.500,0.500")
        assert json.loads(emit_report(rep, "scatter_json")) == [
            {"name": "cos_sim", "f1": 0.5, "latency_seconds": 0.012}
        ]

    def test_rounding_three_places(self):
        rep = BenchmarkReport((DetectorReport("x", splits={"dev": SplitResult(MacroMetrics(2 / 3, 0.0005, 0.9996, 1.0))}),), ("dev",))
        assert emit_report(rep).splitlines()[-1] == "| 1 | x | 0.667 | 0.001 | 1.000 | 1.000 |"
