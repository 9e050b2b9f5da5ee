"""Benchmark runner: accuracy pass, latency pass, and report rendering.

The accuracy pass may evaluate records concurrently. The latency pass is
strictly sequential (one record in flight) with provider caches disabled,
and every record counts, with no warm-up exclusion.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .calibration import CalibrationResult, apply_calibration, calibrate_detector
from .errors import DegenerateCalibration, GroundGateError, UnparseableVerdict
from .metrics import ConfusionMatrix, MacroMetrics, macro_metrics
from .model import DetectorVerdict, EvalRecord, Split

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("markdown_table", "csv", "scatter_json")
SPLIT_TITLES = {"dev": "Dev", "test": "Test", "train": "Train"}


@dataclass(frozen=True)
class RecordOutcome:
    """Result of running one detector on one record."""

    record_id: str
    verdict: Optional[DetectorVerdict] = None
    error_kind: Optional[str] = None  # "error" | "unparseable"
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is not None

    def to_dict(self, detector: str, gold_label: Optional[str] = None, with_latency: bool = False) -> dict:
        """JSON row for a verdicts file; latency is left out by default so reruns match byte for byte."""
        out = {"record_id": self.record_id, "detector": detector}
        if gold_label is not None:
            out["gold_label"] = gold_label
        if self.verdict is not None:
            out["outcome"] = "verdict"
            skip = {"detector"} if with_latency else {"detector", "latency_seconds"}
            out.update({k: v for k, v in self.verdict.to_dict().items() if k not in skip})
        else:
            out["outcome"] = self.error_kind
            out["error"] = self.error
        return out


def run_one(detector: Callable[[EvalRecord], DetectorVerdict], record: EvalRecord) -> RecordOutcome:
    start = time.perf_counter()
    try:
        verdict = detector(record)
    except UnparseableVerdict as exc:
        return RecordOutcome(record.record_id, error_kind="unparseable", error=str(exc))
    except GroundGateError as exc:
        return RecordOutcome(record.record_id, error_kind="error", error=f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - start
    verdict = DetectorVerdict(
        verdict.detector_name, verdict.grounded, verdict.response_score, verdict.sentence_scores, elapsed
    )
    return RecordOutcome(record.record_id, verdict)


def evaluate_records(
    detector: Callable[[EvalRecord], DetectorVerdict],
    records: Sequence[EvalRecord],
    parallelism: int = 1,
) -> list[RecordOutcome]:
    """Run ``detector`` over ``records``; outcomes come back in input order."""
    if parallelism <= 1:
        return [run_one(detector, r) for r in records]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda r: run_one(detector, r), records))


# latency


@dataclass(frozen=True)
class LatencyStats:
    mean_seconds: float
    p50: float
    p95: float
    max: float
    n: int
    n_failed: int = 0

    @classmethod
    def from_samples(cls, samples: Sequence[float], n_failed: int = 0) -> "LatencyStats":
        if not samples:
            return cls(0.0, 0.0, 0.0, 0.0, 0, n_failed)
        arr = np.asarray(samples, dtype=np.float64)
        p50, p95 = np.percentile(arr, [50, 95])
        return cls(float(arr.mean()), float(p50), float(p95), float(arr.max()), len(samples), n_failed)


def measure_latency(
    detector: Callable[[EvalRecord], DetectorVerdict],
    records: Sequence[EvalRecord],
    clock: Callable[[], float] = time.perf_counter,
) -> LatencyStats:
    """Wall-clock seconds per record, one record at a time, caches off."""
    if not records:
        raise ValueError("need at least one record to time")
    providers = getattr(detector, "providers", None)
    if providers is not None:
        providers.set_caching(False)
    samples, failed = [], 0
    try:
        for rec in records:
            start = clock()
            try:
                detector(rec)
            except GroundGateError:
                failed += 1
                continue
            samples.append(clock() - start)
    finally:
        if providers is not None:
            providers.set_caching(True)
    return LatencyStats.from_samples(samples, failed)


# benchmark


@dataclass(frozen=True)
class SplitResult:
    metrics: MacroMetrics
    confusion: Optional[ConfusionMatrix] = None
    n_errors: int = 0
    n_unparseable: int = 0

    @classmethod
    def from_outcomes(cls, records: Sequence[EvalRecord], outcomes: Sequence[RecordOutcome]) -> "SplitResult":
        pairs = [(rec.gold_label, out.verdict.grounded) for rec, out in zip(records, outcomes) if out.verdict]
        cm = ConfusionMatrix.from_predictions(pairs)
        metrics = macro_metrics(cm) if cm.total else MacroMetrics(0.0, 0.0, 0.0, 0.0)
        return cls(
            metrics,
            cm,
            n_errors=sum(o.error_kind == "error" for o in outcomes),
            n_unparseable=sum(o.error_kind == "unparseable" for o in outcomes),
        )


@dataclass(frozen=True)
class DetectorReport:
    name: str
    family: str = ""
    splits: Mapping[str, SplitResult] = field(default_factory=dict)
    latency: Optional[LatencyStats] = None
    calibration: Optional[CalibrationResult] = None


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[DetectorReport, ...] = ()
    split_names: tuple[str, ...] = ("dev", "test")


def run_benchmark(
    detectors: Sequence,
    splits: Mapping[str, Sequence[EvalRecord]] | Sequence[EvalRecord],
    calibration: Optional[Mapping[str, CalibrationResult]] = None,
    calibrate_split: str = "dev",
    latency_split: str = "dev",
    parallelism: int = 4,
    measure: bool = True,
) -> BenchmarkReport:
    """Calibrate (where needed), evaluate every split, time the latency split.

    Thresholded detectors without an entry in ``calibration`` are calibrated
    on ``calibrate_split``. Rows are sorted by family, then name.
    """
    from .detectors import sort_key

    if not isinstance(splits, Mapping):
        splits = {"dev": list(splits)}
    for name, recs in splits.items():
        if any(not r.is_labeled for r in recs):
            raise ValueError(f"split {name!r} contains unlabeled records")
    calibration = dict(calibration or {})
    rows = []
    for det in sorted(detectors, key=lambda d: sort_key(d.name)):
        cal = calibration.get(det.name)
        if cal is None and getattr(det, "thresholded", False) and calibrate_split in splits:
            try:
                cal = calibrate_detector(det, splits[calibrate_split], split=Split.DEV)
            except DegenerateCalibration as exc:
                logger.warning("%s: calibration skipped (%s); using default threshold", det.name, exc)
        if cal is not None and getattr(det, "thresholded", False):
            det = apply_calibration(det, cal)
        results = {}
        for split_name, recs in splits.items():
            outcomes = evaluate_records(det, recs, parallelism)
            results[split_name] = SplitResult.from_outcomes(recs, outcomes)
        latency = None
        if measure and latency_split in splits and splits[latency_split]:
            latency = measure_latency(det, splits[latency_split])
        rows.append(DetectorReport(det.name, getattr(det, "family", ""), results, latency, cal))
    return BenchmarkReport(tuple(rows), tuple(splits))


# rendering


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _markdown(report: BenchmarkReport) -> str:
    metric_names = ("Precision", "Recall", "Macro-F1", "Accuracy")
    header = ["#", "Model Name"]
    for s in report.split_names:
        title = SPLIT_TITLES.get(s, s.title())
        header += [f"{title} {m}" for m in metric_names]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---:", ":---"] + ["---:"] * (len(header) - 2)) + "|",
    ]
    for i, row in enumerate(report.rows, 1):
        cells = [str(i), row.name]
        for s in report.split_names:
            res = row.splits.get(s)
            cells += [_fmt(v) for v in res.metrics] if res else ["-"] * 4
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["name", "family", "split", "precision", "recall", "macro_f1", "accuracy",
         "tp", "fp", "fn", "tn", "n_errors", "n_unparseable",
         "latency_mean_s", "latency_p50_s", "latency_p95_s", "latency_max_s", "threshold"]
    )
    for row in report.rows:
        for s in report.split_names:
            res = row.splits.get(s)
            if res is None:
                continue
            cm = res.confusion
            counts = [cm.tp, cm.fp, cm.fn, cm.tn] if cm else ["", "", "", ""]
            lat = row.latency if s == "dev" else None
            lat_cells = [_fmt(v) for v in (lat.mean_seconds, lat.p50, lat.p95, lat.max)] if lat else [""] * 4
            thr = _fmt(row.calibration.threshold) if row.calibration else ""
            w.writerow(
                [row.name, row.family, s, *(_fmt(v) for v in res.metrics), *counts,
                 res.n_errors, res.n_unparseable, *lat_cells, thr]
            )
    return buf.getvalue()


def _scatter(report: BenchmarkReport) -> str:
    points = []
    for row in report.rows:
        res = row.splits.get("dev") or next(iter(row.splits.values()), None)
        if res is None:
            continue
        points.append(
            {
                "name": row.name,
                "f1": round(res.metrics.f1, 3),
                "latency_seconds": round(row.latency.mean_seconds, 3) if row.latency else None,
            }
        )
    return json.dumps(points, indent=2) + "\n"


def emit_report(report: BenchmarkReport, fmt: str = "markdown_table") -> str:
    """Render as a Table-2-style markdown table, CSV, or F1-vs-latency scatter JSON."""
    renderers = {"markdown_table": _markdown, "csv": _csv, "scatter_json": _scatter}
    if fmt not in renderers:
        raise ValueError(f"unknown report format {fmt!r}; choose from {', '.join(REPORT_FORMATS)}")
    return renderers[fmt](report)
