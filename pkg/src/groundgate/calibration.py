"""Decision-threshold (and QuIP n-gram size) selection on a labeled split."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .errors import DegenerateCalibration, GroundGateError
from .metrics import ConfusionMatrix, macro_metrics
from .model import EvalRecord, Label, Objective, Split, ThresholdConfig
from .text import NGramConfig

logger = logging.getLogger(__name__)

DEFAULT_NGRAM_CANDIDATES = (5, 8, 13, 21, 34)


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    objective_value: float
    split: Split = Split.DEV
    grid: tuple[float, ...] = ()
    ngram_n: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "split", Split(self.split))
        if self.grid and self.threshold not in self.grid:
            raise ValueError("threshold must be a grid point")
        if not 0.0 <= self.objective_value <= 1.0:
            raise ValueError("objective value out of [0,1]")

    def threshold_config(self) -> ThresholdConfig:
        return ThresholdConfig(self.threshold, self.split, Objective.MACRO_F1)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "threshold": self.threshold,
            "objective": Objective.MACRO_F1.value,
            "objective_value": self.objective_value,
            "split": self.split.value,
            "grid": list(self.grid),
        }
        if self.ngram_n is not None:
            out["ngram_n"] = self.ngram_n
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CalibrationResult":
        return cls(
            threshold=float(data["threshold"]),
            objective_value=float(data["objective_value"]),
            split=Split(data.get("split", Split.DEV.value)),
            grid=tuple(float(g) for g in data.get("grid", ())),
            ngram_n=data.get("ngram_n"),
        )


def threshold_grid(scores: Sequence[float]) -> list[float]:
    """Distinct scores, midpoints between neighbours, and the endpoints 0 and 1."""
    distinct = sorted(set(float(s) for s in scores))
    mids = [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    return sorted(set(distinct) | set(mids) | {0.0, 1.0})


def objective_at(scored: Sequence[tuple[float, Label]], threshold: float) -> float:
    """Macro-F1 of the rule "grounded iff score >= threshold"."""
    cm = ConfusionMatrix.from_predictions((label, score >= threshold) for score, label in scored)
    return macro_metrics(cm).f1


def calibrate_threshold(
    scores: Sequence[tuple[float, Label]],
    objective: Objective = Objective.MACRO_F1,
    split: Split = Split.DEV,
) -> CalibrationResult:
    """Grid threshold with the best macro-F1; ties go to the smallest threshold."""
    if objective is not Objective.MACRO_F1:
        raise ValueError(f"unsupported objective {objective}")
    scored = [(float(s), Label(l)) for s, l in scores]
    if not scored:
        raise DegenerateCalibration("no scores to calibrate on")
    labels = {l for _, l in scored}
    if Label.UNLABELED in labels:
        raise DegenerateCalibration("calibration data contains unlabeled records")
    if labels != {Label.GROUNDED, Label.UNGROUNDED}:
        raise DegenerateCalibration("calibration needs both Grounded and Ungrounded examples")

    grid = threshold_grid([s for s, _ in scored])
    best_t, best_v = grid[0], -1.0
    for t in grid:
        v = objective_at(scored, t)
        if v > best_v:
            best_t, best_v = t, v
    return CalibrationResult(best_t, best_v, split, tuple(grid))


def collect_scores(detector, records: Sequence[EvalRecord]) -> list[tuple[float, Label]]:
    """Run ``detector`` over labeled records, dropping per-record failures."""
    out = []
    for rec in records:
        try:
            verdict = detector(rec)
        except GroundGateError as exc:
            logger.warning("%s: skipped during calibration (%s)", rec.record_id, exc)
            continue
        out.append((verdict.response_score, rec.gold_label))
    return out


def calibrate_quip_n(
    records: Sequence[EvalRecord],
    n_candidates: Sequence[int] = DEFAULT_NGRAM_CANDIDATES,
    split: Split = Split.DEV,
) -> tuple[NGramConfig, CalibrationResult]:
    """Joint (n, threshold) search; ties go to the smaller n."""
    from .detectors.similarity import SimilarityDetectorConfig, quip_detector

    if not n_candidates:
        raise ValueError("n_candidates must be non-empty")
    best: Optional[tuple[NGramConfig, CalibrationResult]] = None
    for n in sorted(set(n_candidates)):
        cfg = SimilarityDetectorConfig(ngram=NGramConfig(n))
        result = calibrate_threshold(collect_scores(lambda r: quip_detector(r, cfg), records), split=split)
        if best is None or result.objective_value > best[1].objective_value:
            best = (cfg.ngram, result)
    assert best is not None
    ngram, result = best
    return ngram, CalibrationResult(result.threshold, result.objective_value, split, result.grid, ngram.n)


def calibrate_detector(
    detector,
    records: Sequence[EvalRecord],
    split: Split = Split.DEV,
    n_candidates: Sequence[int] = DEFAULT_NGRAM_CANDIDATES,
) -> CalibrationResult:
    """Calibrate any registry detector; QuIP also searches its n-gram size."""
    if detector.name == "quip":
        return calibrate_quip_n(records, n_candidates, split)[1]
    return calibrate_threshold(collect_scores(detector, records), split=split)


def save_calibrations(path: str | Path, results: Mapping[str, CalibrationResult]) -> None:
    payload = {"schema": 1, "detectors": {k: v.to_dict() for k, v in sorted(results.items())}}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_calibrations(path: str | Path) -> dict[str, CalibrationResult]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k: CalibrationResult.from_dict(v) for k, v in data.get("detectors", {}).items()}


def apply_calibration(detector, result: CalibrationResult):
    """Return a copy of ``detector`` using the calibrated threshold (and n-gram size)."""
    changes: dict[str, Any] = {"threshold": result.threshold_config()}
    if result.ngram_n is not None:
        changes["ngram"] = NGramConfig(result.ngram_n)
    return detector.with_options(**changes)
