"""Groundedness detection for retrieval-augmented answers.

Detectors decide whether a response is supported by its context passages.
They come in three families (embedding/n-gram similarity, NLI, prompted
LLM judges) and share one record schema, calibration routine and benchmark
harness.
"""

from .bench import BenchmarkReport, emit_report, measure_latency, run_benchmark
from .calibration import CalibrationResult, calibrate_detector, calibrate_threshold
from .detectors import DETECTOR_NAMES, Detector, DetectorOptions, build_detector
from .errors import GroundGateError
from .metrics import ConfusionMatrix, MacroMetrics, macro_metrics
from .model import (
    DetectorVerdict,
    EvalRecord,
    Label,
    Provenance,
    SamplingConfig,
    SentenceScore,
    Split,
    ThresholdConfig,
    read_records,
    write_records,
)
from .providers import Providers, load_providers
from .text import NGramConfig, normalize_text, segment_sentences

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "CalibrationResult",
    "ConfusionMatrix",
    "DETECTOR_NAMES",
    "Detector",
    "DetectorOptions",
    "DetectorVerdict",
    "EvalRecord",
    "GroundGateError",
    "Label",
    "MacroMetrics",
    "NGramConfig",
    "Providers",
    "Provenance",
    "SamplingConfig",
    "SentenceScore",
    "Split",
    "ThresholdConfig",
    "build_detector",
    "calibrate_detector",
    "calibrate_threshold",
    "emit_report",
    "load_providers",
    "macro_metrics",
    "measure_latency",
    "normalize_text",
    "read_records",
    "run_benchmark",
    "segment_sentences",
    "write_records",
]
