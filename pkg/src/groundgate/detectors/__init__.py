"""Detector registry.

``build_detector(name, providers, ...)`` binds a detector function to its
providers and configuration and returns a :class:`Detector`, a callable
``record -> DetectorVerdict``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from ..model import DetectorVerdict, EvalRecord, SamplingConfig, ThresholdConfig
from ..prompts import TemplateStore
from ..providers import Providers
from ..text import NGramConfig
from .nli import nli_detector, sentence_support, support_matrix
from .prompting import (
    claims_detector,
    contextnli_detector,
    direct_detector,
    multigen_detector,
    triplet_detector,
)
from .similarity import SimilarityDetectorConfig, cosine, cosine_detector, quip_detector, quip_precision

DETECTOR_NAMES = ("cos_sim", "quip", "nli", "direct", "triplet", "multigen", "contextnli", "claims")

FAMILIES = {
    "cos_sim": "similarity",
    "quip": "similarity",
    "nli": "nli",
    "direct": "prompting",
    "triplet": "prompting",
    "multigen": "prompting",
    "contextnli": "prompting",
    "claims": "prompting",
}
FAMILY_ORDER = {"similarity": 0, "nli": 1, "prompting": 2}

# detectors with a calibratable decision threshold
THRESHOLDED = frozenset({"cos_sim", "quip", "nli", "triplet", "multigen", "contextnli"})


@dataclass(frozen=True)
class DetectorOptions:
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    ngram: NGramConfig = field(default_factory=NGramConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    strict: bool = False
    pair_granularity: str = "sentence"
    parallelism: int = 1
    templates: Optional[TemplateStore] = field(default=None, compare=False)


@dataclass(frozen=True)
class Detector:
    name: str
    family: str
    providers: Providers = field(repr=False)
    options: DetectorOptions = field(default_factory=DetectorOptions)

    @property
    def thresholded(self) -> bool:
        return self.name in THRESHOLDED

    def with_options(self, **changes) -> "Detector":
        return replace(self, options=replace(self.options, **changes))

    def __call__(self, record: EvalRecord) -> DetectorVerdict:
        return _RUNNERS[self.name](record, self.providers, self.options)


def sort_key(name: str) -> tuple[int, str]:
    return FAMILY_ORDER.get(FAMILIES.get(name, ""), 99), name


def _sim_config(o: DetectorOptions) -> SimilarityDetectorConfig:
    return SimilarityDetectorConfig(o.threshold, o.ngram)


_RUNNERS: dict[str, Callable[[EvalRecord, Providers, DetectorOptions], DetectorVerdict]] = {
    "cos_sim": lambda r, p, o: cosine_detector(r, _sim_config(o), p.embed),
    "quip": lambda r, p, o: quip_detector(r, _sim_config(o)),
    "nli": lambda r, p, o: nli_detector(r, o.threshold, p.judge, o.pair_granularity, o.parallelism),  # type: ignore[arg-type]
    "direct": lambda r, p, o: direct_detector(r, p.chat, templates=o.templates),
    "triplet": lambda r, p, o: triplet_detector(
        r, p.chat, o.threshold, o.strict, o.parallelism, templates=o.templates
    ),
    "multigen": lambda r, p, o: multigen_detector(
        r, p.chat, p.judge, o.sampling, o.threshold, o.parallelism, templates=o.templates
    ),
    "contextnli": lambda r, p, o: contextnli_detector(r, p.judge, o.threshold, o.parallelism),
    "claims": lambda r, p, o: claims_detector(r, p.chat, o.strict, templates=o.templates),
}


def build_detector(name: str, providers: Providers, options: Optional[DetectorOptions] = None) -> Detector:
    if name not in _RUNNERS:
        raise KeyError(f"unknown detector {name!r}; valid: {', '.join(DETECTOR_NAMES)}")
    return Detector(name, FAMILIES[name], providers, options or DetectorOptions())


__all__ = [
    "DETECTOR_NAMES",
    "Detector",
    "DetectorOptions",
    "FAMILIES",
    "THRESHOLDED",
    "SimilarityDetectorConfig",
    "build_detector",
    "cosine",
    "cosine_detector",
    "nli_detector",
    "quip_detector",
    "quip_precision",
    "sentence_support",
    "sort_key",
    "support_matrix",
]
