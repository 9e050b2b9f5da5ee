"""Helpers shared by the sentence-granular detectors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from ..model import DetectorVerdict, EvalRecord, SentenceScore, ThresholdConfig
from ..text import SentenceSpan, segment_sentences

T = TypeVar("T")
R = TypeVar("R")


def response_sentences(record: EvalRecord) -> list[SentenceSpan]:
    return segment_sentences(record.response)


def context_sentences(record: EvalRecord) -> list[SentenceSpan]:
    """Sentences of all passages, re-indexed consecutively across passages."""
    out: list[SentenceSpan] = []
    for passage in record.context:
        for s in segment_sentences(passage):
            out.append(s._replace(index=len(out)))
    return out


def clamp01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def ordered_map(fn: Callable[[T], R], items: Sequence[T], parallelism: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally on a bounded thread pool; order preserved."""
    if parallelism <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(parallelism, len(items))) as pool:
        return list(pool.map(fn, items))


def all_rule_verdict(
    name: str, scores: Iterable[tuple[int, float]], threshold: ThresholdConfig
) -> DetectorVerdict:
    """Per-sentence pass iff score >= threshold; response passes iff every sentence does."""
    sentence_scores = tuple(
        SentenceScore(i, clamp01(s), clamp01(s) >= threshold.threshold) for i, s in scores
    )
    if not sentence_scores:
        raise ValueError("no sentences to aggregate")
    return DetectorVerdict(
        detector_name=name,
        grounded=all(s.grounded for s in sentence_scores),
        response_score=min(s.score for s in sentence_scores),
        sentence_scores=sentence_scores,
    )
