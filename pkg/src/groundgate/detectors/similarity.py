"""Similarity detectors: embedding cosine and QuIP (character n-gram precision)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..model import DetectorVerdict, EvalRecord, ThresholdConfig
from ..providers import Embedder, EmbeddingVector
from ..text import NGramConfig, SentenceSpan, char_ngram_set, context_ngram_pool
from .base import all_rule_verdict, clamp01, context_sentences, response_sentences


@dataclass(frozen=True)
class SimilarityDetectorConfig:
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    ngram: NGramConfig = field(default_factory=NGramConfig)


def _as_array(v: EmbeddingVector | Sequence[float]) -> np.ndarray:
    values = v.values if isinstance(v, EmbeddingVector) else v
    return np.asarray(values, dtype=np.float64)


def cosine(u: EmbeddingVector | Sequence[float], v: EmbeddingVector | Sequence[float]) -> float:
    a, b = _as_array(u), _as_array(v)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    aa, bb = float(a @ a), float(b @ b)
    if aa == 0.0 or bb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    # sqrt(x*x) == x exactly in IEEE arithmetic, so cosine(v, v) is exactly 1.0
    return max(-1.0, min(1.0, float(a @ b) / float(np.sqrt(aa * bb))))


def best_match_scores(
    response_sentences: Sequence[SentenceSpan],
    context_sentences: Sequence[SentenceSpan],
    embed: Embedder,
) -> list[tuple[int, float]]:
    """For each response sentence, its highest cosine against any context sentence."""
    if not response_sentences or not context_sentences:
        raise ValueError("need at least one response and one context sentence")
    vectors = embed.embed([s.text for s in response_sentences] + [s.text for s in context_sentences])
    resp, ctx = vectors[: len(response_sentences)], vectors[len(response_sentences) :]
    nonneg = getattr(embed, "nonnegative", False)
    out = []
    for span, rv in zip(response_sentences, resp):
        best = max(cosine(rv, cv) for cv in ctx)
        out.append((span.index, clamp01(best) if nonneg else (best + 1.0) / 2.0))
    return out


def cosine_detector(
    record: EvalRecord, config: SimilarityDetectorConfig, embed: Embedder, name: str = "cos_sim"
) -> DetectorVerdict:
    scores = best_match_scores(response_sentences(record), context_sentences(record), embed)
    return all_rule_verdict(name, scores, config.threshold)


def quip_precision(sentence: str, context_pool: set[str], config: NGramConfig = NGramConfig()) -> float:
    """Share of the sentence's character n-grams found in ``context_pool``.

    Sentences shorter than n carry no n-grams and score 1.0.
    """
    grams = char_ngram_set(sentence, config)
    if not grams:
        return 1.0
    return len(grams & context_pool) / len(grams)


def quip_detector(
    record: EvalRecord, config: SimilarityDetectorConfig, name: str = "quip"
) -> DetectorVerdict:
    pool = context_ngram_pool((s.text for s in context_sentences(record)), config.ngram)
    scores = [(s.index, quip_precision(s.text, pool, config.ngram)) for s in response_sentences(record)]
    return all_rule_verdict(name, scores, config.threshold)
