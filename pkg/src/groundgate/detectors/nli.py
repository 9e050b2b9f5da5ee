"""Pairwise-scorer (NLI-style) detector.

Any scorer exposed through the judge interface plugs in here: FactKB- or
HEM-like consistency models, or a fine-tuned grounding classifier served
over HTTP. The context sentence is the premise and the response sentence
the hypothesis.
"""

from __future__ import annotations

from typing import Literal, Sequence

from ..errors import ProviderError
from ..model import DetectorVerdict, EvalRecord, ThresholdConfig
from ..providers import Judge
from ..text import SentenceSpan
from .base import all_rule_verdict, context_sentences, ordered_map, response_sentences

PairGranularity = Literal["sentence", "full_context"]


class MatrixCellError(ProviderError):
    def __init__(self, row: int, col: int, cause: Exception):
        super().__init__(f"judge failed at cell ({row}, {col}): {cause}")
        self.row, self.col, self.cause = row, col, cause


def judgment_matrix(
    response_sentences: Sequence[SentenceSpan],
    context_sentences: Sequence[SentenceSpan],
    judge: Judge,
    field: str,
    parallelism: int = 1,
) -> list[list[float]]:
    """``m[i][j] = judge_pair(context_j, response_i).<field>``."""
    if not response_sentences or not context_sentences:
        raise ValueError("need at least one response and one context sentence")
    cells = [(i, j) for i in range(len(response_sentences)) for j in range(len(context_sentences))]

    def score(cell: tuple[int, int]) -> float:
        i, j = cell
        try:
            judgment = judge.judge_pair(context_sentences[j].text, response_sentences[i].text)
        except ProviderError as exc:
            raise MatrixCellError(i, j, exc) from exc
        return getattr(judgment, field)

    flat = ordered_map(score, cells, parallelism)
    width = len(context_sentences)
    return [flat[r * width : (r + 1) * width] for r in range(len(response_sentences))]


def support_matrix(
    response_sentences: Sequence[SentenceSpan],
    context_sentences: Sequence[SentenceSpan],
    judge: Judge,
    parallelism: int = 1,
) -> list[list[float]]:
    return judgment_matrix(response_sentences, context_sentences, judge, "consistency", parallelism)


def sentence_support(matrix: Sequence[Sequence[float]]) -> list[tuple[int, float]]:
    """Row-wise maximum: each response sentence's best-supporting context sentence."""
    if not matrix or not all(matrix):
        raise ValueError("support matrix must be non-empty")
    return [(i, max(row)) for i, row in enumerate(matrix)]


def _premises(record: EvalRecord, granularity: PairGranularity) -> list[SentenceSpan]:
    if granularity == "sentence":
        return context_sentences(record)
    if granularity == "full_context":
        joined = "\n\n".join(record.context)
        return [SentenceSpan(0, 0, len(joined), joined)]
    raise ValueError(f"unknown pair granularity {granularity!r}")


def nli_detector(
    record: EvalRecord,
    threshold: ThresholdConfig,
    judge: Judge,
    pair_granularity: PairGranularity = "sentence",
    parallelism: int = 1,
    name: str = "nli",
) -> DetectorVerdict:
    matrix = support_matrix(
        response_sentences(record), _premises(record, pair_granularity), judge, parallelism
    )
    return all_rule_verdict(name, sentence_support(matrix), threshold)
