"""Deterministic offline providers.

* :class:`HashingEmbedder` - bag of character trigrams hashed into 256
  buckets with FNV-1a (64 bit), L2-normalized.
* :class:`OverlapJudge` - token-overlap ratio posing as an NLI model.
* :class:`ScriptedChat` - looks completions up by (template id, fixture key),
  both read from sentinel lines at the top of the prompt.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import FixtureMissingError, ProviderError
from ..text import normalize_text
from .base import ChatRequest, EmbeddingVector, PairwiseJudgment, TextCache

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


class HashingEmbedder:
    nonnegative = True

    def __init__(self, dimension: int = 256, cache: bool = True):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.cache = TextCache(cache)

    def _vector(self, text: str) -> EmbeddingVector:
        norm = normalize_text(text)
        counts = [0.0] * self.dimension
        trigrams = Counter(norm[i : i + 3] for i in range(len(norm) - 2))
        if not trigrams:
            counts[0] = 1.0
            return EmbeddingVector(tuple(counts))
        for gram, c in trigrams.items():
            counts[fnv1a_64(gram.encode("utf-8")) % self.dimension] += c
        length = math.sqrt(sum(c * c for c in counts))
        return EmbeddingVector(tuple(c / length for c in counts))

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            raise ValueError("embed() needs at least one text")
        return [self.cache.get_or_compute(t, lambda t=t: self._vector(t)) for t in texts]


class OverlapJudge:
    """entail = consistency = |shared distinct tokens| / |distinct hypothesis tokens|."""

    def __init__(self, cache: bool = True):
        self.cache = TextCache(cache)

    @staticmethod
    def overlap_ratio(premise: str, hypothesis: str) -> float:
        hyp = set(normalize_text(hypothesis).split())
        if not hyp:
            raise ValueError("hypothesis has no tokens")
        prem = set(normalize_text(premise).split())
        return len(hyp & prem) / len(hyp)

    def judge_pair(self, premise: str, hypothesis: str) -> PairwiseJudgment:
        def compute():
            r = self.overlap_ratio(premise, hypothesis)
            return PairwiseJudgment(entail=r, neutral=0.0, contradict=1.0 - r, consistency=r)

        return self.cache.get_or_compute((premise, hypothesis), compute)


_TEMPLATE_LINE = re.compile(r"^### template: ([\w.-]+?)(?:@[\w.+-]+)?\s*$", re.M)
_KEY_LINE = re.compile(r"^### key: (.+?)\s*$", re.M)


def parse_sentinels(prompt: str) -> tuple[str, str]:
    """Extract (template id, fixture key) from a rendered prompt."""
    t = _TEMPLATE_LINE.search(prompt)
    k = _KEY_LINE.search(prompt)
    if t is None or k is None:
        raise ProviderError("prompt carries no template/key sentinel lines")
    return t.group(1), k.group(1)


class ScriptedChat:
    """Replays canned completions; ``fixtures[template_id][key] -> completion``."""

    def __init__(self, fixtures: Mapping[str, Mapping[str, str]]):
        self.fixtures = {t: dict(v) for t, v in fixtures.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChat":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def chat(self, request: ChatRequest) -> str:
        template_id, key = parse_sentinels(request.prompt)
        try:
            return self.fixtures[template_id][key]
        except KeyError:
            raise FixtureMissingError(f"no fixture for key ({template_id}, {key})") from None
