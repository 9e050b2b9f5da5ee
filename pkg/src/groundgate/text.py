"""Sentence segmentation, normalization and character n-grams.

The splitter is rule based: a sentence ends at ``.``, ``!`` or ``?`` (plus
any closing quotes/brackets) when followed by whitespace and then an
uppercase letter or digit, unless the token carrying the period is a known
legal abbreviation (``v.``, ``U.S.``, ``Inc.``, ...).
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class SentenceSpan(NamedTuple):
    """A sentence located by character offsets ``[start, end)`` in its parent text."""

    index: int
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class NGramConfig:
    n: int = 21

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n-gram size must be >= 1, got {self.n}")


ABBREVIATIONS = frozenset(
    {
        "v.", "vs.", "U.S.", "U.S.C.", "No.", "Nos.", "Inc.", "Corp.", "Co.", "Ltd.",
        "Stat.", "Jr.", "Sr.", "al.", "e.g.", "i.e.", "Cir.", "Ct.", "App.", "Supp.",
        "Mr.", "Ms.", "Mrs.", "Dr.", "Art.", "Sec.", "Ch.", "§",
    }
)

_TERMINAL = re.compile(r"[.!?]+[\"'”’)\]]*")
_OPENERS = "\"'“‘(["


def _token_before(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end].lstrip(_OPENERS)


def _is_abbreviation(text: str, punct_end: int) -> bool:
    return _token_before(text, punct_end).rstrip("\"'”’)]") in ABBREVIATIONS


def _next_starts_sentence(text: str, pos: int) -> bool:
    """True if ``text[pos:]`` is whitespace followed by an uppercase letter/digit."""
    if pos >= len(text) or not text[pos].isspace():
        return False
    while pos < len(text) and text[pos].isspace():
        pos += 1
    while pos < len(text) and text[pos] in _OPENERS:
        pos += 1
    return pos < len(text) and (text[pos].isupper() or text[pos].isdigit())


def _boundaries(text: str) -> list[int]:
    cuts = []
    for m in _TERMINAL.finditer(text):
        if not _next_starts_sentence(text, m.end()):
            continue
        if _is_abbreviation(text, m.end()):
            continue
        cuts.append(m.end())
    return cuts


def segment_sentences(text: str) -> list[SentenceSpan]:
    """Split ``text`` into sentence spans.

    Offsets are Python string (code point) indices, so
    ``text[span.start:span.end] == span.text`` always holds. Everything
    between spans is whitespace.
    """
    spans: list[SentenceSpan] = []
    pos = 0
    for cut in _boundaries(text) + [len(text)]:
        chunk = text[pos:cut]
        stripped = chunk.strip()
        if stripped:
            start = pos + (len(chunk) - len(chunk.lstrip()))
            end = start + len(stripped)
            spans.append(SentenceSpan(len(spans), start, end, stripped))
        pos = cut
    return spans


def sentences(text: str) -> list[str]:
    return [s.text for s in segment_sentences(text)]


def normalize_text(text: str) -> str:
    """Lowercase, NFC-compose and collapse whitespace. Idempotent."""
    text = unicodedata.normalize("NFC", text)
    text = unicodedata.normalize("NFC", text.lower())
    return " ".join(text.split())


def _raw_ngrams(text: str, n: int) -> set[str]:
    return {text[i : i + n] for i in range(len(text) - n + 1)}


def char_ngram_set(text: str, config: NGramConfig = NGramConfig()) -> set[str]:
    """All distinct length-``n`` substrings of the normalized text."""
    return _raw_ngrams(normalize_text(text), config.n)


def pool_separator(n: int) -> str:
    # "\n" never survives normalize_text, so any n-gram touching the separator is detectable
    return "\n#\n" * math.ceil((n - 1) / 3)


def context_ngram_pool(units: Iterable[str], config: NGramConfig = NGramConfig()) -> set[str]:
    """N-gram pool over several context units without cross-unit n-grams.

    Units are normalized individually and joined with :func:`pool_separator`;
    n-grams that touch the separator are discarded. The result equals the
    union of ``char_ngram_set`` over the units.
    """
    joined = pool_separator(config.n).join(normalize_text(u) for u in units)
    return {g for g in _raw_ngrams(joined, config.n) if "\n" not in g}
