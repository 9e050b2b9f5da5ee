"""Domain types and the JSONL corpus schema."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, NamedTuple, Optional

from .errors import SchemaError
from .text import segment_sentences

SCHEMA_VERSION = 1


class Label(str, enum.Enum):
    GROUNDED = "Grounded"
    UNGROUNDED = "Ungrounded"
    UNLABELED = "Unlabeled"


class Provenance(str, enum.Enum):
    ORIGINAL = "Original"
    SYNTHETIC_ADAPTATION = "SyntheticAdaptation"


class Split(str, enum.Enum):
    TRAIN = "Train"
    DEV = "Dev"


class Objective(str, enum.Enum):
    MACRO_F1 = "MacroF1"


@dataclass(frozen=True)
class EvalRecord:
    """One (query, context, response, gold label) unit."""

    record_id: str
    query_id: str
    query: str
    context: tuple[str, ...]
    response: str
    gold_label: Label = Label.UNLABELED
    provenance: Provenance = Provenance.ORIGINAL
    changed_sentence_indices: Optional[frozenset[int]] = None

    def __post_init__(self):
        # accept lists/sets from callers, store immutable forms
        object.__setattr__(self, "context", tuple(self.context))
        object.__setattr__(self, "gold_label", Label(self.gold_label))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if self.changed_sentence_indices is not None:
            object.__setattr__(
                self, "changed_sentence_indices", frozenset(self.changed_sentence_indices)
            )

    @property
    def is_labeled(self) -> bool:
        return self.gold_label is not Label.UNLABELED

    def to_dict(self) -> dict[str, Any]:
        changed = self.changed_sentence_indices
        return {
            "schema": SCHEMA_VERSION,
            "record_id": self.record_id,
            "query_id": self.query_id,
            "query": self.query,
            "context": list(self.context),
            "response": self.response,
            "gold_label": self.gold_label.value,
            "provenance": self.provenance.value,
            "changed_sentence_indices": None if changed is None else sorted(changed),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalRecord":
        if not isinstance(data, dict):
            raise SchemaError("record must be a JSON object")
        if data.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"unsupported or missing schema version: {data.get('schema')!r}")
        try:
            context = data["context"]
            if not isinstance(context, list) or not all(isinstance(c, str) for c in context):
                raise SchemaError("context must be a JSON array of strings")
            for key in ("record_id", "query_id", "query", "response"):
                if not isinstance(data[key], str):
                    raise SchemaError(f"{key} must be a string")
            changed = data.get("changed_sentence_indices")
            if changed is not None:
                if not isinstance(changed, list) or not all(
                    isinstance(i, int) and not isinstance(i, bool) for i in changed
                ):
                    raise SchemaError("changed_sentence_indices must be an array of integers")
                changed = frozenset(changed)
            return cls(
                record_id=data["record_id"],
                query_id=data["query_id"],
                query=data["query"],
                context=tuple(context),
                response=data["response"],
                gold_label=Label(data.get("gold_label", Label.UNLABELED.value)),
                provenance=Provenance(data.get("provenance", Provenance.ORIGINAL.value)),
                changed_sentence_indices=changed,
            )
        except KeyError as exc:
            raise SchemaError(f"missing field: {exc.args[0]}") from None
        except ValueError as exc:
            raise SchemaError(str(exc)) from None


def validate_record(record: EvalRecord) -> list[str]:
    """Return every invariant violation of ``record``; empty means valid."""
    problems = []
    if not record.query.strip():
        problems.append("query: must be non-empty")
    if not record.context:
        problems.append("context: must be non-empty")
    elif any(not c.strip() for c in record.context):
        problems.append("context: passages must be non-empty")
    if not record.response.strip():
        problems.append("response: must be non-empty")

    synthetic = record.provenance is Provenance.SYNTHETIC_ADAPTATION
    changed = record.changed_sentence_indices
    if synthetic and changed is None:
        problems.append("changed_sentence_indices: required for SyntheticAdaptation records")
    elif not synthetic and changed is not None:
        problems.append("changed_sentence_indices: only allowed on SyntheticAdaptation records")
    if changed is not None:
        n_sentences = len(segment_sentences(record.response))
        for idx in sorted(changed):
            if not 0 <= idx < n_sentences:
                problems.append(
                    f"changed_sentence_indices: index {idx} out of range "
                    f"(response has {n_sentences} sentences)"
                )
    return problems


def validate_corpus(records: Iterable[EvalRecord]) -> list[str]:
    """Per-record violations plus cross-record rules (unique ids, consistent query groups)."""
    problems = []
    seen_ids: set[str] = set()
    groups: dict[str, tuple[str, tuple[str, ...]]] = {}
    for rec in records:
        problems.extend(f"{rec.record_id}: {p}" for p in validate_record(rec))
        if rec.record_id in seen_ids:
            problems.append(f"{rec.record_id}: duplicate record_id")
        seen_ids.add(rec.record_id)
        first = groups.setdefault(rec.query_id, (rec.query, rec.context))
        if first != (rec.query, rec.context):
            problems.append(
                f"{rec.record_id}: query/context differ from other records of query_id {rec.query_id}"
            )
    return problems


class SentenceScore(NamedTuple):
    index: int
    score: float
    grounded: bool


@dataclass(frozen=True)
class DetectorVerdict:
    """Binary decision plus evidence. Scores are oriented so higher = more grounded."""

    detector_name: str
    grounded: bool
    response_score: float
    sentence_scores: tuple[SentenceScore, ...] = ()
    latency_seconds: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sentence_scores", tuple(self.sentence_scores))
        if not 0.0 <= self.response_score <= 1.0:
            raise ValueError(f"response_score out of [0,1]: {self.response_score}")
        for s in self.sentence_scores:
            if not 0.0 <= s.score <= 1.0:
                raise ValueError(f"sentence score out of [0,1]: {s}")
        if self.sentence_scores and self.grounded != all(s.grounded for s in self.sentence_scores):
            raise ValueError("grounded must equal the ALL-rule over sentence flags")
        if self.latency_seconds < 0:
            raise ValueError("latency must be non-negative")

    def flagged_sentences(self) -> list[int]:
        return [s.index for s in self.sentence_scores if not s.grounded]

    def to_dict(self) -> dict[str, Any]:
        return {
            "detector": self.detector_name,
            "grounded": self.grounded,
            "response_score": self.response_score,
            "sentence_scores": [
                {"index": s.index, "score": s.score, "grounded": s.grounded}
                for s in self.sentence_scores
            ],
            "latency_seconds": self.latency_seconds,
        }


@dataclass(frozen=True)
class ThresholdConfig:
    threshold: float = 0.5
    calibration_split: Split = Split.DEV
    objective: Objective = Objective.MACRO_F1

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0,1], got {self.threshold}")


@dataclass(frozen=True)
class SamplingConfig:
    k: int = 3
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


# JSONL io


def dumps_record(record: EvalRecord) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=True)


def loads_record(line: str) -> EvalRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return EvalRecord.from_dict(data)


def iter_records(path: str | Path) -> Iterator[EvalRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield loads_record(line)
            except SchemaError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None


def read_records(path: str | Path) -> list[EvalRecord]:
    return list(iter_records(path))


def write_records(path: str | Path, records: Iterable[EvalRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")
