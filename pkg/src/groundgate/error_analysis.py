"""Error-type annotation of ungrounded responses by two LLM annotators, and
per-error-type misclassification breakdown of a detector."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .detectors.prompting import FORMAT_REMINDER, extract_json
from .errors import AnnotationFailed
from .model import EvalRecord, Label
from .prompts import PromptTemplate, TemplateStore, format_context, get_template
from .providers import ChatModel, ChatRequest

logger = logging.getLogger(__name__)


class ErrorType(str, enum.Enum):
    FACTUAL_INACCURACIES = "FactualInaccuracies"
    CONTEXTUAL_MISINTERPRETATIONS = "ContextualMisinterpretations"
    PROCEDURAL_ERRORS = "ProceduralErrors"
    REASONING_ERRORS = "ReasoningErrors"
    MISATTRIBUTIONS = "Misattributions"
    TERMINOLOGICAL_ERRORS = "TerminologicalErrors"

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]

    @classmethod
    def parse(cls, name: str) -> "ErrorType":
        """Accepts the identifier ("FactualInaccuracies") or display name ("Factual Inaccuracies")."""
        key = name.strip()
        for member in cls:
            if key in (member.value, member.display_name):
                return member
        raise ValueError(f"unknown error type {name!r}")


_DISPLAY = {
    ErrorType.FACTUAL_INACCURACIES: "Factual Inaccuracies",
    ErrorType.CONTEXTUAL_MISINTERPRETATIONS: "Contextual Misinterpretations",
    ErrorType.PROCEDURAL_ERRORS: "Procedural Errors",
    ErrorType.REASONING_ERRORS: "Reasoning Errors",
    ErrorType.MISATTRIBUTIONS: "Misattributions",
    ErrorType.TERMINOLOGICAL_ERRORS: "Terminological Errors",
}

_DESCRIPTIONS = {
    ErrorType.FACTUAL_INACCURACIES: "a date, number, name, holding or other concrete detail differs from the sources",
    ErrorType.CONTEXTUAL_MISINTERPRETATIONS: "a legal rule is applied to a setting or area of law where it does not belong",
    ErrorType.PROCEDURAL_ERRORS: "the sequence, forum or mechanics of a legal process are described wrongly",
    ErrorType.REASONING_ERRORS: "a conclusion does not follow from, or overreaches, what the sources establish",
    ErrorType.MISATTRIBUTIONS: "a statement, opinion, argument or act is credited to the wrong person or body",
    ErrorType.TERMINOLOGICAL_ERRORS: "a legal term of art is used with the wrong meaning",
}


def taxonomy_text() -> str:
    return "\n".join(f"- {t.value} ({t.display_name}): {t.description}" for t in ErrorType)


def parse_error_types(text: str) -> frozenset[ErrorType]:
    data = extract_json(text, "[")
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise ValueError("expected a JSON array of strings")
    types = frozenset(ErrorType.parse(x) for x in data)
    if not types:
        raise ValueError("annotation names no error type")
    return types


def annotate_errors(
    record: EvalRecord,
    chat: ChatModel,
    annotator_template: Optional[PromptTemplate] = None,
) -> frozenset[ErrorType]:
    """One chat call (plus one retry on a bad reply) returning 1-6 error types."""
    if record.gold_label is not Label.UNGROUNDED:
        raise ValueError("only Ungrounded records can be annotated")
    tpl = annotator_template or get_template("error_types")
    prompt = tpl.render(
        record.record_id,
        taxonomy=taxonomy_text(),
        question=record.query,
        context=format_context(record.context),
        answer=record.response,
    )
    reply = chat.chat(ChatRequest(prompt=prompt))
    try:
        return parse_error_types(reply)
    except ValueError as exc:
        logger.info("%s: bad annotation (%s); retrying once", record.record_id, exc)
    reply = chat.chat(ChatRequest(prompt=prompt + FORMAT_REMINDER))
    try:
        return parse_error_types(reply)
    except ValueError as exc:
        raise AnnotationFailed(f"{record.record_id}: {exc}") from None


class Agreement(NamedTuple):
    agreed: frozenset[ErrorType]
    exact: bool
    overlap: bool


def aggregate_annotations(a: Iterable[ErrorType], b: Iterable[ErrorType]) -> Agreement:
    a, b = frozenset(a), frozenset(b)
    if not a or not b:
        raise ValueError("both annotations must be non-empty")
    agreed = a & b
    return Agreement(agreed, a == b, bool(agreed))


@dataclass(frozen=True)
class Annotation:
    record_id: str
    annotator_a: frozenset[ErrorType]
    annotator_b: frozenset[ErrorType]
    annotator_b_mode: str = "second_provider"

    @property
    def agreement(self) -> Agreement:
        return aggregate_annotations(self.annotator_a, self.annotator_b)

    def to_dict(self) -> dict:
        order = list(ErrorType)
        srt = lambda s: [t.value for t in sorted(s, key=order.index)]  # noqa: E731
        return {
            "record_id": self.record_id,
            "annotator_a": srt(self.annotator_a),
            "annotator_b": srt(self.annotator_b),
            "agreed": srt(self.agreement.agreed),
            "annotator_b_mode": self.annotator_b_mode,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Annotation":
        return cls(
            data["record_id"],
            frozenset(ErrorType.parse(x) for x in data["annotator_a"]),
            frozenset(ErrorType.parse(x) for x in data["annotator_b"]),
            data.get("annotator_b_mode", "second_provider"),
        )


def annotate_record(
    record: EvalRecord,
    chat_a: ChatModel,
    chat_b: Optional[ChatModel] = None,
    templates: Optional[TemplateStore] = None,
) -> Annotation:
    """Two independent annotations.

    With a second provider both annotators use the main template. With only
    one provider the second call goes through a reworded template and the
    annotation is flagged ``perturbed_template``.
    """
    store = templates or TemplateStore()
    a = annotate_errors(record, chat_a, store.get("error_types"))
    if chat_b is not None:
        b = annotate_errors(record, chat_b, store.get("error_types"))
        mode = "second_provider"
    else:
        b = annotate_errors(record, chat_a, store.get("error_types_alt"))
        mode = "perturbed_template"
    return Annotation(record.record_id, a, b, mode)


def agreement_rates(annotations: Sequence[Annotation]) -> tuple[float, float]:
    """(exact-agreement rate, at-least-one-overlap rate)."""
    if not annotations:
        return 0.0, 0.0
    ags = [a.agreement for a in annotations]
    return sum(g.exact for g in ags) / len(ags), sum(g.overlap for g in ags) / len(ags)


def write_annotations(path: str | Path, annotations: Iterable[Annotation]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ann in annotations:
            fh.write(json.dumps(ann.to_dict(), sort_keys=True) + "\n")


def read_annotations(path: str | Path) -> list[Annotation]:
    with open(path, encoding="utf-8") as fh:
        return [Annotation.from_dict(json.loads(line)) for line in fh if line.strip()]


# misclassification breakdown

UNAGREED = "Unagreed"


class BreakdownRow(NamedTuple):
    error_type: str  # ErrorType display name or "Unagreed"
    misclassified: int
    total: int

    @property
    def percentage(self) -> float:
        return 100.0 * self.misclassified / self.total if self.total else 0.0

    @property
    def percentage_text(self) -> str:
        return f"{self.percentage:.1f}%"


def misclassification_breakdown(
    verdicts: Mapping[str, bool],
    annotations: Mapping[str, Iterable[ErrorType]],
) -> list[BreakdownRow]:
    """Per error type: how many gold-Ungrounded records the detector passed as grounded.

    ``verdicts`` maps record_id -> predicted grounded (for gold-Ungrounded
    records); ``annotations`` maps record_id -> agreed error types. A record
    counts once under each of its agreed types; records without agreement go
    to an "Unagreed" bucket listed last.
    """
    missing = [rid for rid in verdicts if rid not in annotations]
    if missing:
        raise ValueError(f"no annotation for records: {missing[:5]}")
    counts: dict[str, list[int]] = {}
    for rid, grounded in verdicts.items():
        types = frozenset(annotations[rid])
        buckets = [t.display_name for t in types] or [UNAGREED]
        for bucket in buckets:
            c = counts.setdefault(bucket, [0, 0])
            c[0] += int(bool(grounded))
            c[1] += 1
    typed = [BreakdownRow(k, m, t) for k, (m, t) in counts.items() if k != UNAGREED]
    order = [t.display_name for t in ErrorType]
    typed.sort(key=lambda r: (-r.misclassified / r.total, -r.total, order.index(r.error_type)))
    if UNAGREED in counts:
        typed.append(BreakdownRow(UNAGREED, *counts[UNAGREED]))
    return typed


def render_breakdown(rows: Sequence[BreakdownRow], note: str = "") -> str:
    lines = [
        "| Error Type | Misclassified | Total | Percentage |",
        "|:---|---:|---:|---:|",
    ]
    lines += [f"| {r.error_type} | {r.misclassified} | {r.total} | {r.percentage_text} |" for r in rows]
    out = "\n".join(lines) + "\n"
    if note:
        out += f"\n{note}\n"
    return out
