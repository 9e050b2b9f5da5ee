"""LLM-prompting detectors: direct verdict, triplet checking, Multi-Gen
self-consistency, ContextNLI, and claim extraction + verification."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass
from statistics import fmean
from typing import Any, Optional, Sequence

from ..errors import DegenerateCase, ExtractionFailed, UnparseableVerdict, VerificationFailed
from ..model import DetectorVerdict, EvalRecord, SamplingConfig, ThresholdConfig
from ..prompts import PromptTemplate, TemplateStore, format_context, get_template
from ..providers import ChatModel, ChatRequest, Judge
from .base import all_rule_verdict, clamp01, context_sentences, ordered_map, response_sentences
from .nli import judgment_matrix

logger = logging.getLogger(__name__)

FORMAT_REMINDER = (
    "\n\nIMPORTANT: your previous reply could not be parsed. Reply with valid JSON only, "
    "exactly in the format requested above, with no other text."
)


@dataclass(frozen=True)
class KnowledgeTriplet:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if not (self.subject.strip() and self.predicate.strip() and self.object.strip()):
            raise ValueError("triplet fields must be non-empty")

    def render(self) -> str:
        return f"{self.subject} | {self.predicate} | {self.object}"


class TripletLabel(str, enum.Enum):
    ENTAILMENT = "Entailment"
    CONTRADICTION = "Contradiction"
    NEUTRAL = "Neutral"


@dataclass(frozen=True)
class Claim:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("claim text must be non-empty")


class ClaimStatus(str, enum.Enum):
    SUPPORTED = "Supported"
    UNSUPPORTED = "Unsupported"
    CONTRADICTED = "Contradicted"


def _tpl(templates: Optional[TemplateStore], template_id: str) -> PromptTemplate:
    return templates.get(template_id) if templates is not None else get_template(template_id)


def _ask(chat: ChatModel, prompt: str, temperature: float = 0.0, seed: Optional[int] = None) -> str:
    return chat.chat(ChatRequest(prompt=prompt, temperature=temperature, seed=seed))


def extract_json(text: str, opener: str) -> Any:
    """First JSON value starting with ``opener`` ('[' or '{') found in ``text``."""
    decoder = json.JSONDecoder()
    pos = text.find(opener)
    while pos != -1:
        try:
            value, _ = decoder.raw_decode(text, pos)
            return value
        except json.JSONDecodeError:
            pos = text.find(opener, pos + 1)
    raise ValueError(f"no JSON value starting with {opener!r}")


# direct prompting

_SCORE_FIELD = re.compile(r"""["']?SCORE["']?\s*[:=]\s*["']?([A-Za-z]+)""", re.I)


def parse_direct_verdict(text: str, pass_token: str = "PASS", fail_token: str = "FAIL") -> bool:
    """True for the pass token, False for the fail token, else :class:`UnparseableVerdict`."""
    tokens = {pass_token.upper(): True, fail_token.upper(): False}
    value: Optional[str] = None
    try:
        obj = extract_json(text, "{")
        if isinstance(obj, dict):
            for k, v in obj.items():
                if k.upper() == "SCORE" and isinstance(v, str):
                    value = v
    except ValueError:
        pass
    if value is None:
        m = _SCORE_FIELD.search(text)
        if m:
            value = m.group(1)
        else:
            value = text.strip().strip(".\"'")
    try:
        return tokens[value.strip().upper()]
    except KeyError:
        raise UnparseableVerdict(text) from None


def direct_detector(
    record: EvalRecord,
    chat: ChatModel,
    prompt_template: Optional[PromptTemplate] = None,
    name: str = "direct",
    templates: Optional[TemplateStore] = None,
) -> DetectorVerdict:
    tpl = prompt_template or _tpl(templates, "direct_prompt")
    prompt = tpl.render(
        record.record_id,
        question=record.query,
        context=format_context(record.context),
        answer=record.response,
    )
    grounded = parse_direct_verdict(
        _ask(chat, prompt), tpl.meta.get("pass_token", "PASS"), tpl.meta.get("fail_token", "FAIL")
    )
    return DetectorVerdict(name, grounded, 1.0 if grounded else 0.0)


# triplets


def _parse_triplets(text: str) -> list[KnowledgeTriplet]:
    data = extract_json(text, "[")
    if not isinstance(data, list):
        raise ValueError("expected a JSON array")
    out = []
    for item in data:
        if isinstance(item, dict):
            fields = (item.get("subject"), item.get("predicate"), item.get("object"))
        elif isinstance(item, list) and len(item) == 3:
            fields = tuple(item)
        else:
            raise ValueError(f"bad triplet entry: {item!r}")
        if not all(isinstance(f, str) for f in fields):
            raise ValueError(f"bad triplet entry: {item!r}")
        out.append(KnowledgeTriplet(*fields))
    return out


def _with_one_retry(chat: ChatModel, prompt: str, parse, failure: type[Exception], what: str):
    """Ask, parse; on a parse failure re-ask once with a format reminder."""
    text = _ask(chat, prompt)
    try:
        return parse(text)
    except ValueError as first:
        logger.info("%s unparseable (%s); reprompting once", what, first)
    text = _ask(chat, prompt + FORMAT_REMINDER)
    try:
        return parse(text)
    except ValueError as exc:
        raise failure(f"{what}: {exc}") from None


def extract_triplets(
    record: EvalRecord, chat: ChatModel, template: Optional[PromptTemplate] = None
) -> list[KnowledgeTriplet]:
    tpl = template or get_template("triplet_extract")
    prompt = tpl.render(record.record_id, question=record.query, answer=record.response)
    return _with_one_retry(chat, prompt, _parse_triplets, ExtractionFailed, "triplet extraction")


_LABEL_WORD = re.compile(r"\b(entailment|contradiction|neutral)\b", re.I)


def parse_triplet_label(text: str) -> Optional[TripletLabel]:
    found = {m.group(1).capitalize() for m in _LABEL_WORD.finditer(text)}
    if len(found) != 1:
        return None
    return TripletLabel(found.pop())


def check_triplet(
    triplet: KnowledgeTriplet,
    context: Sequence[str],
    chat: ChatModel,
    key: str,
    template: Optional[PromptTemplate] = None,
) -> TripletLabel:
    """One chat call with the full, untruncated context."""
    tpl = template or get_template("triplet_check")
    prompt = tpl.render(key, context=format_context(context), triplet=triplet.render())
    text = _ask(chat, prompt)
    label = parse_triplet_label(text)
    if label is None:
        logger.warning("unparseable triplet label for %s: %r; using Neutral", key, text[:120])
        return TripletLabel.NEUTRAL
    return label


def triplet_hallucination_score(labels: Sequence[TripletLabel]) -> float:
    """(#Contradiction + 0.5 * #Neutral) / #triplets; 0 for no triplets."""
    if not labels:
        return 0.0
    contradictions = sum(label is TripletLabel.CONTRADICTION for label in labels)
    neutrals = sum(label is TripletLabel.NEUTRAL for label in labels)
    return (contradictions + 0.5 * neutrals) / len(labels)


def triplet_detector(
    record: EvalRecord,
    chat: ChatModel,
    threshold: ThresholdConfig,
    strict: bool = False,
    parallelism: int = 1,
    name: str = "triplet",
    templates: Optional[TemplateStore] = None,
) -> DetectorVerdict:
    triplets = extract_triplets(record, chat, _tpl(templates, "triplet_extract"))
    if not triplets:
        if strict:
            raise DegenerateCase(f"{record.record_id}: no triplets extracted")
        logger.warning("%s: no triplets extracted; treating as grounded", record.record_id)
    labels = ordered_map(
        lambda it: check_triplet(
            it[1], record.context, chat, f"{record.record_id}#t{it[0]}", _tpl(templates, "triplet_check")
        ),
        list(enumerate(triplets)),
        parallelism,
    )
    score = 1.0 - triplet_hallucination_score(labels)
    return DetectorVerdict(name, score >= threshold.threshold, clamp01(score))


# SelfCheckGPT-style


def generate_samples(
    record: EvalRecord,
    chat: ChatModel,
    sampling: SamplingConfig,
    template: Optional[PromptTemplate] = None,
    parallelism: int = 1,
) -> list[str]:
    tpl = template or get_template("answer_sample")

    def one(j: int) -> str:
        prompt = tpl.render(
            f"{record.query_id}#s{j}", question=record.query, context=format_context(record.context)
        )
        return _ask(chat, prompt, temperature=sampling.temperature, seed=sampling.seed + j)

    return ordered_map(one, list(range(sampling.k)), parallelism)


def multigen_detector(
    record: EvalRecord,
    chat: ChatModel,
    judge: Judge,
    sampling: SamplingConfig,
    threshold: ThresholdConfig,
    parallelism: int = 1,
    name: str = "multigen",
    templates: Optional[TemplateStore] = None,
) -> DetectorVerdict:
    """Sentence score = 1 - mean contradiction against k re-sampled answers."""
    samples = generate_samples(record, chat, sampling, _tpl(templates, "answer_sample"), parallelism)
    sents = response_sentences(record)
    scores = []
    for s in sents:
        h = fmean(judge.judge_pair(sample, s.text).contradict for sample in samples)
        scores.append((s.index, 1.0 - h))
    return all_rule_verdict(name, scores, threshold)


def contextnli_detector(
    record: EvalRecord,
    judge: Judge,
    threshold: ThresholdConfig,
    parallelism: int = 1,
    name: str = "contextnli",
) -> DetectorVerdict:
    """Sentence hallucination = min contradiction over context sentences."""
    matrix = judgment_matrix(
        response_sentences(record), context_sentences(record), judge, "contradict", parallelism
    )
    return all_rule_verdict(name, [(i, 1.0 - min(row)) for i, row in enumerate(matrix)], threshold)


# claims extraction + verification


def _parse_claims(text: str) -> list[Claim]:
    data = extract_json(text, "[")
    if not isinstance(data, list):
        raise ValueError("expected a JSON array")
    claims = []
    for item in data:
        if isinstance(item, dict):
            item = item.get("claim")
        if not isinstance(item, str) or not item.strip():
            raise ValueError(f"bad claim entry: {item!r}")
        claims.append(Claim(item.strip()))
    return claims


def extract_claims(
    text: str, chat: ChatModel, key: str, template: Optional[PromptTemplate] = None
) -> list[Claim]:
    tpl = template or get_template("claims_extract")
    return _with_one_retry(chat, tpl.render(key, text=text), _parse_claims, ExtractionFailed, "claim extraction")


def _numbered(claims: Sequence[Claim]) -> str:
    return "\n".join(f"{i}. {c.text}" for i, c in enumerate(claims, 1)) or "(none)"


def _parse_statuses(text: str, expected: int) -> list[ClaimStatus]:
    data = extract_json(text, "[")
    if not isinstance(data, list):
        raise ValueError("expected a JSON array")
    statuses = []
    for item in data:
        raw = item.get("status") if isinstance(item, dict) else item
        if not isinstance(raw, str):
            raise ValueError(f"bad verification entry: {item!r}")
        try:
            statuses.append(ClaimStatus(raw.strip().capitalize()))
        except ValueError:
            raise ValueError(f"unknown status {raw!r}") from None
    if len(statuses) != expected:
        raise ValueError(f"expected {expected} statuses, got {len(statuses)}")
    return statuses


def verify_claims(
    answer_claims: Sequence[Claim],
    source_claims: Sequence[Claim],
    chat: ChatModel,
    key: str,
    template: Optional[PromptTemplate] = None,
) -> list[tuple[Claim, ClaimStatus]]:
    if not answer_claims:
        return []
    tpl = template or get_template("claims_verify")
    prompt = tpl.render(key, source_claims=_numbered(source_claims), claims=_numbered(answer_claims))
    statuses = _with_one_retry(
        chat, prompt, lambda t: _parse_statuses(t, len(answer_claims)), VerificationFailed, "claim verification"
    )
    return list(zip(answer_claims, statuses))


def claims_detector(
    record: EvalRecord,
    chat: ChatModel,
    strict: bool = False,
    name: str = "claims",
    templates: Optional[TemplateStore] = None,
) -> DetectorVerdict:
    """Ungrounded iff some answer claim is Contradicted (strict: or Unsupported)."""
    extract_tpl = _tpl(templates, "claims_extract")
    source = extract_claims(format_context(record.context), chat, f"{record.query_id}#source", extract_tpl)
    answer = extract_claims(record.response, chat, f"{record.record_id}#answer", extract_tpl)
    if not answer:
        if strict:
            raise DegenerateCase(f"{record.record_id}: no answer claims extracted")
        logger.warning("%s: no answer claims extracted; treating as grounded", record.record_id)
        return DetectorVerdict(name, True, 1.0)
    results = verify_claims(answer, source, chat, record.record_id, _tpl(templates, "claims_verify"))
    failing = {ClaimStatus.CONTRADICTED}
    if strict:
        failing.add(ClaimStatus.UNSUPPORTED)
    grounded = not any(status in failing for _, status in results)
    supported = sum(status is ClaimStatus.SUPPORTED for _, status in results)
    return DetectorVerdict(name, grounded, supported / len(results))
