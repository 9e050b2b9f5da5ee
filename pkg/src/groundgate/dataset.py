"""Corpus construction: dedup, synthetic ungrounded adaptation, grouped
splits, and sentence-pair extraction for training a grounding scorer."""

from __future__ import annotations

import math
import random
from typing import Mapping, NamedTuple, Optional, Sequence

from .errors import RejectedAdaptation
from .model import EvalRecord, Label, Provenance
from .prompts import PromptTemplate, format_context, get_template
from .providers import ChatModel, ChatRequest, Embedder
from .text import normalize_text, segment_sentences

SPLIT_NAMES = ("train", "dev", "test")
DEFAULT_RATIOS = (70, 10, 20)


def dedup_queries(records: Sequence[EvalRecord]) -> list[EvalRecord]:
    """Keep the first record for each normalized query text."""
    seen: set[str] = set()
    out = []
    for rec in records:
        key = normalize_text(rec.query)
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


def parse_ratios(text: str) -> tuple[int, ...]:
    parts = tuple(int(p) for p in text.split(":"))
    if any(p < 0 for p in parts) or sum(parts) != 100:
        raise ValueError(f"ratios must be non-negative and sum to 100, got {text!r}")
    return parts


def split_targets(n_groups: int, ratios: Sequence[int]) -> list[int]:
    """Largest-remainder apportionment of ``n_groups`` over ``ratios``.

    Splits with a positive ratio get at least one group when possible.
    """
    exact = [n_groups * r / sum(ratios) for r in ratios]
    sizes = [math.floor(x) for x in exact]
    by_remainder = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in by_remainder[: n_groups - sum(sizes)]:
        sizes[i] += 1
    for i, r in enumerate(ratios):
        if r > 0 and sizes[i] == 0:
            donor = max(range(len(sizes)), key=lambda j: sizes[j])
            if sizes[donor] > 1:
                sizes[donor] -= 1
                sizes[i] += 1
    return sizes


def assign_splits(
    records: Sequence[EvalRecord],
    ratios: Sequence[int] = DEFAULT_RATIOS,
    seed: int = 0,
    names: Sequence[str] = SPLIT_NAMES,
) -> dict[str, str]:
    """Map each query_id to a split name; whole query groups move together.

    Groups (in first-appearance order) are shuffled with ``seed`` and filled
    greedily into the splits by query count.
    """
    if sum(ratios) != 100:
        raise ValueError("ratios must sum to 100")
    if len(ratios) != len(names):
        raise ValueError("need one name per ratio")
    groups = list(dict.fromkeys(r.query_id for r in records))
    if len(groups) < len(names):
        raise ValueError(f"{len(groups)} query groups cannot fill {len(names)} splits")
    random.Random(seed).shuffle(groups)
    assignment: dict[str, str] = {}
    pos = 0
    for name, size in zip(names, split_targets(len(groups), ratios)):
        for qid in groups[pos : pos + size]:
            assignment[qid] = name
        pos += size
    return assignment


def partition(records: Sequence[EvalRecord], assignment: Mapping[str, str]) -> dict[str, list[EvalRecord]]:
    out: dict[str, list[EvalRecord]] = {name: [] for name in dict.fromkeys(assignment.values())}
    for rec in records:
        out.setdefault(assignment[rec.query_id], []).append(rec)
    return out


def changed_indices(original: str, adapted: str) -> Optional[set[int]]:
    """Sentence positions whose normalized text differs; None if the sentence count changed."""
    a = [normalize_text(s.text) for s in segment_sentences(original)]
    b = [normalize_text(s.text) for s in segment_sentences(adapted)]
    if len(a) != len(b):
        return None
    return {i for i, (x, y) in enumerate(zip(a, b)) if x != y}


def synth_adapt(
    record: EvalRecord,
    chat: ChatModel,
    template: Optional[PromptTemplate] = None,
    temperature: float = 0.0,
) -> EvalRecord:
    """Ask the model for a subtly ungrounded variant of a grounded response.

    Accepted only if between 1 and ceil(half) of the sentences changed.
    """
    if record.gold_label is not Label.GROUNDED:
        raise ValueError("synth_adapt needs a Grounded record")
    tpl = template or get_template("synth_adapt")
    prompt = tpl.render(
        record.record_id, question=record.query, context=format_context(record.context), answer=record.response
    )
    adapted = chat.chat(ChatRequest(prompt=prompt, temperature=temperature)).strip()
    changed = changed_indices(record.response, adapted)
    if changed is None:
        raise RejectedAdaptation(f"{record.record_id}: adaptation changed the number of sentences")
    n = len(segment_sentences(record.response))
    if not changed:
        raise RejectedAdaptation(f"{record.record_id}: adaptation changed nothing")
    if len(changed) > math.ceil(n / 2):
        raise RejectedAdaptation(f"{record.record_id}: adaptation changed {len(changed)} of {n} sentences")
    return EvalRecord(
        record_id=f"{record.record_id}-adapted",
        query_id=record.query_id,
        query=record.query,
        context=record.context,
        response=adapted,
        gold_label=Label.UNGROUNDED,
        provenance=Provenance.SYNTHETIC_ADAPTATION,
        changed_sentence_indices=frozenset(changed),
    )


class FinetunePair(NamedTuple):
    context_sentence: str
    response_sentence: str
    score: float


def build_finetune_pairs(
    grounded: EvalRecord, ungrounded: EvalRecord, embed: Embedder
) -> list[FinetunePair]:
    """Two training pairs per changed sentence.

    The grounded sentence is paired with its most similar context sentence
    and that cosine ``s``; the altered sentence is paired with the same
    context sentence and ``1 - s``.
    """
    from .detectors.similarity import cosine

    if grounded.query_id != ungrounded.query_id:
        raise ValueError("records must share a query_id")
    if not ungrounded.changed_sentence_indices:
        raise ValueError("ungrounded record has no changed_sentence_indices")
    g_sents = [s.text for s in segment_sentences(grounded.response)]
    u_sents = [s.text for s in segment_sentences(ungrounded.response)]
    ctx = [s.text for p in grounded.context for s in segment_sentences(p)]
    ctx_vecs = embed.embed(ctx)
    pairs = []
    for i in sorted(ungrounded.changed_sentence_indices):
        if i >= len(g_sents) or i >= len(u_sents):
            raise ValueError(f"changed index {i} out of range")
        gv = embed.embed([g_sents[i]])[0]
        sims = [cosine(gv, cv) for cv in ctx_vecs]
        best = max(range(len(ctx)), key=lambda j: (sims[j], -j))
        s = min(1.0, max(0.0, sims[best]))
        pairs.append(FinetunePair(ctx[best], g_sents[i], s))
        pairs.append(FinetunePair(ctx[best], u_sents[i], 1.0 - s))
    return pairs
