"""Deterministic synthetic legal QA corpus plus scripted chat fixtures.

Every query group is a fictional appellate case. Grounded responses copy
context sentences verbatim; each ungrounded response substitutes one field
in one sentence with a value absent from the context, so lexical detectors
separate the classes. The substitution category fixes the error type used
by the annotator fixtures.

Chat fixtures are derived lexically: a response sentence counts as
supported iff its normalized text is one of the context sentences.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .dataset import SPLIT_NAMES, assign_splits, partition
from .error_analysis import ErrorType
from .model import EvalRecord, Label, Provenance, write_records
from .text import normalize_text, sentences

SEED = 20240611
N_GROUPS = 150
RATIOS = (70, 10, 20)
MAX_SAMPLES = 5  # answer_sample fixtures cover k <= 5

_SURNAMES = [
    "Abbott", "Barlow", "Castillo", "Delgado", "Ellison", "Fairbanks", "Garrity", "Holloway",
    "Ingram", "Jessup", "Kowalski", "Lindqvist", "Moreau", "Nakamura", "Okafor", "Pemberton",
    "Quintero", "Rasmussen", "Sandoval", "Thibodeaux", "Underwood", "Vasquez", "Whitlock", "Yamamoto",
]
_COMPANIES = [
    "Apex Freight", "Bluewater Mills", "Cedar Holdings", "Dunmore Chemical", "Eastgate Realty",
    "Foxglove Pharma", "Granite Mutual", "Harbor Logistics", "Ironwood Energy", "Juniper Foods",
    "Keystone Rail", "Lakeshore Bank",
]
_COURTS = [
    "Court of Appeals for the Ninth Circuit", "Court of Appeals for the Second Circuit",
    "Supreme Court of Ohio", "Supreme Court of Vermont", "Appellate Division of New Jersey",
    "Court of Appeals of Oregon",
]
_JUDGES = ["Harlan", "Brennan", "Calloway", "Dawson", "Eastman", "Ferris", "Goldberg", "Hastings"]
_ALT_JUDGES = ["Rutledge", "Sotherby", "Tremaine", "Voorhees"]
_CLAIMS = [
    ("negligence", "state tort law", "a breach of the duty of care"),
    ("breach of warranty", "the state commercial code", "a defect present at delivery"),
    ("nuisance", "state property law", "a substantial interference with use of land"),
    ("fraud", "state common law", "a knowingly false statement of material fact"),
    ("trespass", "state property law", "an intentional entry onto the land of another"),
    ("conversion", "state common law", "an unauthorized exercise of ownership over goods"),
]
_ALT_TERMS = {
    "negligence": "strict liability",
    "breach of warranty": "promissory estoppel",
    "nuisance": "adverse possession",
    "fraud": "unjust enrichment",
    "trespass": "easement by necessity",
    "conversion": "replevin",
}
_ALT_LAW = ["federal admiralty law", "federal securities law", "international treaty law"]
_CONDUCT = [
    "failed to secure a loading ramp", "shipped contaminated grain", "diverted runoff onto a farm",
    "misstated the condition of a warehouse", "stored equipment on a neighboring lot",
    "sold pledged inventory without consent",
]
_MOTIONS = [("motion for summary judgment", "motion to compel arbitration"),
            ("directed verdict", "default judgment")]
_OUTCOMES = [("affirmed", "reversed"), ("reversed", "affirmed"), ("vacated", "affirmed")]

# substitution category -> error type, with sampling weights
_CATEGORIES = [
    ("year", ErrorType.FACTUAL_INACCURACIES, 5),
    ("amount", ErrorType.FACTUAL_INACCURACIES, 5),
    ("judge", ErrorType.MISATTRIBUTIONS, 2),
    ("outcome", ErrorType.PROCEDURAL_ERRORS, 2),
    ("motion", ErrorType.PROCEDURAL_ERRORS, 1),
    ("term", ErrorType.TERMINOLOGICAL_ERRORS, 2),
    ("law", ErrorType.CONTEXTUAL_MISINTERPRETATIONS, 2),
    ("reasoning", ErrorType.REASONING_ERRORS, 2),
]


@dataclass(frozen=True)
class _Case:
    name: str
    year: int
    court: str
    claim: str
    law: str
    element: str
    defendant: str
    conduct: str
    motion: tuple[str, str]
    outcome: tuple[str, str]
    judge: str
    amount: int

    def passages(self) -> tuple[str, str]:
        p1 = (
            f"In {self.name}, decided in {self.year}, the {self.court} considered a claim for "
            f"{self.claim} brought under {self.law}. "
            f"The plaintiff alleged that {self.defendant} {self.conduct}. "
            f"The trial court granted a {self.motion[0]} for the defendant. "
            f"On appeal, the {self.court} {self.outcome[0]} that ruling."
        )
        p2 = (
            f"Writing for the panel, Judge {self.judge} explained that {self.claim} requires "
            f"proof of {self.element}. "
            f"The panel noted that the record contained evidence of damages totaling "
            f"${self.amount:,}. "
            f"Later disputes under {self.law} have relied on the opinion."
        )
        return p1, p2


def _case(rng: random.Random, index: int) -> _Case:
    plaintiff = _SURNAMES[index % len(_SURNAMES)]
    defendant = _COMPANIES[(index // len(_SURNAMES) + index) % len(_COMPANIES)]
    claim, law, element = rng.choice(_CLAIMS)
    return _Case(
        name=f"{plaintiff} v. {defendant} ({index + 1})",
        year=rng.randrange(1952, 2020),
        court=rng.choice(_COURTS),
        claim=claim,
        law=law,
        element=element,
        defendant=defendant,
        conduct=_CONDUCT[_CLAIMS.index((claim, law, element))],
        motion=rng.choice(_MOTIONS),
        outcome=rng.choice(_OUTCOMES),
        judge=rng.choice(_JUDGES),
        amount=rng.randrange(20, 900) * 5_000,
    )


# which response sentence each category edits, and how
def _substitution(case: _Case, category: str, rng: random.Random) -> tuple[int, Callable[[str], str]]:
    """Return (context sentence index, edit function) for a category.

    Context sentence indices: 0 intro, 1 allegation, 2 motion, 3 outcome,
    4 judge, 5 damages, 6 later use.
    """
    if category == "year":
        new = case.year + rng.choice([-7, -3, 4, 9])
        return 0, lambda s: s.replace(f"in {case.year},", f"in {new},")
    if category == "amount":
        new = case.amount + rng.choice([-1, 1]) * rng.randrange(1, 9) * 1_000
        return 5, lambda s: s.replace(f"${case.amount:,}", f"${new:,}")
    if category == "judge":
        new = rng.choice(_ALT_JUDGES)
        return 4, lambda s: s.replace(f"Judge {case.judge}", f"Judge {new}")
    if category == "outcome":
        return 3, lambda s: s.replace(f" {case.outcome[0]} ", f" {case.outcome[1]} ")
    if category == "motion":
        return 2, lambda s: s.replace(case.motion[0], case.motion[1])
    if category == "term":
        return 4, lambda s: s.replace(f"that {case.claim} requires", f"that {_ALT_TERMS[case.claim]} requires")
    if category == "law":
        new = rng.choice(_ALT_LAW)
        return 0, lambda s: s.replace(f"under {case.law}.", f"under {new}.")
    if category == "reasoning":
        return 4, lambda s: s.replace("requires proof of", "therefore never requires proof of")
    raise ValueError(category)


def _supported(sentence: str, context_norm: set[str]) -> bool:
    return normalize_text(sentence) in context_norm


@dataclass
class MiniCorpus:
    records: list[EvalRecord]
    fixtures: dict[str, dict[str, str]]
    error_types: dict[str, ErrorType]  # record_id -> intended error type

    def splits(self, seed: int = SEED) -> dict[str, str]:
        return assign_splits(self.records, RATIOS, seed)


def build_minicorpus(n_groups: int = N_GROUPS, seed: int = SEED) -> MiniCorpus:
    rng = random.Random(seed)
    fixtures: dict[str, dict[str, str]] = {
        t: {}
        for t in (
            "direct_prompt", "triplet_extract", "triplet_check", "answer_sample", "claims_extract",
            "claims_verify", "synth_adapt", "error_types", "error_types_alt",
        )
    }
    records: list[EvalRecord] = []
    error_types: dict[str, ErrorType] = {}
    cats = [c for c, _, _ in _CATEGORIES]
    weights = [w for _, _, w in _CATEGORIES]
    etype = {c: e for c, e, _ in _CATEGORIES}

    for g in range(n_groups):
        case = _case(rng, g)
        context = case.passages()
        ctx_sents = [s for p in context for s in sentences(p)]
        assert len(ctx_sents) == 7, ctx_sents
        category = rng.choices(cats, weights)[0]
        target, edit = _substitution(case, category, rng)
        others = [i for i in range(7) if i != target]
        picked = sorted([target] + rng.sample(others, 2))
        grounded_sents = [ctx_sents[i] for i in picked]
        pos = picked.index(target)
        altered = edit(grounded_sents[pos])
        assert altered != grounded_sents[pos], (category, grounded_sents[pos])
        ungrounded_sents = list(grounded_sents)
        ungrounded_sents[pos] = altered

        qid = f"q{g:04d}"
        query = f"What did the {case.court} decide in {case.name}?"
        gid = f"{qid}-r0"
        grounded = EvalRecord(gid, qid, query, context, " ".join(grounded_sents), Label.GROUNDED)
        ungrounded = EvalRecord(
            f"{gid}-adapted", qid, query, context, " ".join(ungrounded_sents), Label.UNGROUNDED,
            Provenance.SYNTHETIC_ADAPTATION, frozenset({pos}),
        )
        records += [grounded, ungrounded]
        error_types[ungrounded.record_id] = etype[category]

        ctx_norm = {normalize_text(s) for s in ctx_sents}
        fixtures["synth_adapt"][gid] = ungrounded.response
        fixtures["claims_extract"][f"{qid}#source"] = json.dumps(ctx_sents)
        for j in range(MAX_SAMPLES):
            rot = j % len(grounded_sents)
            fixtures["answer_sample"][f"{qid}#s{j}"] = " ".join(grounded_sents[rot:] + grounded_sents[:rot])

        for rec, sents in ((grounded, grounded_sents), (ungrounded, ungrounded_sents)):
            rid = rec.record_id
            ok = [_supported(s, ctx_norm) for s in sents]
            verdict = "PASS" if all(ok) else "FAIL"
            fixtures["direct_prompt"][rid] = json.dumps(
                {"REASONING": ["compared each answer sentence with the document"], "SCORE": verdict}
            )
            triplets = []
            for i, s in enumerate(sents):
                words = s.rstrip(".").split()
                triplets.append({"subject": " ".join(words[:3]), "predicate": "states", "object": " ".join(words[3:])})
                fixtures["triplet_check"][f"{rid}#t{i}"] = "Entailment" if ok[i] else "Contradiction"
            fixtures["triplet_extract"][rid] = json.dumps(triplets)
            fixtures["claims_extract"][f"{rid}#answer"] = json.dumps(sents)
            fixtures["claims_verify"][rid] = json.dumps(["Supported" if x else "Contradicted" for x in ok])

        # annotators: A names the intended type; B mostly agrees, sometimes adds or diverges
        true_type = etype[category]
        uid = ungrounded.record_id
        fixtures["error_types"][uid] = json.dumps([true_type.value])
        roll = g % 10
        if roll in (1, 4, 7):
            extra = ErrorType.REASONING_ERRORS if true_type is not ErrorType.REASONING_ERRORS else ErrorType.FACTUAL_INACCURACIES
            b = [true_type.display_name, extra.display_name]
        elif roll == 9:
            b = [ErrorType.CONTEXTUAL_MISINTERPRETATIONS.display_name
                 if true_type is not ErrorType.CONTEXTUAL_MISINTERPRETATIONS
                 else ErrorType.TERMINOLOGICAL_ERRORS.display_name]
        else:
            b = [true_type.display_name]
        fixtures["error_types_alt"][uid] = json.dumps(b)

    return MiniCorpus(records, fixtures, error_types)


def write_minicorpus(directory: str | Path, corpus: MiniCorpus | None = None) -> dict[str, Path]:
    """Write minicorpus.jsonl, splits.json, {train,dev,test}.jsonl and chat_fixtures.json."""
    corpus = corpus or build_minicorpus()
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"minicorpus": out / "minicorpus.jsonl", "splits": out / "splits.json", "fixtures": out / "chat_fixtures.json"}
    write_records(paths["minicorpus"], corpus.records)
    assignment = corpus.splits()
    paths["splits"].write_text(json.dumps(assignment, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    parts = partition(corpus.records, assignment)
    for name in SPLIT_NAMES:
        paths[name] = out / f"{name}.jsonl"
        write_records(paths[name], parts.get(name, []))
    paths["fixtures"].write_text(json.dumps(corpus.fixtures, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return paths
