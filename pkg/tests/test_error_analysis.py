import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from groundgate.error_analysis import (
    UNAGREED,
    Annotation,
    BreakdownRow,
    ErrorType,
    aggregate_annotations,
    agreement_rates,
    annotate_errors,
    annotate_record,
    misclassification_breakdown,
    parse_error_types,
    read_annotations,
    render_breakdown,
    write_annotations,
)
from groundgate.errors import AnnotationFailed
from groundgate.model import EvalRecord, Label

from conftest import CountingChat
from error_counts import EXPECTED_PERCENT, error_count_inputs

types_st = st.frozensets(st.sampled_from(list(ErrorType)), min_size=1)


class SeqChat:
    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def chat(self, request):
        self.prompts.append(request.prompt)
        return self.replies.pop(0)


@pytest.fixture
def bad_record():
    return EvalRecord("u1", "q1", "Q?", ("The fee was $10.",), "The fee was $20.", Label.UNGROUNDED)


class TestParse:
    def test_identifiers_and_display_names(self):
        assert ErrorType.parse("FactualInaccuracies") is ErrorType.FACTUAL_INACCURACIES
        assert ErrorType.parse(" Reasoning Errors ") is ErrorType.REASONING_ERRORS
        with pytest.raises(ValueError):
            ErrorType.parse("StyleErrors")

    def test_json_array(self):
        assert parse_error_types('Sure: ["Misattributions", "Procedural Errors"]') == {
            ErrorType.MISATTRIBUTIONS,
            ErrorType.PROCEDURAL_ERRORS,
        }

    @pytest.mark.parametrize("text", ["[]", "no json", '[1, 2]', '["StyleErrors"]'])
    def test_rejects(self, text):
        with pytest.raises(ValueError):
            parse_error_types(text)


class TestAnnotate:
    def test_retry_then_success(self, bad_record):
        chat = SeqChat("hmm", '["FactualInaccuracies"]')
        assert annotate_errors(bad_record, chat) == {ErrorType.FACTUAL_INACCURACIES}
        assert len(chat.prompts) == 2

    def test_unknown_type_fails_after_one_retry(self, bad_record):
        chat = SeqChat('["StyleErrors"]', '["StyleErrors"]', '["FactualInaccuracies"]')
        with pytest.raises(AnnotationFailed):
            annotate_errors(bad_record, chat)
        assert len(chat.prompts) == 2

    def test_grounded_rejected(self, simple_record):
        with pytest.raises(ValueError):
            annotate_errors(simple_record, SeqChat("[]"))

    def test_prompt_carries_taxonomy(self, bad_record):
        chat = SeqChat('["FactualInaccuracies"]')
        annotate_errors(bad_record, chat)
        for t in ErrorType:
            assert t.value in chat.prompts[0]

    def test_single_provider_uses_alternate_template(self, dev_records, scripted_chat):
        chat = CountingChat(scripted_chat)
        rec = next(r for r in dev_records if r.gold_label is Label.UNGROUNDED)
        ann = annotate_record(rec, chat)
        assert chat.calls == ["error_types", "error_types_alt"]
        assert ann.annotator_b_mode == "perturbed_template"

    def test_two_providers(self, dev_records, scripted_chat):
        rec = next(r for r in dev_records if r.gold_label is Label.UNGROUNDED)
        a, b = CountingChat(scripted_chat), CountingChat(scripted_chat)
        ann = annotate_record(rec, a, b)
        assert a.calls == b.calls == ["error_types"]
        assert ann.annotator_b_mode == "second_provider"
        assert ann.agreement.exact


class TestAggregation:
    @given(types_st, types_st)
    def test_symmetric(self, a, b):
        assert aggregate_annotations(a, b) == aggregate_annotations(b, a)

    @given(types_st, types_st)
    def test_agreed_is_intersection(self, a, b):
        ag = aggregate_annotations(a, b)
        assert ag.agreed == a & b
        assert ag.exact == (a == b)
        assert ag.overlap == bool(a & b)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_annotations(set(), {ErrorType.MISATTRIBUTIONS})

    def test_rates(self):
        f, r = ErrorType.FACTUAL_INACCURACIES, ErrorType.REASONING_ERRORS
        anns = [Annotation("a", {f}, {f}), Annotation("b", {f}, {f, r}), Annotation("c", {f}, {r})]
        assert agreement_rates(anns) == (1 / 3, 2 / 3)
        assert agreement_rates([]) == (0.0, 0.0)

    def test_sidecar_round_trip(self, tmp_path):
        f, r = ErrorType.FACTUAL_INACCURACIES, ErrorType.REASONING_ERRORS
        anns = [Annotation("a", frozenset({r, f}), frozenset({f}), "perturbed_template")]
        path = tmp_path / "ann.jsonl"
        write_annotations(path, anns)
        row = json.loads(path.read_text())
        assert row["annotator_a"] == ["FactualInaccuracies", "ReasoningErrors"]
        assert row["agreed"] == ["FactualInaccuracies"]
        assert read_annotations(path) == anns


class TestBreakdown:
    def test_known_counts(self):
        rows = misclassification_breakdown(*error_count_inputs())
        assert [r.percentage_text for r in rows] == EXPECTED_PERCENT
        assert rows[0] == BreakdownRow("Terminological Errors", 2, 3)

    def test_unagreed_bucket_last(self):
        f = ErrorType.FACTUAL_INACCURACIES
        rows = misclassification_breakdown({"a": True, "b": False, "c": True}, {"a": {f}, "b": set(), "c": set()})
        assert rows == [BreakdownRow("Factual Inaccuracies", 1, 1), BreakdownRow(UNAGREED, 1, 2)]

    def test_missing_annotation(self):
        with pytest.raises(ValueError):
            misclassification_breakdown({"a": True}, {})

    def test_ties_prefer_larger_total(self):
        f, r = ErrorType.FACTUAL_INACCURACIES, ErrorType.REASONING_ERRORS
        verdicts = {"a": True, "b": True, "c": True}
        rows = misclassification_breakdown(verdicts, {"a": {r}, "b": {f}, "c": {f}})
        assert [x.error_type for x in rows] == ["Factual Inaccuracies", "Reasoning Errors"]

    @given(st.dictionaries(st.text(min_size=1, max_size=4), st.tuples(st.booleans(), st.frozensets(st.sampled_from(list(ErrorType))))))
    def test_totals_property(self, data):
        verdicts = {k: v[0] for k, v in data.items()}
        anns = {k: v[1] for k, v in data.items()}
        rows = misclassification_breakdown(verdicts, anns)
        for row in rows:
            assert 0 <= row.misclassified <= row.total
        assert sum(r.total for r in rows) == sum(max(1, len(t)) for t in anns.values())
        assert sum(r.misclassified for r in rows) == sum(max(1, len(anns[k])) for k, v in verdicts.items() if v)
        typed = [r for r in rows if r.error_type != UNAGREED]
        ratios = [r.misclassified / r.total for r in typed]
        assert ratios == sorted(ratios, reverse=True)

    def test_render(self):
        text = render_breakdown([BreakdownRow("Misattributions", 0, 1)], note="single provider")
        assert text == (
            "| Error Type | Misclassified | Total | Percentage |\n"
            "|:---|---:|---:|---:|\n"
            "| Misattributions | 0 | 1 | 0.0% |\n"
            "\nsingle provider\n"
        )
