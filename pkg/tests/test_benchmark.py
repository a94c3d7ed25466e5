"""Dataset model, parsing, and the complexity framework."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuroagent.benchmark import (
    ComplexityProfile,
    Dataset,
    Question,
    Subspecialty,
    adapt_medqa,
    composite_score,
    parse_dataset,
    serialize_dataset,
)
from neuroagent.errors import (
    DuplicateId,
    EmptyOption,
    MalformedRecord,
    ProfileViolation,
    UnknownAnswerKey,
)


def record(**overrides):
    base = {
        "id": "q1",
        "exam_id": "exam1",
        "stem": "A 60-year-old presents with ptosis.",
        "options": ["left", "right", "both", "neither"],
        "correct_index": 2,
    }
    base.update(overrides)
    return base


def as_jsonl(*records):
    return "\n".join(json.dumps(r) for r in records).encode("utf-8")


class TestParseDataset:
    def test_single_valid_record(self):
        ds = parse_dataset(as_jsonl(record()), "board")
        assert len(ds) == 1
        q = ds.questions[0]
        assert q.correct_index == 2
        assert len(q.options) == 4

    def test_out_of_range_answer_is_profile_violation(self):
        with pytest.raises(ProfileViolation):
            parse_dataset(as_jsonl(record(correct_index=4)), "board")

    def test_missing_options_is_malformed(self):
        bad = record()
        del bad["options"]
        with pytest.raises(MalformedRecord) as exc:
            parse_dataset(as_jsonl(bad), "board")
        assert exc.value.line == 1

    def test_five_options_rejected_under_board(self):
        rec = record(options=["a", "b", "c", "d", "e"])
        with pytest.raises(ProfileViolation):
            parse_dataset(as_jsonl(rec), "board")
        ds = parse_dataset(as_jsonl(rec), "generic")
        assert len(ds.questions[0].options) == 5

    def test_duplicate_ids(self):
        with pytest.raises(DuplicateId):
            parse_dataset(as_jsonl(record(), record()), "board")

    def test_duplicate_option_texts_rejected(self):
        with pytest.raises(ProfileViolation):
            parse_dataset(as_jsonl(record(options=["x", "x", "y", "z"])), "board")

    def test_unknown_subspecialty_rejected(self):
        with pytest.raises(MalformedRecord):
            parse_dataset(as_jsonl(record(subspecialty="Podiatry")), "board")

    def test_invalid_json_line(self):
        with pytest.raises(MalformedRecord) as exc:
            parse_dataset(b'{"id": "q1"\nnot json', "generic")
        assert exc.value.line == 1

    def test_parse_order_preserved(self):
        records = [record(id=f"q{i}") for i in range(5)]
        ds = parse_dataset(as_jsonl(*records), "board")
        assert [q.id for q in ds.questions] == [f"q{i}" for i in range(5)]

    def test_labels_parsed(self):
        rec = record(subspecialty="Neuromuscular", complexity={"fkd": 3, "cci": 2, "rc": 1})
        q = parse_dataset(as_jsonl(rec), "board").questions[0]
        assert q.subspecialty is Subspecialty.NEUROMUSCULAR
        assert q.complexity == ComplexityProfile(3, 2, 1)


class TestRoundTrip:
    def test_parse_serialize_identity(self):
        records = [
            record(id="q1", subspecialty="Epilepsy", complexity={"fkd": 1, "cci": 2, "rc": 3}),
            record(id="q2"),
            record(id="q3", options=["a", "b"], correct_index=0),
        ]
        ds = parse_dataset(as_jsonl(*records), "generic", name="t")
        again = parse_dataset(serialize_dataset(ds), "generic", name="t")
        assert again == ds

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=2, max_value=6),
                st.sampled_from(list(Subspecialty) + [None]),
                st.one_of(st.none(), st.tuples(*[st.integers(1, 3)] * 3)),
            ),
            min_size=0,
            max_size=8,
        )
    )
    def test_round_trip_property(self, specs):
        questions = []
        for i, (n_options, sub, levels) in enumerate(specs):
            questions.append(
                Question(
                    id=f"q{i}",
                    exam_id="e",
                    stem=f"stem {i}",
                    options=tuple(f"opt{j}" for j in range(n_options)),
                    correct_index=n_options - 1,
                    subspecialty=sub,
                    complexity=ComplexityProfile(*levels) if levels else None,
                )
            )
        ds = Dataset(name="t", questions=tuple(questions), validation_profile="generic")
        assert parse_dataset(serialize_dataset(ds), "generic", name="t") == ds


class TestComplexity:
    @pytest.mark.parametrize(
        "levels,score", [((3, 3, 3), 9), ((1, 1, 1), 3), ((2, 3, 1), 6)]
    )
    def test_composite_examples(self, levels, score):
        assert composite_score(ComplexityProfile(*levels)) == score

    @given(st.permutations([1, 2, 3]))
    def test_permutation_symmetric(self, levels):
        assert composite_score(ComplexityProfile(*levels)) == 6

    @given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
    def test_monotone_in_each_level(self, fkd, cci, rc):
        base = composite_score(ComplexityProfile(fkd, cci, rc))
        if fkd < 3:
            assert composite_score(ComplexityProfile(fkd + 1, cci, rc)) > base
        if cci < 3:
            assert composite_score(ComplexityProfile(fkd, cci + 1, rc)) > base
        if rc < 3:
            assert composite_score(ComplexityProfile(fkd, cci, rc + 1)) > base

    @pytest.mark.parametrize("levels", [(0, 1, 1), (1, 4, 1), (1, 1, "2")])
    def test_invalid_levels_rejected(self, levels):
        with pytest.raises(ValueError):
            ComplexityProfile(*levels)


class TestSubspecialty:
    def test_all_thirteen_values(self):
        assert len(Subspecialty) == 13

    def test_normalized_matching(self):
        assert Subspecialty.parse("  behavioral &   cognitive NEUROLOGY ") is Subspecialty.BEHAVIORAL_COGNITIVE
        assert Subspecialty.parse("csf circulation disorders") is Subspecialty.CSF_CIRCULATION

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            Subspecialty.parse("Sleep Medicine")

    @given(st.sampled_from(list(Subspecialty)))
    def test_every_label_maps_to_exactly_one_value(self, member):
        assert Subspecialty.parse(member.value) is member
        assert Subspecialty.parse(member.value.upper()) is member


class TestAdaptMedqa:
    def test_four_options_answer_b(self):
        q = adapt_medqa(
            {"question": "Which nerve?", "options": {"A": "vagus", "B": "facial", "C": "ulnar", "D": "median"}, "answer_idx": "B"}
        )
        assert q.correct_index == 1
        assert q.options == ("vagus", "facial", "ulnar", "median")
        assert q.subspecialty is None and q.complexity is None

    def test_answer_e_with_four_options(self):
        with pytest.raises(UnknownAnswerKey):
            adapt_medqa(
                {"question": "x", "options": {"A": "a", "B": "b", "C": "c", "D": "d"}, "answer_idx": "E"}
            )

    def test_five_options_answer_e(self):
        q = adapt_medqa(
            {"question": "x", "options": {k: f"opt {k}" for k in "ABCDE"}, "answer_idx": "E"}
        )
        assert len(q.options) == 5
        assert q.correct_index == 4

    def test_empty_option(self):
        with pytest.raises(EmptyOption):
            adapt_medqa({"question": "x", "options": {"A": "a", "B": " "}, "answer": "A"})

    def test_deterministic_generated_id(self):
        rec = {"question": "x", "options": {"A": "a", "B": "b"}, "answer": "A"}
        assert adapt_medqa(rec).id == adapt_medqa(rec).id


class TestQuestionInvariants:
    def test_too_few_options(self):
        with pytest.raises(ValueError):
            make_bad_question(options=("only",))

    def test_empty_option_text(self):
        with pytest.raises(ValueError):
            make_bad_question(options=("a", ""))

    def test_answer_index_bound(self):
        with pytest.raises(ValueError):
            make_bad_question(options=("a", "b"), correct_index=2)


def make_bad_question(**overrides):
    fields = dict(id="q", exam_id="e", stem="s", options=("a", "b"), correct_index=0)
    fields.update(overrides)
    return Question(**fields)
