"""Choice extraction grammar over free-form completions."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuroagent.evaluation import extract_choice


class TestJsonTier:
    def test_plain_json(self):
        assert extract_choice('{"answer": "B"}', 4) == 1

    def test_json_with_prose(self):
        assert extract_choice('Thinking it over... {"answer": "c"} done.', 4) == 2

    def test_last_json_object_wins(self):
        text = '{"answer": "A"} wait, reconsidering {"answer": "D"}'
        assert extract_choice(text, 4) == 3

    def test_json_beats_prose_patterns(self):
        assert extract_choice('the answer is C. {"answer": "A"}', 4) == 0

    def test_json_invalid_letter(self):
        assert extract_choice('{"answer": "Z"}', 4) is None

    def test_json_letter_out_of_option_range(self):
        assert extract_choice('{"answer": "E"}', 4) is None

    def test_json_letter_with_parenthesis(self):
        assert extract_choice('{"answer": "(B)"}', 4) == 1


class TestProseTier:
    def test_answer_is(self):
        assert extract_choice("The answer is B", 4) == 1

    def test_last_match_wins(self):
        assert extract_choice("I considered A but the correct answer is (D).", 4) == 3

    def test_ambiguous_is_invalid(self):
        assert extract_choice("Either A or B.", 4) is None

    def test_answer_colon(self):
        assert extract_choice("final answer: c", 4) == 2

    def test_parenthesized(self):
        assert extract_choice("The best option here is (A), clearly.", 4) == 0

    def test_standalone_letter_line(self):
        assert extract_choice("after deliberation:\nB\n", 4) == 1

    def test_standalone_letter_with_period(self):
        assert extract_choice("D.", 4) == 3

    def test_repeated_phrase_last_wins(self):
        assert extract_choice("the answer is A ... no, the answer is D", 4) == 3

    def test_out_of_range_letter_ignored(self):
        assert extract_choice("The answer is E", 4) is None
        assert extract_choice("The answer is E", 6) == 4

    def test_bare_prose_invalid(self):
        assert extract_choice("I cannot decide between these options.", 4) is None

    def test_empty_text(self):
        assert extract_choice("", 4) is None


class TestBounds:
    @pytest.mark.parametrize("n", [1, 7, 0])
    def test_option_count_validated(self, n):
        with pytest.raises(ValueError):
            extract_choice("A", n)

    @given(st.text(max_size=300), st.integers(2, 6))
    def test_total_over_arbitrary_text(self, text, n):
        result = extract_choice(text, n)
        assert result is None or 0 <= result < n
