from __future__ import annotations

from functools import lru_cache

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codesim.scoring import (
    EmptyBatch,
    ExtractedAnswer,
    NoParseableAnswers,
    ScoreReport,
    accuracy,
    extract,
    levenshtein,
    mae,
    majority_vote,
    per_loop_delta,
    render_answer,
    summarize,
    tuple_similarity,
)


def naive_lev(a: tuple, b: tuple) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def A(v, method="tags"):
    return ExtractedAnswer(v, method)


# -- extraction ------------------------------------------------------------------


def test_extract_tagged_list():
    got = extract("Therefore, the output of the function is <result>[19, 19, 11, 10, 1024]</result>")
    assert got.value == [19, 19, 11, 10, 1024] and got.method == "tags"


def test_extract_fallback_sentence():
    got = extract("Following the steps, the final value of a4 is 22.")
    assert got.value == 22 and got.method == "fallback_last_literal"


def test_extract_empty():
    assert extract("").method == "failed"
    assert extract("no numbers at all").value is None


def test_extract_ignores_identifier_digits():
    assert extract("so a4 ends up equal to -3, and a2 too").value == -3


def test_two_tag_regions_fall_back():
    got = extract("<result>1</result> or maybe <result>2</result>")
    assert got.method == "fallback_last_literal" and got.value == 2


def test_bare_value_contract():
    assert extract("  -17\n", "bare_value").value == -17
    assert extract("a3 = 8", "bare_value").value == 8


def test_extract_bool():
    assert extract("<result>True</result>").value is True


def test_extract_reads_record_response():
    class Rec:
        response = "<result>5</result>"

    assert extract(Rec()).value == 5


@given(st.one_of(st.integers(-10**6, 10**6), st.lists(st.integers(-1000, 1000), max_size=12), st.booleans()))
def test_extract_round_trip(value):
    got = extract(f"<result>{render_answer(value)}</result>")
    assert got.value == value and got.method == "tags"
    assert extract(f"<result>{render_answer(got.value)}</result>").value == got.value


# -- accuracy / mae --------------------------------------------------------------


def test_accuracy_examples():
    assert accuracy([A(5), A(7)], [5, 7]) == 1.0
    assert accuracy([A(5), A(7)], [5, 9]) == 0.5
    assert accuracy([A(1)] * 27 + [A(0)] * 3, [1] * 30) == 0.9
    assert accuracy([A(None, "failed")], [0]) == 0.0
    with pytest.raises(EmptyBatch):
        accuracy([], [])


def test_accuracy_lists_and_bools():
    assert accuracy([A([1, 2])], [[1, 2]]) == 1.0
    assert accuracy([A(True)], [True]) == 1.0
    assert accuracy([A([1, 2])], [[2, 1]]) == 0.0


def test_mae_examples():
    assert mae([A(5)], [5]) == (0.0, 0)
    assert mae([A(22)], [20]) == (2.0, 0)
    assert mae([A(6), A(None, "failed"), A(4)], [6, 1, 1]) == (1.5, 1)
    with pytest.raises(NoParseableAnswers):
        mae([A(None, "failed")], [3])


# -- tuple similarity ------------------------------------------------------------


def test_similarity_examples():
    assert tuple_similarity(A([1, 2, 3, 4, 5]), [1, 2, 3, 4, 5]) == 1.0
    assert tuple_similarity(A([-1024, 1024, -1, 21, -20]), [-1024, 1024, 1, 21, -20]) == pytest.approx(0.8)
    truth = sorted(list(range(36)) + [58] * 4)
    lazy = list(truth)
    lazy.remove(58)
    assert tuple_similarity(A(lazy), truth) == pytest.approx(0.975)
    assert tuple_similarity(A(None, "failed"), [1]) == 0.0
    with pytest.raises(ValueError):
        tuple_similarity(A([1]), [])


def test_similarity_scalar_is_one_tuple():
    assert tuple_similarity(A(3), 3) == 1.0
    assert tuple_similarity(A(3), 4) == 0.0


@given(st.lists(st.integers(0, 3), max_size=8), st.lists(st.integers(0, 3), max_size=8))
def test_levenshtein_matches_naive(a, b):
    assert levenshtein(a, b) == naive_lev(tuple(a), tuple(b))


@given(st.lists(st.integers(0, 2), max_size=6), st.lists(st.integers(0, 2), min_size=1, max_size=6))
def test_similarity_in_unit_interval(a, t):
    assert 0.0 <= tuple_similarity(A(a), t) <= 1.0


# -- delta -----------------------------------------------------------------------


def test_delta_examples():
    rep = per_loop_delta([A([1, 2, 3])], [[1, 2, 3]])
    assert rep.delta == 0 and rep.predicted_accuracy == 1
    answers = [A([0, 1, 1, 1, 1]), A([1, 0, 1, 1, 1])]
    rep = per_loop_delta(answers, [[1] * 5] * 2)
    assert rep.delta == pytest.approx(0.2)
    assert rep.observed_accuracy == 0
    assert rep.predicted_accuracy == pytest.approx(0.8**5)
    with pytest.raises(EmptyBatch):
        per_loop_delta([], [])


# -- voting ----------------------------------------------------------------------


def test_majority_examples():
    assert majority_vote([A(7), A(7), A(9)]).answer.value == 7
    assert majority_vote([A(7), A(9), A(9)]).answer.value == 9
    v = majority_vote([A(7), A(8), A(9)])
    assert v.answer.value == 7 and v.tie_broken
    with pytest.raises(ValueError):
        majority_vote([A(1)])


def test_majority_skips_failures():
    v = majority_vote([A(None, "failed"), A(None, "failed"), A(4)])
    assert v.answer.value == 4


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=9))
def test_majority_member_of_input(values):
    answers = [A(v) for v in values]
    assert majority_vote(answers).answer in answers


# -- reports ---------------------------------------------------------------------


def test_report_rates_and_merge():
    rows = [(A(5), 5), (A(6), 5), (A(None, "failed"), 5), (A([1, 2]), [1, 3])]
    rep = summarize(rows)
    assert rep.n == 4 and rep.correct == 1 and rep.unparsed == 1
    assert rep.mae == 0.5 and rep.mae_excluded == 1
    a, b = summarize(rows[:2]), summarize(rows[2:])
    assert (a + b) == rep == (b + a)
    assert rep.to_dict()["similarity_normalisation"] == "max_length"


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=20), st.randoms())
def test_report_permutation_invariant(pairs, rnd):
    rows = [(A(a), t) for a, t in pairs]
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    r1, r2 = summarize(rows), summarize(shuffled)
    assert r1.to_dict() == r2.to_dict()
    assert 0 <= r1.accuracy <= 1 and 0 <= r1.tuple_similarity <= 1
    assert r1.accuracy == r1.correct / r1.n


def test_empty_report():
    rep = ScoreReport()
    assert rep.accuracy == 0.0 and rep.mae is None and rep.delta is None
