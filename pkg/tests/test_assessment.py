"""Scoring, banding, and question-selection behavior.

The selection checker and the band/score oracles live in oracles.py and
re-derive every expectation independently of the module under test.
"""

import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polytutor.assessment import (
    EmptyBank,
    EvalKind,
    InfeasibleCount,
    KnowledgeLevel,
    LEVEL_ORDER,
    MissingAnswer,
    OutOfRange,
    TestInstance,
    TestPhase,
    TestSpec,
    UnknownQuestion,
    classify_level,
    evaluation_levels,
    score_test,
    select_questions,
    target_level_counts,
)
from polytutor.styles import LearningStyle

from oracles import (
    band_lookup,
    check_selection,
    make_question,
    mix_targets,
    normalized_fraction,
    random_selection_triple,
)


def spec_for(count, level=KnowledgeLevel.AVERAGE, seed=7, phase=TestPhase.PRE_TEST):
    return TestSpec(
        concept_id="c",
        phase=phase,
        question_count=count,
        learner_level=level,
        style=LearningStyle.SENSATION_SEEKING,
        rng_seed=seed,
    )


# -- knowledge bands ---------------------------------------------------------


@pytest.mark.parametrize(
    ("score", "expected"),
    [
        (0, KnowledgeLevel.WEAK),
        (30, KnowledgeLevel.WEAK),
        (31, KnowledgeLevel.AVERAGE),
        (50, KnowledgeLevel.AVERAGE),
        (51, KnowledgeLevel.GOOD),
        (70, KnowledgeLevel.GOOD),
        (71, KnowledgeLevel.VERY_GOOD),
        (85, KnowledgeLevel.VERY_GOOD),
        (86, KnowledgeLevel.EXCELLENT),
        (100, KnowledgeLevel.EXCELLENT),
    ],
)
def test_band_boundaries(score, expected):
    assert classify_level(score) is expected


def test_every_score_matches_band_table():
    for score in range(101):
        assert classify_level(score).value == band_lookup(score)


def test_classification_is_monotone():
    previous = classify_level(0)
    for score in range(1, 101):
        current = classify_level(score)
        assert current >= previous
        previous = current


@pytest.mark.parametrize("bad", [-1, 101, 2.5, "50", True, None, 1000])
def test_classify_rejects_out_of_range(bad):
    with pytest.raises(OutOfRange):
        classify_level(bad)


def test_level_ordering_follows_scale():
    assert list(LEVEL_ORDER) == sorted(LEVEL_ORDER)
    assert KnowledgeLevel.WEAK < KnowledgeLevel.EXCELLENT
    assert not KnowledgeLevel.GOOD < KnowledgeLevel.GOOD
    assert KnowledgeLevel.GOOD <= KnowledgeLevel.GOOD


# -- difficulty-mix targets --------------------------------------------------


def test_mix_targets_middle_band():
    got = target_level_counts(KnowledgeLevel.GOOD, 8)
    assert got == {
        KnowledgeLevel.GOOD: 4,
        KnowledgeLevel.VERY_GOOD: 2,
        KnowledgeLevel.AVERAGE: 2,
    }


def test_mix_targets_fold_at_top():
    got = target_level_counts(KnowledgeLevel.EXCELLENT, 8)
    assert got == {KnowledgeLevel.EXCELLENT: 6, KnowledgeLevel.VERY_GOOD: 2}


def test_mix_targets_fold_at_bottom():
    got = target_level_counts(KnowledgeLevel.WEAK, 8)
    assert got == {KnowledgeLevel.WEAK: 6, KnowledgeLevel.AVERAGE: 2}


@pytest.mark.parametrize("count", range(1, 30))
@pytest.mark.parametrize("level", list(KnowledgeLevel))
def test_mix_targets_match_restated_split(level, count):
    got = target_level_counts(level, count)
    assert got == mix_targets(level, count)
    assert sum(got.values()) == count
    neighbors = {
        LEVEL_ORDER[i]
        for i in (level.rank - 1, level.rank, level.rank + 1)
        if 0 <= i < len(LEVEL_ORDER)
    }
    assert set(got) <= neighbors


def test_small_counts_stay_at_level():
    for count in (1, 2, 3):
        assert target_level_counts(KnowledgeLevel.GOOD, count) == {
            KnowledgeLevel.GOOD: count
        }


# -- selection ---------------------------------------------------------------


def uniform_bank(per_level=4, sections=("s1",)):
    bank = []
    for level in LEVEL_ORDER:
        for i in range(per_level):
            qid = f"q-{level.value}-{i}"
            bank.append(
                make_question(qid, "c", sections[i % len(sections)], level)
            )
    return bank


def test_coverage_one_question_per_section():
    bank = [
        make_question("q1", "c", "s1", KnowledgeLevel.GOOD),
        make_question("q2", "c", "s1", KnowledgeLevel.GOOD),
        make_question("q3", "c", "s2", KnowledgeLevel.GOOD),
        make_question("q4", "c", "s2", KnowledgeLevel.GOOD),
    ]
    instance = select_questions(bank, spec_for(2, KnowledgeLevel.GOOD), set())
    by_id = {q.question_id: q for q in bank}
    assert {by_id[i].section_id for i in instance.question_ids} == {"s1", "s2"}
    assert not instance.reset_occurred


def test_exhausted_history_triggers_flagged_reset():
    bank = [make_question(f"q{i}", "c", "s1", KnowledgeLevel.GOOD) for i in range(3)]
    seen = {"q0", "q1", "q2"}
    instance = select_questions(bank, spec_for(2, KnowledgeLevel.GOOD), seen)
    assert instance.reset_occurred
    assert len(instance.question_ids) == 2


def test_sufficient_history_means_no_reset_and_no_repeats():
    bank = [make_question(f"q{i}", "c", "s1", KnowledgeLevel.GOOD) for i in range(3)]
    instance = select_questions(bank, spec_for(2, KnowledgeLevel.GOOD), {"q0"})
    assert not instance.reset_occurred
    assert "q0" not in instance.question_ids


def test_empty_bank_rejected():
    with pytest.raises(EmptyBank):
        select_questions([], spec_for(1), set())


def test_count_beyond_bank_rejected():
    bank = [make_question("q1", "c", "s1", KnowledgeLevel.GOOD)]
    with pytest.raises(InfeasibleCount):
        select_questions(bank, spec_for(2), set())
    with pytest.raises(InfeasibleCount):
        select_questions(bank, spec_for(0), set())


def test_ample_supply_hits_mix_exactly():
    bank = uniform_bank(per_level=4)
    instance = select_questions(bank, spec_for(8, KnowledgeLevel.GOOD), set())
    by_id = {q.question_id: q for q in bank}
    histogram = Counter(by_id[i].level for i in instance.question_ids)
    assert histogram == Counter(target_level_counts(KnowledgeLevel.GOOD, 8))


def test_selection_ignores_bank_order():
    bank = uniform_bank(per_level=3, sections=("s1", "s2"))
    spec = spec_for(6, KnowledgeLevel.AVERAGE, seed=99)
    forward = select_questions(bank, spec, set(), now="t0")
    backward = select_questions(list(reversed(bank)), spec, set(), now="t0")
    assert forward == backward


def test_selection_is_deterministic_per_seed():
    bank = uniform_bank(per_level=4, sections=("s1", "s2"))
    spec = spec_for(8, KnowledgeLevel.GOOD, seed=5)
    first = select_questions(bank, spec, set(), now="t0")
    second = select_questions(bank, spec, set(), now="t0")
    assert first == second
    other = select_questions(
        bank, spec_for(8, KnowledgeLevel.GOOD, seed=6), set(), now="t0"
    )
    assert other.question_ids != first.question_ids


def test_instance_snapshots_weights():
    bank = [
        make_question("q1", "c", "s1", KnowledgeLevel.GOOD, weight=3),
        make_question("q2", "c", "s1", KnowledgeLevel.GOOD, weight=1),
    ]
    instance = select_questions(bank, spec_for(2, KnowledgeLevel.GOOD), set())
    assert instance.score_weights == {"q1": 3, "q2": 1}


def test_instance_round_trips_through_dict():
    bank = uniform_bank(per_level=2)
    instance = select_questions(bank, spec_for(5, KnowledgeLevel.GOOD), set())
    assert TestInstance.from_dict(instance.to_dict()) == instance


def test_selection_rules_hold_over_random_inputs():
    # 500 randomized (bank, spec, history) triples checked post hoc against
    # the full rule contract, plus bitwise determinism per triple.
    rng = random.Random(0xA55E55)
    for trial in range(500):
        bank, spec, seen = random_selection_triple(rng)
        instance = select_questions(bank, spec, seen, now="t0")
        problems = check_selection(bank, spec, seen, instance)
        assert not problems, f"trial {trial}: {problems}"
        again = select_questions(bank, spec, seen, now="t0")
        assert again == instance, f"trial {trial}: nondeterministic selection"


# -- scoring -----------------------------------------------------------------


def butterfly_bank():
    return [
        make_question("b1", "c", "s1", KnowledgeLevel.GOOD, weight=3, eval_kind=EvalKind.CONCEPTUAL),
        make_question("b2", "c", "s1", KnowledgeLevel.GOOD, weight=1, eval_kind=EvalKind.OBJECTIVE),
    ]


def instance_over(bank, **kwargs):
    spec = spec_for(len(bank), KnowledgeLevel.GOOD, **kwargs)
    return select_questions(bank, spec, set(), now="t0")


def test_all_correct_scores_hundred():
    bank = butterfly_bank()
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 0, "b2": 0}, bank)
    assert result.total_score == 100
    assert result.level is KnowledgeLevel.EXCELLENT
    assert all(result.correctness.values())


def test_all_wrong_scores_zero():
    bank = butterfly_bank()
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 1, "b2": 2}, bank)
    assert result.total_score == 0
    assert result.level is KnowledgeLevel.WEAK
    assert not any(result.correctness.values())


def test_weighted_partial_credit():
    # Correct 3-weight question out of weights 3+1: 100*3/4 = 75.
    bank = butterfly_bank()
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 0, "b2": 1}, bank)
    assert result.total_score == 75
    assert result.level is KnowledgeLevel.VERY_GOOD
    assert result.correctness == {"b1": True, "b2": False}


def test_eval_kind_subscores_split():
    bank = butterfly_bank()
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 0, "b2": 1}, bank)
    assert result.conceptual_score == 100
    assert result.objective_score == 0
    assert evaluation_levels(result) == (KnowledgeLevel.EXCELLENT, KnowledgeLevel.WEAK)


def test_untested_eval_kind_scores_hundred():
    bank = [
        make_question("b1", "c", "s1", KnowledgeLevel.GOOD, eval_kind=EvalKind.CONCEPTUAL),
    ]
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 1}, bank)
    assert result.total_score == 0
    assert result.objective_score == 100
    assert result.objective_level is KnowledgeLevel.EXCELLENT


def test_missing_answer_rejected():
    bank = butterfly_bank()
    instance = instance_over(bank)
    with pytest.raises(MissingAnswer) as exc:
        score_test(instance, {"b1": 0}, bank)
    assert exc.value.question_id == "b2"


def test_extra_answer_rejected():
    bank = butterfly_bank()
    instance = instance_over(bank)
    with pytest.raises(UnknownQuestion):
        score_test(instance, {"b1": 0, "b2": 0, "ghost": 0}, bank)


def test_instance_question_missing_from_bank_rejected():
    bank = butterfly_bank()
    instance = instance_over(bank)
    with pytest.raises(UnknownQuestion):
        score_test(instance, {"b1": 0, "b2": 0}, bank[:1])


def test_result_round_trips_through_dict():
    bank = butterfly_bank()
    instance = instance_over(bank)
    result = score_test(instance, {"b1": 0, "b2": 1}, bank)
    from polytutor.assessment import TestResult

    assert TestResult.from_dict(result.to_dict()) == result


@st.composite
def scored_submissions(draw):
    n = draw(st.integers(min_value=1, max_value=12))
    bank = []
    for i in range(n):
        bank.append(
            make_question(
                f"q{i:02d}",
                "c",
                draw(st.sampled_from(["s1", "s2"])),
                draw(st.sampled_from(list(KnowledgeLevel))),
                weight=draw(st.integers(min_value=1, max_value=3)),
                eval_kind=draw(st.sampled_from(list(EvalKind))),
            )
        )
    answers = {q.question_id: draw(st.integers(min_value=0, max_value=2)) for q in bank}
    return bank, answers


@settings(max_examples=200, deadline=None)
@given(scored_submissions())
def test_scores_match_exact_arithmetic(case):
    # Recompute every score with Fractions; integer rounding must agree.
    bank, answers = case
    instance = instance_over(bank, seed=11)
    result = score_test(instance, answers, bank)

    earned = {None: 0, EvalKind.CONCEPTUAL: 0, EvalKind.OBJECTIVE: 0}
    maximum = {None: 0, EvalKind.CONCEPTUAL: 0, EvalKind.OBJECTIVE: 0}
    for q in bank:
        correct = answers[q.question_id] == q.correct_index
        assert result.correctness[q.question_id] == correct
        for bucket in (None, q.eval_kind):
            maximum[bucket] += q.score_weight
            if correct:
                earned[bucket] += q.score_weight

    assert result.total_score == normalized_fraction(earned[None], maximum[None])
    assert result.conceptual_score == normalized_fraction(
        earned[EvalKind.CONCEPTUAL], maximum[EvalKind.CONCEPTUAL]
    )
    assert result.objective_score == normalized_fraction(
        earned[EvalKind.OBJECTIVE], maximum[EvalKind.OBJECTIVE]
    )
    assert result.level.value == band_lookup(result.total_score)
    assert 0 <= result.total_score <= 100


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=40),
    st.integers(min_value=1, max_value=40),
)
def test_rounding_is_half_up(earned, maximum):
    if earned > maximum:
        earned = maximum
    expected = int(Fraction(100 * earned, maximum) + Fraction(1, 2))
    from polytutor.assessment import _normalized

    assert _normalized(earned, maximum) == expected
