"""Test generation and scoring.

Builds pre- and post-tests from a concept's question bank under three
selection rules (no repetition, full section coverage, difficulty mix
centered on the learner's level), scores submitted answers with weighted
normalization to 0..100, and classifies scores into the five knowledge
bands.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import TutorError
from .styles import LearningStyle

if TYPE_CHECKING:
    from .content import Question


class KnowledgeLevel(str, Enum):
    """Five ordered knowledge bands on the 0..100 score scale."""

    WEAK = "weak"
    AVERAGE = "average"
    GOOD = "good"
    VERY_GOOD = "very_good"
    EXCELLENT = "excellent"

    @property
    def rank(self) -> int:
        return LEVEL_ORDER.index(self)

    def __lt__(self, other):
        if isinstance(other, KnowledgeLevel):
            return self.rank < other.rank
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, KnowledgeLevel):
            return self.rank <= other.rank
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, KnowledgeLevel):
            return self.rank > other.rank
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, KnowledgeLevel):
            return self.rank >= other.rank
        return NotImplemented


LEVEL_ORDER: tuple[KnowledgeLevel, ...] = (
    KnowledgeLevel.WEAK,
    KnowledgeLevel.AVERAGE,
    KnowledgeLevel.GOOD,
    KnowledgeLevel.VERY_GOOD,
    KnowledgeLevel.EXCELLENT,
)

# Question difficulty uses the same five-band scale as learner knowledge,
# which is what makes level-adaptive selection a direct comparison.
DifficultyLevel = KnowledgeLevel

# (level, inclusive low, inclusive high), highest band first.
SCORE_BANDS: tuple[tuple[KnowledgeLevel, int, int], ...] = (
    (KnowledgeLevel.EXCELLENT, 86, 100),
    (KnowledgeLevel.VERY_GOOD, 71, 85),
    (KnowledgeLevel.GOOD, 51, 70),
    (KnowledgeLevel.AVERAGE, 31, 50),
    (KnowledgeLevel.WEAK, 0, 30),
)


class EvalKind(str, Enum):
    """Whether a question probes the lesson's concept or its topic."""

    CONCEPTUAL = "conceptual"
    OBJECTIVE = "objective"


class TestPhase(str, Enum):
    PRE_TEST = "pre_test"
    POST_TEST = "post_test"


class OutOfRange(TutorError):
    code = "out_of_range"


class EmptyBank(TutorError):
    code = "empty_bank"


class InfeasibleCount(TutorError):
    code = "infeasible_count"


class MissingAnswer(TutorError):
    code = "missing_answer"

    def __init__(self, question_id: str):
        super().__init__(f"no answer for question {question_id!r}", question_id=question_id)
        self.question_id = question_id


class UnknownQuestion(TutorError):
    code = "unknown_question"

    def __init__(self, question_id: str):
        super().__init__(f"question {question_id!r} is not part of this test", question_id=question_id)
        self.question_id = question_id


@dataclass(frozen=True)
class TestSpec:
    """Everything select_questions needs to build one test deterministically."""

    concept_id: str
    phase: TestPhase
    question_count: int
    learner_level: KnowledgeLevel
    style: LearningStyle
    rng_seed: int


@dataclass(frozen=True)
class TestInstance:
    """An issued test: ordered presentation sequence plus weight snapshot."""

    test_id: str
    question_ids: tuple[str, ...]
    score_weights: dict[str, int]
    issued_at: str
    reset_occurred: bool = False

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "question_ids": list(self.question_ids),
            "score_weights": dict(self.score_weights),
            "issued_at": self.issued_at,
            "reset_occurred": self.reset_occurred,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestInstance":
        return cls(
            test_id=data["test_id"],
            question_ids=tuple(data["question_ids"]),
            score_weights={k: int(v) for k, v in data["score_weights"].items()},
            issued_at=data["issued_at"],
            reset_occurred=bool(data["reset_occurred"]),
        )


@dataclass(frozen=True)
class TestResult:
    """Scored test with total and per-eval-kind sub-scores and levels."""

    test_id: str
    correctness: dict[str, bool]
    total_score: int
    conceptual_score: int
    objective_score: int
    level: KnowledgeLevel
    conceptual_level: KnowledgeLevel
    objective_level: KnowledgeLevel

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "correctness": dict(self.correctness),
            "total_score": self.total_score,
            "conceptual_score": self.conceptual_score,
            "objective_score": self.objective_score,
            "level": self.level.value,
            "conceptual_level": self.conceptual_level.value,
            "objective_level": self.objective_level.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestResult":
        return cls(
            test_id=data["test_id"],
            correctness={k: bool(v) for k, v in data["correctness"].items()},
            total_score=int(data["total_score"]),
            conceptual_score=int(data["conceptual_score"]),
            objective_score=int(data["objective_score"]),
            level=KnowledgeLevel(data["level"]),
            conceptual_level=KnowledgeLevel(data["conceptual_level"]),
            objective_level=KnowledgeLevel(data["objective_level"]),
        )


def classify_level(score: int) -> KnowledgeLevel:
    """Map an integer score 0..100 to its knowledge band.

    Bands: 86-100 excellent, 71-85 very_good, 51-70 good, 31-50 average,
    0-30 weak.

    Raises:
        OutOfRange: score is not an integer in [0, 100].
    """
    if not isinstance(score, int) or isinstance(score, bool) or not 0 <= score <= 100:
        raise OutOfRange(f"score must be an integer in [0, 100], got {score!r}")
    for level, low, high in SCORE_BANDS:
        if low <= score <= high:
            return level
    raise AssertionError("score bands must partition [0, 100]")


def target_level_counts(learner_level: KnowledgeLevel, count: int) -> dict[KnowledgeLevel, int]:
    """Difficulty-mix targets: 50% at the learner's level, 25% one band above,
    25% one band below, clamped at the scale ends (clamped shares fold into
    the at-level bucket).

    Integer split: above = below = count // 4, the remainder stays at-level.
    """
    idx = learner_level.rank
    n_above = count // 4
    n_below = count // 4
    n_at = count - n_above - n_below
    above_idx = min(idx + 1, len(LEVEL_ORDER) - 1)
    below_idx = max(idx - 1, 0)
    if above_idx == idx:
        n_at += n_above
        n_above = 0
    if below_idx == idx:
        n_at += n_below
        n_below = 0
    targets: dict[KnowledgeLevel, int] = {learner_level: n_at}
    if n_above:
        targets[LEVEL_ORDER[above_idx]] = targets.get(LEVEL_ORDER[above_idx], 0) + n_above
    if n_below:
        targets[LEVEL_ORDER[below_idx]] = targets.get(LEVEL_ORDER[below_idx], 0) + n_below
    return targets


def _target_slots(learner_level: KnowledgeLevel, count: int) -> list[int]:
    """Target levels as ranks, at-level slots first, then above, then below."""
    idx = learner_level.rank
    counts = target_level_counts(learner_level, count)
    slots = [idx] * counts.get(learner_level, 0)
    above = min(idx + 1, len(LEVEL_ORDER) - 1)
    below = max(idx - 1, 0)
    if above != idx:
        slots += [above] * counts.get(LEVEL_ORDER[above], 0)
    if below != idx:
        slots += [below] * counts.get(LEVEL_ORDER[below], 0)
    return slots


def make_test_id(spec: TestSpec) -> str:
    return f"t-{spec.concept_id}-{spec.phase.value}-{spec.rng_seed & 0xFFFFFFFFFFFFFFFF:016x}"


def select_questions(
    bank: Sequence["Question"],
    spec: TestSpec,
    already_seen: Iterable[str],
    *,
    now: str | None = None,
) -> TestInstance:
    """Select ``spec.question_count`` questions from the bank.

    Selection rules, in order of application:

    1. No repetition: only questions outside ``already_seen`` are eligible.
       If the unseen pool cannot satisfy the count, the history is ignored
       for this selection and ``reset_occurred`` is set on the instance so
       the caller can reset the learner's seen set.
    2. Section coverage: when the count is at least the number of sections
       that have an eligible question, every such section contributes at
       least one question.
    3. Difficulty mix: target 50/25/25 around ``spec.learner_level`` (see
       target_level_counts), matched as closely as the pool allows by a
       greedy nearest-level pass.

    The pool is shuffled with ``spec.rng_seed`` before the greedy pass, so
    identical inputs always produce the identical instance; the returned
    question order is the presentation sequence.

    Raises:
        EmptyBank: the bank has no questions.
        InfeasibleCount: question_count exceeds the bank size.
    """
    if not bank:
        raise EmptyBank(f"no questions available for concept {spec.concept_id!r}")
    if spec.question_count < 1:
        raise InfeasibleCount("question_count must be >= 1")
    count = spec.question_count
    if count > len(bank):
        raise InfeasibleCount(
            f"requested {count} questions but the bank holds {len(bank)}"
        )

    seen = set(already_seen)
    unseen = [q for q in bank if q.question_id not in seen]
    reset_occurred = len(unseen) < count
    pool = list(bank) if reset_occurred else unseen

    # Canonical order first so caller-supplied bank order never leaks into
    # the result, then the seeded shuffle.
    pool.sort(key=lambda q: q.question_id)
    rng = random.Random(spec.rng_seed)
    rng.shuffle(pool)

    slots = _target_slots(spec.learner_level, count)
    position = {q.question_id: i for i, q in enumerate(pool)}
    remaining = list(pool)
    selected: list[Question] = []

    def best_pair(candidates):
        best = None
        for q in candidates:
            qi = position[q.question_id]
            for si, slot in enumerate(slots):
                key = (abs(q.level.rank - slot), qi, si)
                if best is None or key < best[0]:
                    best = (key, q, si)
        return best

    def take(question, slot_pos: int):
        remaining.remove(question)
        slots.pop(slot_pos)
        selected.append(question)

    # Coverage pass: one question per eligible section, each consuming the
    # nearest open difficulty slot.
    sections: list[str] = []
    for q in pool:
        if q.section_id not in sections:
            sections.append(q.section_id)
    if count >= len(sections):
        for section in sections:
            best = best_pair(q for q in remaining if q.section_id == section)
            if best is not None:
                take(best[1], best[2])

    # Fill pass: globally nearest (question, slot) pair each step.
    while len(selected) < count:
        best = best_pair(remaining)
        take(best[1], best[2])

    issued_at = now if now is not None else datetime.now(timezone.utc).isoformat()
    return TestInstance(
        test_id=make_test_id(spec),
        question_ids=tuple(q.question_id for q in selected),
        score_weights={q.question_id: q.score_weight for q in selected},
        issued_at=issued_at,
        reset_occurred=reset_occurred,
    )


def _normalized(earned: int, maximum: int) -> int:
    """Weighted fraction mapped to 0..100, rounded half up.

    An empty subset (maximum 0) scores 100 by convention: a dimension the
    author chose not to test never blocks advancement.
    """
    if maximum == 0:
        return 100
    return int(100 * earned / maximum + 0.5)


def score_test(
    instance: TestInstance,
    answers: dict[str, int],
    bank: Sequence["Question"],
) -> TestResult:
    """Score submitted answers against the instance's questions.

    Answers must cover exactly the instance's question ids.  The total and
    the per-eval-kind sub-scores all use the same weighted normalization;
    levels come from classify_level.

    Raises:
        MissingAnswer: an instance question has no answer.
        UnknownQuestion: an answer references a question outside the
            instance, or an instance question is missing from the bank.
    """
    by_id = {q.question_id: q for q in bank}
    for qid in instance.question_ids:
        if qid not in answers:
            raise MissingAnswer(qid)
    instance_ids = set(instance.question_ids)
    for qid in answers:
        if qid not in instance_ids:
            raise UnknownQuestion(qid)

    correctness: dict[str, bool] = {}
    earned = {None: 0, EvalKind.CONCEPTUAL: 0, EvalKind.OBJECTIVE: 0}
    maximum = {None: 0, EvalKind.CONCEPTUAL: 0, EvalKind.OBJECTIVE: 0}
    for qid in instance.question_ids:
        question = by_id.get(qid)
        if question is None:
            raise UnknownQuestion(qid)
        weight = instance.score_weights[qid]
        correct = answers[qid] == question.correct_index
        correctness[qid] = correct
        for bucket in (None, question.eval_kind):
            maximum[bucket] += weight
            if correct:
                earned[bucket] += weight

    total = _normalized(earned[None], maximum[None])
    conceptual = _normalized(earned[EvalKind.CONCEPTUAL], maximum[EvalKind.CONCEPTUAL])
    objective = _normalized(earned[EvalKind.OBJECTIVE], maximum[EvalKind.OBJECTIVE])
    return TestResult(
        test_id=instance.test_id,
        correctness=correctness,
        total_score=total,
        conceptual_score=conceptual,
        objective_score=objective,
        level=classify_level(total),
        conceptual_level=classify_level(conceptual),
        objective_level=classify_level(objective),
    )


def evaluation_levels(result: TestResult) -> tuple[KnowledgeLevel, KnowledgeLevel]:
    """The (conceptual, objective) sub-levels of a scored test."""
    return (result.conceptual_level, result.objective_level)
