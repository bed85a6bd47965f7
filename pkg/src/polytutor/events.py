"""Event-sourced learner model.

Every change to a learner is an immutable event with a per-learner,
gap-free sequence number; the learner's state is a pure fold over the
event list, so replaying a persisted log always reproduces the live state
exactly.  The log is newline-delimited JSON with canonical (sorted) field
order.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .assessment import KnowledgeLevel, TestInstance, TestPhase, TestResult
from .errors import TutorError
from .styles import LearningStyle, StyleVector


class SequenceGap(TutorError):
    code = "sequence_gap"

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected sequence_no {expected}, got {got}", expected=expected, got=got)
        self.expected = expected
        self.got = got


class UnknownPayload(TutorError):
    code = "unknown_payload"


class EventKind(str, Enum):
    REGISTERED = "registered"
    PROFILE_UPDATED = "profile_updated"
    TEST_ISSUED = "test_issued"
    ANSWER_RECORDED = "answer_recorded"
    TEST_SCORED = "test_scored"
    LESSON_DELIVERED = "lesson_delivered"
    CONCEPT_ADVANCED = "concept_advanced"
    REMEDIATION_STARTED = "remediation_started"


class MasteryStatus(str, Enum):
    NOT_STARTED = "not_started"
    IN_PROGRESS = "in_progress"
    MASTERED = "mastered"


class Phase(str, Enum):
    """Session micro-phases tracked in the fold.

    The *_pending phases sit between a scored test and the next issued
    step; the orchestrator resolves them on the next call.  Course
    completion is derived against the content pack (all concepts
    mastered), not stored.
    """

    NEEDS_PROFILE = "needs_profile"
    READY = "ready"
    AWAITING_PRETEST = "awaiting_pretest"
    LESSON_PENDING = "lesson_pending"
    IN_LESSON = "in_lesson"
    AWAITING_POSTTEST = "awaiting_posttest"
    REMEDIATE_PENDING = "remediate_pending"
    ADVANCE_PENDING = "advance_pending"


class Decision(str, Enum):
    ADVANCE = "advance"
    REMEDIATE = "remediate"


# The advancement bar: every one of (total, conceptual, objective) levels
# must reach it on a post-test.
DEFAULT_ADVANCEMENT_THRESHOLD = KnowledgeLevel.GOOD


@dataclass(frozen=True)
class LearnerEvent:
    sequence_no: int
    learner_id: str
    timestamp: str
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {
            "sequence_no": self.sequence_no,
            "learner_id": self.learner_id,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerEvent":
        try:
            kind = EventKind(data["kind"])
        except (KeyError, ValueError):
            raise UnknownPayload(f"unknown event kind {data.get('kind')!r}") from None
        return cls(
            sequence_no=int(data["sequence_no"]),
            learner_id=str(data["learner_id"]),
            timestamp=str(data["timestamp"]),
            kind=kind,
            payload=dict(data["payload"]),
        )


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class MasteryRecord:
    concept_id: str
    pre_level: KnowledgeLevel | None = None
    post_level: KnowledgeLevel | None = None
    conceptual_level: KnowledgeLevel | None = None
    objective_level: KnowledgeLevel | None = None
    attempts: int = 0
    status: MasteryStatus = MasteryStatus.NOT_STARTED

    def to_dict(self) -> dict:
        return {
            "concept_id": self.concept_id,
            "pre_level": self.pre_level.value if self.pre_level else None,
            "post_level": self.post_level.value if self.post_level else None,
            "conceptual_level": self.conceptual_level.value if self.conceptual_level else None,
            "objective_level": self.objective_level.value if self.objective_level else None,
            "attempts": self.attempts,
            "status": self.status.value,
        }


@dataclass(frozen=True)
class PendingTest:
    phase: TestPhase
    concept_id: str
    instance: TestInstance


@dataclass(frozen=True)
class LearnerState:
    learner_id: str = ""
    language: str = ""
    style: StyleVector | None = None
    mastery: dict[str, MasteryRecord] = field(default_factory=dict)
    seen_questions: dict[str, frozenset[str]] = field(default_factory=dict)
    phase: Phase = Phase.NEEDS_PROFILE
    active_concept: str = ""
    pending_test: PendingTest | None = None
    current_lesson: tuple[str, LearningStyle] | None = None
    last_level: KnowledgeLevel | None = None
    last_sequence_no: int = 0

    def to_dict(self) -> dict:
        return {
            "learner_id": self.learner_id,
            "language": self.language,
            "style": self.style.to_dict() if self.style else None,
            "mastery": {cid: rec.to_dict() for cid, rec in sorted(self.mastery.items())},
            "seen_questions": {
                cid: sorted(ids) for cid, ids in sorted(self.seen_questions.items())
            },
            "phase": self.phase.value,
            "active_concept": self.active_concept,
            "pending_test": (
                {
                    "phase": self.pending_test.phase.value,
                    "concept_id": self.pending_test.concept_id,
                    "instance": self.pending_test.instance.to_dict(),
                }
                if self.pending_test
                else None
            ),
            "current_lesson": (
                [self.current_lesson[0], self.current_lesson[1].value]
                if self.current_lesson
                else None
            ),
            "last_level": self.last_level.value if self.last_level else None,
            "last_sequence_no": self.last_sequence_no,
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def empty_state() -> LearnerState:
    return LearnerState()


def advancement_decision(
    record: MasteryRecord,
    result: TestResult,
    threshold: KnowledgeLevel = DEFAULT_ADVANCEMENT_THRESHOLD,
) -> Decision:
    """Advance when total, conceptual, and objective levels all reach the
    threshold; otherwise remediate (the fold bumps the attempt count)."""
    levels = (result.level, result.conceptual_level, result.objective_level)
    if all(level >= threshold for level in levels):
        return Decision.ADVANCE
    return Decision.REMEDIATE


def record_seen(
    state: LearnerState, concept_id: str, question_ids, reset: bool = False
) -> LearnerState:
    """Grow (or, on reset, replace) a concept's seen-question set."""
    issued = frozenset(question_ids)
    seen = dict(state.seen_questions)
    if reset:
        seen[concept_id] = issued
    else:
        seen[concept_id] = seen.get(concept_id, frozenset()) | issued
    return replace(state, seen_questions=seen)


def _mastery(state: LearnerState, concept_id: str) -> MasteryRecord:
    return state.mastery.get(concept_id, MasteryRecord(concept_id=concept_id))


def _with_mastery(state: LearnerState, record: MasteryRecord) -> LearnerState:
    mastery = dict(state.mastery)
    mastery[record.concept_id] = record
    return replace(state, mastery=mastery)


def apply_event(state: LearnerState, event: LearnerEvent) -> LearnerState:
    """Fold one event into the state.

    Pure function: the input state is never mutated.  Sequence numbers must
    be exactly contiguous; unknown payload kinds are rejected outright.

    Raises:
        SequenceGap: the event is out of order.
        UnknownPayload: unrecognized event kind or malformed payload.
    """
    if event.sequence_no != state.last_sequence_no + 1:
        raise SequenceGap(state.last_sequence_no + 1, event.sequence_no)
    payload = event.payload
    state = replace(state, last_sequence_no=event.sequence_no, learner_id=event.learner_id)

    try:
        if event.kind is EventKind.REGISTERED:
            return replace(state, language=payload["language"], phase=Phase.NEEDS_PROFILE)

        if event.kind is EventKind.PROFILE_UPDATED:
            style = StyleVector.from_dict(payload["style_vector"])
            phase = Phase.READY if state.phase is Phase.NEEDS_PROFILE else state.phase
            return replace(state, style=style, phase=phase)

        if event.kind is EventKind.TEST_ISSUED:
            instance = TestInstance.from_dict(payload["instance"])
            phase = TestPhase(payload["phase"])
            concept_id = payload["concept_id"]
            state = record_seen(
                state, concept_id, instance.question_ids, reset=instance.reset_occurred
            )
            record = _mastery(state, concept_id)
            if record.status is MasteryStatus.NOT_STARTED:
                state = _with_mastery(state, replace(record, status=MasteryStatus.IN_PROGRESS))
            return replace(
                state,
                phase=Phase.AWAITING_PRETEST if phase is TestPhase.PRE_TEST else Phase.AWAITING_POSTTEST,
                active_concept=concept_id,
                pending_test=PendingTest(phase=phase, concept_id=concept_id, instance=instance),
            )

        if event.kind is EventKind.ANSWER_RECORDED:
            # Answers live in the log itself; the per-test outcome lands in
            # the following test_scored event.  Required keys still checked.
            _ = (payload["test_id"], payload["question_id"], payload["correct"])
            return state

        if event.kind is EventKind.TEST_SCORED:
            result = TestResult.from_dict(payload["result"])
            phase = TestPhase(payload["phase"])
            concept_id = payload["concept_id"]
            record = _mastery(state, concept_id)
            if phase is TestPhase.PRE_TEST:
                status = record.status
                if status is MasteryStatus.NOT_STARTED:
                    status = MasteryStatus.IN_PROGRESS
                record = replace(record, pre_level=result.level, status=status)
                state = _with_mastery(state, record)
                return replace(
                    state,
                    phase=Phase.LESSON_PENDING,
                    pending_test=None,
                    last_level=result.level,
                )
            # The advancement bar travels inside the event so replays do not
            # depend on how the service was configured at the time.
            threshold = KnowledgeLevel(
                payload.get("threshold", DEFAULT_ADVANCEMENT_THRESHOLD.value)
            )
            decision = advancement_decision(record, result, threshold)
            mastered = record.status is MasteryStatus.MASTERED or decision is Decision.ADVANCE
            record = replace(
                record,
                post_level=result.level,
                conceptual_level=result.conceptual_level,
                objective_level=result.objective_level,
                attempts=record.attempts + 1,
                status=MasteryStatus.MASTERED if mastered else MasteryStatus.IN_PROGRESS,
            )
            state = _with_mastery(state, record)
            next_phase = (
                Phase.ADVANCE_PENDING if decision is Decision.ADVANCE else Phase.REMEDIATE_PENDING
            )
            return replace(
                state, phase=next_phase, pending_test=None, last_level=result.level
            )

        if event.kind is EventKind.LESSON_DELIVERED:
            style = LearningStyle(payload["style"])
            concept_id = payload["concept_id"]
            return replace(
                state,
                phase=Phase.IN_LESSON,
                active_concept=concept_id,
                current_lesson=(concept_id, style),
            )

        if event.kind is EventKind.CONCEPT_ADVANCED:
            return replace(
                state,
                phase=Phase.READY,
                active_concept=payload["concept_id"],
                current_lesson=None,
            )

        if event.kind is EventKind.REMEDIATION_STARTED:
            # Marks the remediation round in the log; the phase move and
            # attempt count already happened on the failing post-test score.
            _ = (payload["concept_id"], payload["attempt_no"])
            return state
    except (KeyError, ValueError) as exc:
        raise UnknownPayload(f"malformed {event.kind.value} payload: {exc}") from exc

    raise UnknownPayload(f"unhandled event kind {event.kind!r}")


def rebuild(events: list[LearnerEvent]) -> LearnerState:
    """Fold a contiguous, ordered event list from the empty state."""
    state = empty_state()
    for event in events:
        state = apply_event(state, event)
    return state


class EventStore:
    """Append-only NDJSON event log with live per-learner states.

    Appends validate through apply_event before the line is written, so the
    log can never contain an event the fold rejects.  Opening an existing
    log replays it (crash recovery is just a restart).  One lock serializes
    writers; per-learner ordering follows from sequence validation.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._states: dict[str, LearnerState] = {}
        if self.path.exists():
            for learner_id, events in group_by_learner(read_log(self.path)).items():
                self._states[learner_id] = rebuild(events)

    def state(self, learner_id: str) -> LearnerState:
        return self._states.get(learner_id, empty_state())

    def learner_ids(self) -> list[str]:
        return sorted(self._states)

    def next_sequence_no(self, learner_id: str) -> int:
        return self.state(learner_id).last_sequence_no + 1

    def append(self, event: LearnerEvent) -> LearnerState:
        with self._lock:
            new_state = apply_event(self.state(event.learner_id), event)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(event.to_json() + "\n")
            self._states[event.learner_id] = new_state
            return new_state

    def append_all(self, events: list[LearnerEvent]) -> LearnerState:
        state = None
        for event in events:
            state = self.append(event)
        return state


def read_log(path: str | Path) -> list[LearnerEvent]:
    """Parse a whole NDJSON event log."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(LearnerEvent.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise TutorError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
    return events


def group_by_learner(events: list[LearnerEvent]) -> dict[str, list[LearnerEvent]]:
    groups: dict[str, list[LearnerEvent]] = {}
    for event in events:
        groups.setdefault(event.learner_id, []).append(event)
    for learner_events in groups.values():
        learner_events.sort(key=lambda e: e.sequence_no)
    return groups
