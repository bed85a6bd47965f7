"""Tutoring session orchestration.

TutorService glues the other modules together: it authenticates learners,
derives rule-engine facts from the event-sourced state, executes the
emitted pedagogical action (issuing tests, delivering lesson variants,
advancing or remediating), translates outbound text, and appends every
state change to the event log.

The service holds no pedagogical state of its own.  Whatever step is
pending is re-rendered from (LearnerState, ContentPack) alone, which makes
next_step idempotent and the whole service crash-recoverable by log
replay.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from . import events as ev
from .assessment import (
    LEVEL_ORDER,
    KnowledgeLevel,
    MissingAnswer,
    TestPhase,
    TestSpec,
    UnknownQuestion,
    make_test_id,
    score_test,
    select_questions,
)
from .content import (
    ContentPack,
    LessonVariant,
    NoVariant,
    Question,
    UnknownConcept,
    bank_for,
    variant_for,
)
from .errors import TutorError
from .rules import ActionKind, PedagogicalAction, WorkingMemory, default_policy, infer
from .styles import LearningStyle, StyleVector, rotate_style, score_questionnaire
from .translation import (
    AuthFailure,
    BackendUnavailable,
    InvalidLanguage,
    TextTooLong,
    TranslationCache,
    TranslationRequest,
    TranslatorBackend,
    UnsupportedPair,
    backend_from_env,
    cached_translate,
    is_language_code,
)


class NameTaken(TutorError):
    code = "name_taken"


class UnsupportedLanguage(TutorError):
    code = "unsupported_language"


class InvalidCredentials(TutorError):
    code = "invalid_credentials"


class InvalidToken(TutorError):
    code = "invalid_token"


class WrongPhase(TutorError):
    code = "wrong_phase"


class UnknownTest(TutorError):
    code = "unknown_test"


class ContentUnavailable(TutorError):
    code = "content_unavailable"


# API-visible phase names.  The fold's micro-phases collapse onto the
# coarse five-phase machine clients see.
API_PHASES = {
    ev.Phase.NEEDS_PROFILE: "NeedsProfile",
    ev.Phase.READY: "AwaitingPreTest",
    ev.Phase.AWAITING_PRETEST: "AwaitingPreTest",
    ev.Phase.LESSON_PENDING: "InLesson",
    ev.Phase.IN_LESSON: "InLesson",
    ev.Phase.REMEDIATE_PENDING: "InLesson",
    ev.Phase.AWAITING_POSTTEST: "AwaitingPostTest",
    ev.Phase.ADVANCE_PENDING: "AwaitingPreTest",
}

# Hard bound on orchestration cycles per next_step call.  The longest
# legal chain (remediate: mark round, deliver lesson, issue post-test,
# render) takes three action executions.
_MAX_ORCHESTRATION_STEPS = 10

PBKDF2_ITERATIONS = 120_000


def all_mastered(state: ev.LearnerState, pack: ContentPack) -> bool:
    return all(
        state.mastery.get(cid) is not None
        and state.mastery[cid].status is ev.MasteryStatus.MASTERED
        for cid in pack.concepts
    )


def next_concept(state: ev.LearnerState, pack: ContentPack) -> str | None:
    """First unmastered concept in prerequisite order (ties by id)."""
    for cid in pack.concept_order():
        record = state.mastery.get(cid)
        if record is None or record.status is not ev.MasteryStatus.MASTERED:
            return cid
    return None


def api_phase(state: ev.LearnerState, pack: ContentPack) -> str:
    if state.style is not None and all_mastered(state, pack):
        return "Completed"
    return API_PHASES[state.phase]


def build_facts(state: ev.LearnerState, pack: ContentPack) -> WorkingMemory:
    """Project learner state and pack structure into rule-engine facts."""
    active = state.active_concept
    record = state.mastery.get(active)
    lesson_style = state.current_lesson[1] if state.current_lesson else None
    if lesson_style is None and state.style is not None:
        lesson_style = state.style.dominant
    facts: WorkingMemory = {
        ("learner", "profiled"): state.style is not None,
        ("learner", "style"): state.style.dominant.value if state.style else "",
        ("session", "phase"): state.phase.value,
        ("session", "active_concept"): active,
        ("session", "remediation_style"): (
            rotate_style(lesson_style).value if lesson_style else ""
        ),
        ("concept", "attempts"): record.attempts if record else 0,
        ("course", "all_mastered"): all_mastered(state, pack),
        ("course", "next_concept"): next_concept(state, pack) or "",
    }
    return facts


def _level_below(level: KnowledgeLevel) -> KnowledgeLevel:
    return LEVEL_ORDER[max(0, LEVEL_ORDER.index(level) - 1)]


def _default_question_count(pack: ContentPack, concept_id: str, bank_size: int) -> int:
    sections = pack.concepts[concept_id].sections
    return min(max(10, len(sections)), bank_size)


def _derive_seed(base_seed: int, learner_id: str, concept_id: str, phase: str, seq: int) -> int:
    material = f"{base_seed}|{learner_id}|{concept_id}|{phase}|{seq}".encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


_TRANSLATION_FAILURES = (
    BackendUnavailable,
    AuthFailure,
    UnsupportedPair,
    TextTooLong,
    InvalidLanguage,
)


class Renderer:
    """Builds learner-facing payloads, translating text on the way out.

    Pack text is stored per language; a missing target language goes
    through the translator.  A failing translator degrades to the source
    text and flips the payload's "untranslated" flag instead of failing
    the step.
    """

    def __init__(self, pack: ContentPack, backend: TranslatorBackend, cache: TranslationCache):
        self.pack = pack
        self.backend = backend
        self.cache = cache

    def localize(self, localized: dict[str, str], target: str) -> tuple[str, bool]:
        if target in localized:
            return localized[target], False
        if self.pack.default_language in localized:
            source = self.pack.default_language
        else:
            source = sorted(localized)[0]
        text = localized[source]
        try:
            request = TranslationRequest(source=source, target=target, text=text)
            return cached_translate(self.cache, self.backend, request), False
        except _TRANSLATION_FAILURES:
            return text, True

    def _texts(self, entries: list[dict[str, str]], target: str) -> tuple[list[str], bool]:
        out, degraded = [], False
        for entry in entries:
            text, missed = self.localize(entry, target)
            out.append(text)
            degraded = degraded or missed
        return out, degraded

    def test_payload(self, pending: ev.PendingTest, language: str) -> dict:
        concept = self.pack.concepts[pending.concept_id]
        title, degraded = self.localize(concept.title, language)
        questions = []
        for qid in pending.instance.question_ids:
            question = self.pack.questions[qid]
            stem, missed = self.localize(question.stem, language)
            degraded = degraded or missed
            choices, missed = self._texts(list(question.choices), language)
            degraded = degraded or missed
            questions.append({"question_id": qid, "stem": stem, "choices": choices})
        return {
            "kind": "test",
            "phase": pending.phase.value,
            "test_id": pending.instance.test_id,
            "concept_id": pending.concept_id,
            "concept_title": title,
            "seen_reset": pending.instance.reset_occurred,
            "questions": questions,
            "untranslated": degraded,
        }

    def lesson_payload(
        self, variant: LessonVariant, language: str, post_test: dict | None
    ) -> dict:
        concept = self.pack.concepts[variant.concept_id]
        title, degraded = self.localize(concept.title, language)
        blocks = []
        for block in variant.blocks:
            text, missed = self.localize({block.lang: block.text}, language)
            degraded = degraded or missed
            blocks.append(text)
        payload = {
            "kind": "lesson",
            "concept_id": variant.concept_id,
            "concept_title": title,
            "style": variant.style.value,
            "blocks": blocks,
            "untranslated": degraded or (post_test or {}).get("untranslated", False),
        }
        if post_test is not None:
            payload["post_test"] = post_test
        return payload

    def questionnaire_payload(self, language: str) -> dict:
        items, degraded = [], False
        for item in self.pack.questionnaire:
            prompt, missed = self.localize(item.prompt, language)
            degraded = degraded or missed
            items.append({"item_id": item.item_id, "prompt": prompt})
        return {"kind": "questionnaire", "items": items, "untranslated": degraded}

    def completed_payload(self, state: ev.LearnerState) -> dict:
        return {
            "kind": "completed",
            "concepts_mastered": sorted(
                cid
                for cid, rec in state.mastery.items()
                if rec.status is ev.MasteryStatus.MASTERED
            ),
            "untranslated": False,
        }


@dataclass
class ApiSession:
    token: str
    learner_id: str
    created_at: float
    expires_at: float


class TutorService:
    """One service instance per (content pack, event log) pair.

    Per-learner writes are serialized with a per-learner lock; distinct
    learners never contend beyond the store's append lock.
    """

    def __init__(
        self,
        pack: ContentPack,
        store: ev.EventStore,
        *,
        backend: TranslatorBackend | None = None,
        rules=None,
        threshold: KnowledgeLevel = ev.DEFAULT_ADVANCEMENT_THRESHOLD,
        base_seed: int = 0,
        credentials_path: str | Path | None = None,
        token_ttl: float = 86_400.0,
        hash_iterations: int = PBKDF2_ITERATIONS,
        clock=ev.now_iso,
    ):
        self.pack = pack
        self.store = store
        self.threshold = threshold
        self.base_seed = base_seed
        self.token_ttl = token_ttl
        self.hash_iterations = hash_iterations
        self.clock = clock
        self.rules = list(rules) if rules is not None else default_policy()
        self.renderer = Renderer(pack, backend or backend_from_env(), TranslationCache())
        self.credentials_path = Path(
            credentials_path
            if credentials_path is not None
            else store.path.with_name("credentials.json")
        )
        self._credentials = self._load_credentials()
        self._sessions: dict[str, ApiSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- authentication ----------------------------------------------------

    def _load_credentials(self) -> dict:
        if self.credentials_path.exists():
            with open(self.credentials_path, encoding="utf-8") as fh:
                return json.load(fh)
        return {"users": {}}

    def _save_credentials(self) -> None:
        self.credentials_path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.credentials_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self._credentials, fh, sort_keys=True)
        tmp.replace(self.credentials_path)

    def _hash_password(self, password: str, salt: bytes) -> str:
        return hashlib.pbkdf2_hmac(
            "sha256", password.encode(), salt, self.hash_iterations
        ).hex()

    def register(self, name: str, password: str, language: str) -> str:
        if not name or len(name) > 128:
            raise TutorError("name must be 1..128 characters")
        if not is_language_code(language):
            raise UnsupportedLanguage(f"unsupported language {language!r}")
        with self._registry_lock:
            if name in self._credentials["users"]:
                raise NameTaken(f"name {name!r} is already registered")
            learner_id = f"u-{secrets.token_hex(8)}"
            salt = secrets.token_bytes(16)
            self._credentials["users"][name] = {
                "learner_id": learner_id,
                "salt": salt.hex(),
                "hash": self._hash_password(password, salt),
            }
            self._save_credentials()
        self._append(
            learner_id,
            ev.EventKind.REGISTERED,
            {"language": language, "name": name},
        )
        return learner_id

    def login(self, name: str, password: str) -> str:
        entry = self._credentials["users"].get(name)
        if entry is None:
            raise InvalidCredentials("unknown name or wrong password")
        expected = entry["hash"]
        actual = self._hash_password(password, bytes.fromhex(entry["salt"]))
        if not hmac.compare_digest(expected, actual):
            raise InvalidCredentials("unknown name or wrong password")
        return self._mint_token(entry["learner_id"])

    def _mint_token(self, learner_id: str) -> str:
        token = secrets.token_urlsafe(32)
        now = time.time()
        self._sessions[token] = ApiSession(
            token=token,
            learner_id=learner_id,
            created_at=now,
            expires_at=now + self.token_ttl,
        )
        return token

    def authenticate(self, token: str) -> str:
        session = self._sessions.get(token)
        if session is None or session.expires_at < time.time():
            self._sessions.pop(token, None)
            raise InvalidToken("missing, unknown, or expired token")
        return session.learner_id

    def _lock_for(self, learner_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(learner_id, threading.Lock())

    # -- event plumbing ----------------------------------------------------

    def _append(self, learner_id: str, kind: ev.EventKind, payload: dict) -> ev.LearnerState:
        event = ev.LearnerEvent(
            sequence_no=self.store.next_sequence_no(learner_id),
            learner_id=learner_id,
            timestamp=self.clock(),
            kind=kind,
            payload=payload,
        )
        return self.store.append(event)

    # -- questionnaire -----------------------------------------------------

    def questionnaire(self, token: str) -> dict:
        learner_id = self.authenticate(token)
        state = self.store.state(learner_id)
        return self.renderer.questionnaire_payload(
            state.language or self.pack.default_language
        )

    def submit_questionnaire(self, token: str, responses: dict[str, int]) -> dict:
        learner_id = self.authenticate(token)
        vector = score_questionnaire(list(self.pack.questionnaire), responses)
        with self._lock_for(learner_id):
            self._append(
                learner_id,
                ev.EventKind.PROFILE_UPDATED,
                {"style_vector": vector.to_dict()},
            )
        summary = vector.to_dict()
        summary["kind"] = "style_summary"
        return summary

    # -- orchestration -----------------------------------------------------

    def next_step(self, token: str) -> dict:
        learner_id = self.authenticate(token)
        return self.next_step_for_learner(learner_id)

    def next_step_for_learner(self, learner_id: str) -> dict:
        """In-process entry point (token layer and simulator both use it)."""
        with self._lock_for(learner_id):
            state = self.store.state(learner_id)
            for _ in range(_MAX_ORCHESTRATION_STEPS):
                payload = self._render_pending(state)
                if payload is not None:
                    return payload
                facts = build_facts(state, self.pack)
                action, _trace = infer(self.rules, facts)
                state = self._execute(action, state)
            raise TutorError("orchestration did not settle on a pending step")

    def _render_pending(self, state: ev.LearnerState) -> dict | None:
        """Payload for a step that is already pending, or None if the rule
        engine still has work to do."""
        language = state.language or self.pack.default_language
        if state.style is None:
            return self.renderer.questionnaire_payload(language)
        if all_mastered(state, self.pack):
            return self.renderer.completed_payload(state)
        if state.phase is ev.Phase.AWAITING_PRETEST and state.pending_test:
            return self.renderer.test_payload(state.pending_test, language)
        if state.phase is ev.Phase.AWAITING_POSTTEST and state.pending_test:
            post = self.renderer.test_payload(state.pending_test, language)
            if state.current_lesson is None:
                return post
            variant = variant_for(self.pack, state.current_lesson[0], state.current_lesson[1])
            return self.renderer.lesson_payload(variant, language, post)
        return None

    def _execute(self, action: PedagogicalAction, state: ev.LearnerState) -> ev.LearnerState:
        learner_id = state.learner_id
        if action.kind is ActionKind.GIVE_PRE_TEST:
            return self._issue_test(state, action.params["concept"], TestPhase.PRE_TEST)
        if action.kind is ActionKind.GIVE_POST_TEST:
            return self._issue_test(state, action.params["concept"], TestPhase.POST_TEST)
        if action.kind is ActionKind.DELIVER_LESSON:
            return self._deliver_lesson(
                state, action.params["concept"], LearningStyle(action.params["style"])
            )
        if action.kind is ActionKind.REMEDIATE:
            concept_id = action.params["concept"]
            record = state.mastery.get(concept_id)
            state = self._append(
                learner_id,
                ev.EventKind.REMEDIATION_STARTED,
                {
                    "concept_id": concept_id,
                    "attempt_no": record.attempts if record else 0,
                },
            )
            return self._deliver_lesson(
                state, concept_id, LearningStyle(action.params["variant_style"])
            )
        if action.kind is ActionKind.ADVANCE_TO:
            return self._append(
                learner_id,
                ev.EventKind.CONCEPT_ADVANCED,
                {"concept_id": action.params["concept"]},
            )
        if action.kind is ActionKind.END_COURSE:
            # Nothing changes; completion is derived, so no event is owed.
            return state
        raise TutorError(f"unsupported action kind {action.kind!r}")

    def _deliver_lesson(
        self, state: ev.LearnerState, concept_id: str, style: LearningStyle
    ) -> ev.LearnerState:
        try:
            variant = variant_for(self.pack, concept_id, style)
        except (UnknownConcept, NoVariant) as exc:
            raise ContentUnavailable(str(exc)) from exc
        return self._append(
            state.learner_id,
            ev.EventKind.LESSON_DELIVERED,
            {"concept_id": concept_id, "style": variant.style.value},
        )

    def _test_level(
        self, state: ev.LearnerState, concept_id: str, phase: TestPhase
    ) -> KnowledgeLevel:
        record = state.mastery.get(concept_id)
        if phase is TestPhase.PRE_TEST:
            return state.last_level or KnowledgeLevel.AVERAGE
        level = (record.pre_level if record else None) or state.last_level or KnowledgeLevel.AVERAGE
        # Escalated remediation eases the test by one band.
        if record is not None and record.attempts >= 3:
            level = _level_below(level)
        return level

    def _issue_test(
        self, state: ev.LearnerState, concept_id: str, phase: TestPhase
    ) -> ev.LearnerState:
        if concept_id not in self.pack.concepts:
            raise ContentUnavailable(f"unknown concept {concept_id!r}")
        bank = bank_for(self.pack, concept_id)
        if not bank:
            raise ContentUnavailable(f"concept {concept_id!r} has no questions")
        style = state.style.dominant if state.style else LearningStyle.SENSATION_SEEKING
        seq = self.store.next_sequence_no(state.learner_id)
        spec = TestSpec(
            concept_id=concept_id,
            phase=phase,
            question_count=_default_question_count(self.pack, concept_id, len(bank)),
            learner_level=self._test_level(state, concept_id, phase),
            style=style,
            rng_seed=_derive_seed(
                self.base_seed, state.learner_id, concept_id, phase.value, seq
            ),
        )
        seen = state.seen_questions.get(concept_id, frozenset())
        instance = select_questions(bank, spec, seen, now=self.clock())
        return self._append(
            state.learner_id,
            ev.EventKind.TEST_ISSUED,
            {
                "concept_id": concept_id,
                "phase": phase.value,
                "instance": instance.to_dict(),
            },
        )

    # -- answering ---------------------------------------------------------

    def submit_test(self, token: str, test_id: str, answers: dict[str, int]) -> dict:
        learner_id = self.authenticate(token)
        return self.submit_test_for_learner(learner_id, test_id, answers)

    def submit_test_for_learner(
        self, learner_id: str, test_id: str, answers: dict[str, int]
    ) -> dict:
        with self._lock_for(learner_id):
            state = self.store.state(learner_id)
            pending = state.pending_test
            if pending is None:
                raise WrongPhase("no test is awaiting an answer")
            if pending.instance.test_id != test_id:
                raise UnknownTest(f"expected test {pending.instance.test_id!r}")
            bank = bank_for(self.pack, pending.concept_id)
            result = score_test(pending.instance, answers, bank)
            for qid in pending.instance.question_ids:
                self._append(
                    learner_id,
                    ev.EventKind.ANSWER_RECORDED,
                    {
                        "test_id": test_id,
                        "question_id": qid,
                        "choice": answers[qid],
                        "correct": result.correctness[qid],
                    },
                )
            state = self._append(
                learner_id,
                ev.EventKind.TEST_SCORED,
                {
                    "concept_id": pending.concept_id,
                    "phase": pending.phase.value,
                    "result": result.to_dict(),
                    "threshold": self.threshold.value,
                },
            )
        payload = result.to_dict()
        payload["kind"] = "result"
        payload["concept_id"] = pending.concept_id
        payload["phase"] = pending.phase.value
        payload["session_phase"] = api_phase(state, self.pack)
        if pending.phase is TestPhase.POST_TEST:
            record = state.mastery[pending.concept_id]
            decision = ev.advancement_decision(record, result, self.threshold)
            payload["decision"] = decision.value
            payload["attempts"] = record.attempts
        return payload

    # -- reporting ---------------------------------------------------------

    def progress(self, token: str) -> dict:
        learner_id = self.authenticate(token)
        return self.progress_for_learner(learner_id)

    def progress_for_learner(self, learner_id: str) -> dict:
        state = self.store.state(learner_id)
        concepts = []
        for cid in self.pack.concept_order():
            record = state.mastery.get(cid, ev.MasteryRecord(concept_id=cid))
            concepts.append(record.to_dict())
        mastered = sum(
            1 for c in concepts if c["status"] == ev.MasteryStatus.MASTERED.value
        )
        return {
            "kind": "progress",
            "learner_id": learner_id,
            "language": state.language,
            "phase": api_phase(state, self.pack),
            "style": state.style.to_dict() if state.style else None,
            "concepts": concepts,
            "mastered_count": mastered,
            "completed": state.style is not None and all_mastered(state, self.pack),
        }

    # -- chat --------------------------------------------------------------

    def chat_translate(self, token: str, target_language: str, text: str) -> dict:
        learner_id = self.authenticate(token)
        state = self.store.state(learner_id)
        source = state.language or self.pack.default_language
        request = TranslationRequest(source=source, target=target_language, text=text)
        translated = cached_translate(self.renderer.cache, self.renderer.backend, request)
        return {"text": translated, "source": source, "target": target_language}
