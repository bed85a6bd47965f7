"""Synthetic-learner cohort simulator.

Drives the full in-process tutoring pipeline (no HTTP, no network
translator) with Bernoulli learners: each answer is correct with
probability equal to the learner's ability.  Given the same pack, cohort
spec, and seed, the produced report is byte-identical, which is what makes
the simulator usable as an acceptance vehicle for the adaptive loop.
"""

from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import events as ev
from .content import ContentPack
from .errors import TutorError
from .session import TutorService
from .styles import STYLE_ORDER, LearningStyle, score_questionnaire
from .translation import IdentityBackend

DEFAULT_STEP_CAP = 10_000


class StepCapExceeded(TutorError):
    code = "step_cap_exceeded"


@dataclass(frozen=True)
class SyntheticLearner:
    learner_id: str
    ability: float
    style_bias: LearningStyle
    language: str = "en"

    def __post_init__(self):
        if not 0.0 <= self.ability <= 1.0:
            raise TutorError(f"ability must be in [0, 1], got {self.ability}")


@dataclass
class CohortReport:
    pack_id: str
    count: int
    ability: float
    seed: int
    step_cap: int
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def to_ndjson(self) -> str:
        lines = [
            json.dumps(
                {
                    "kind": "cohort",
                    "pack_id": self.pack_id,
                    "count": self.count,
                    "ability": self.ability,
                    "seed": self.seed,
                    "step_cap": self.step_cap,
                },
                sort_keys=True,
                ensure_ascii=False,
            )
        ]
        lines += [
            json.dumps({"kind": "learner", **row}, sort_keys=True, ensure_ascii=False)
            for row in self.rows
        ]
        lines.append(
            json.dumps(
                {"kind": "aggregates", **self.aggregates}, sort_keys=True, ensure_ascii=False
            )
        )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = [
            f"cohort: {self.count} learners, ability {self.ability}, "
            f"seed {self.seed}, pack {self.pack_id}"
        ]
        for row in self.rows:
            capped = " (step cap hit)" if row["step_cap_hit"] else ""
            out.append(
                f"  {row['learner_id']}: mastered {row['concepts_mastered']}"
                f"/{row['concepts_total']} in {row['steps']} steps{capped}"
            )
        agg = self.aggregates
        out.append(
            f"mastery rate {agg['mastery_rate']:.3f}, "
            f"mean attempts {agg['mean_attempts']:.3f}"
        )
        return "\n".join(out) + "\n"


def _biased_responses(pack: ContentPack, bias: LearningStyle) -> dict[str, int]:
    """Responses that make ``bias`` the dominant scale of any questionnaire."""
    responses = {}
    for item in pack.questionnaire:
        loads_on_bias = item.scale is bias
        if item.reverse_scored:
            responses[item.item_id] = 1 if loads_on_bias else 5
        else:
            responses[item.item_id] = 5 if loads_on_bias else 1
    return responses


def _learner_rng(seed: int, learner_id: str) -> random.Random:
    material = f"{seed}|{learner_id}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(material).digest()[:8], "big"))


def _admit(service: TutorService, learner: SyntheticLearner) -> None:
    store = service.store
    store.append(
        ev.LearnerEvent(
            sequence_no=store.next_sequence_no(learner.learner_id),
            learner_id=learner.learner_id,
            timestamp=service.clock(),
            kind=ev.EventKind.REGISTERED,
            payload={"language": learner.language},
        )
    )
    vector = score_questionnaire(
        list(service.pack.questionnaire), _biased_responses(service.pack, learner.style_bias)
    )
    store.append(
        ev.LearnerEvent(
            sequence_no=store.next_sequence_no(learner.learner_id),
            learner_id=learner.learner_id,
            timestamp=service.clock(),
            kind=ev.EventKind.PROFILE_UPDATED,
            payload={"style_vector": vector.to_dict()},
        )
    )


def _answer_test(
    service: TutorService, learner: SyntheticLearner, test_payload: dict, rng: random.Random
) -> None:
    answers = {}
    for shown in test_payload["questions"]:
        question = service.pack.questions[shown["question_id"]]
        if rng.random() < learner.ability:
            answers[question.question_id] = question.correct_index
        else:
            answers[question.question_id] = (question.correct_index + 1) % len(question.choices)
    service.submit_test_for_learner(learner.learner_id, test_payload["test_id"], answers)


def _run_learner(
    service: TutorService, learner: SyntheticLearner, seed: int, step_cap: int
) -> dict:
    rng = _learner_rng(seed, learner.learner_id)
    _admit(service, learner)
    steps = 0
    capped = True
    while steps < step_cap:
        payload = service.next_step_for_learner(learner.learner_id)
        steps += 1
        if payload["kind"] == "completed":
            capped = False
            break
        if payload["kind"] == "test":
            test = payload
        elif payload["kind"] == "lesson":
            test = payload["post_test"]
        else:
            raise TutorError(f"simulator cannot act on payload kind {payload['kind']!r}")
        if steps >= step_cap:
            break
        _answer_test(service, learner, test, rng)
        steps += 1

    progress = service.progress_for_learner(learner.learner_id)
    concepts = progress["concepts"]
    mastered = [c["concept_id"] for c in concepts if c["status"] == "mastered"]
    return {
        "learner_id": learner.learner_id,
        "ability": learner.ability,
        "style_bias": learner.style_bias.value,
        "language": learner.language,
        "steps": steps,
        "step_cap_hit": capped,
        "concepts_total": len(concepts),
        "concepts_mastered": len(mastered),
        "mastered": mastered,
        "attempts": {c["concept_id"]: c["attempts"] for c in concepts},
        "final_levels": {
            c["concept_id"]: {
                "post": c["post_level"],
                "conceptual": c["conceptual_level"],
                "objective": c["objective_level"],
            }
            for c in concepts
        },
    }


def _aggregate(rows: list[dict]) -> dict:
    total_slots = sum(row["concepts_total"] for row in rows)
    total_mastered = sum(row["concepts_mastered"] for row in rows)
    attempt_values = [
        attempts
        for row in rows
        for attempts in row["attempts"].values()
        if attempts > 0
    ]
    return {
        "mastery_rate": (total_mastered / total_slots) if total_slots else 0.0,
        "mean_attempts": (
            sum(attempt_values) / len(attempt_values) if attempt_values else 0.0
        ),
        "learners_capped": sum(1 for row in rows if row["step_cap_hit"]),
    }


def build_cohort(
    count: int, ability: float, language: str = "en"
) -> list[SyntheticLearner]:
    """Fixed-ability cohort with style biases cycling through the scales."""
    return [
        SyntheticLearner(
            learner_id=f"sim-{i + 1:04d}",
            ability=ability,
            style_bias=STYLE_ORDER[i % len(STYLE_ORDER)],
            language=language,
        )
        for i in range(count)
    ]


def simulate(
    pack: ContentPack,
    log_path: str | Path,
    *,
    count: int,
    ability: float,
    seed: int,
    step_cap: int = DEFAULT_STEP_CAP,
    language: str = "en",
    workers: int = 1,
) -> CohortReport:
    """Run a cohort through the tutoring loop and aggregate the outcome.

    The event log lands at ``log_path`` (replayable with the verifier);
    the report depends only on (pack, cohort spec, seed), never on wall
    time or worker count.
    """
    if count < 1:
        raise TutorError("cohort count must be >= 1")
    log_path = Path(log_path)
    if log_path.exists() and log_path.stat().st_size > 0:
        raise TutorError(f"refusing to simulate into non-empty event log {log_path}")
    store = ev.EventStore(log_path)
    service = TutorService(pack, store, backend=IdentityBackend(), base_seed=seed)
    cohort = build_cohort(count, ability, language)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda lr: _run_learner(service, lr, seed, step_cap), cohort)
            )
    else:
        rows = [_run_learner(service, lr, seed, step_cap) for lr in cohort]
    rows.sort(key=lambda row: row["learner_id"])
    return CohortReport(
        pack_id=pack.pack_id,
        count=count,
        ability=ability,
        seed=seed,
        step_cap=step_cap,
        rows=rows,
        aggregates=_aggregate(rows),
    )
