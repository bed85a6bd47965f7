"""Deterministic forward-chaining production rules for pedagogy decisions.

Working memory is a set of (subject, attribute) -> scalar facts.  Each
inference cycle matches every rule against the memory snapshot, fires the
matches in (priority desc, rule_id asc) order, applies fact assertions,
and collects emitted pedagogical actions; refraction stops a rule from
firing twice on an identical memory state, so every run reaches a fixpoint
or the iteration cap.

Rules are data.  A content pack may ship its own rule set; ``default_policy``
provides the built-in lesson-cycle pedagogy.  Emitted action parameters may
reference working-memory values with the ``@subject.attribute`` form,
resolved when the rule fires.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import TutorError

Scalar = str | int | bool
WorkingMemory = dict[tuple[str, str], Scalar]

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")


class NoActionEmitted(TutorError):
    code = "no_action_emitted"


class IterationLimitExceeded(TutorError):
    code = "iteration_limit"


class ActionKind(str, Enum):
    GIVE_PRE_TEST = "give_pre_test"
    DELIVER_LESSON = "deliver_lesson"
    GIVE_POST_TEST = "give_post_test"
    REMEDIATE = "remediate"
    ADVANCE_TO = "advance_to"
    END_COURSE = "end_course"


@dataclass(frozen=True)
class PedagogicalAction:
    kind: ActionKind
    params: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Condition:
    subject: str
    attribute: str
    op: str
    value: Scalar


@dataclass(frozen=True)
class AssertFact:
    subject: str
    attribute: str
    value: Scalar


@dataclass(frozen=True)
class EmitAction:
    kind: ActionKind
    params: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Rule:
    rule_id: str
    priority: int
    conditions: tuple[Condition, ...]
    actions: tuple[AssertFact | EmitAction, ...]


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # duplicate_rule | unsatisfiable | dead_rule
    rule_id: str
    detail: str


def _compare(actual: Scalar, op: str, expected: Scalar) -> bool:
    if op == "=":
        return actual == expected
    if op == "!=":
        return actual != expected
    # Ordering applies to ints and to strings of the same type; a type
    # mismatch never matches.
    both_int = (
        isinstance(actual, int)
        and isinstance(expected, int)
        and not isinstance(actual, bool)
        and not isinstance(expected, bool)
    )
    both_str = isinstance(actual, str) and isinstance(expected, str)
    if not (both_int or both_str):
        return False
    if op == "<":
        return actual < expected
    if op == "<=":
        return actual <= expected
    if op == ">":
        return actual > expected
    if op == ">=":
        return actual >= expected
    raise TutorError(f"unknown comparator {op!r}")


def _satisfied(rule: Rule, memory: WorkingMemory) -> bool:
    for cond in rule.conditions:
        key = (cond.subject, cond.attribute)
        if key not in memory:
            return False
        if not _compare(memory[key], cond.op, cond.value):
            return False
    return True


def _resolve_params(params: dict[str, str], memory: WorkingMemory) -> dict[str, str]:
    resolved = {}
    for name, value in params.items():
        if isinstance(value, str) and value.startswith("@"):
            subject, _, attribute = value[1:].partition(".")
            key = (subject, attribute)
            if key not in memory:
                raise TutorError(f"action parameter {value!r} has no matching fact")
            resolved[name] = str(memory[key])
        else:
            resolved[name] = value
    return resolved


def infer(
    rules: list[Rule] | tuple[Rule, ...],
    facts: WorkingMemory,
    max_iterations: int = 100,
) -> tuple[PedagogicalAction, list[str]]:
    """Run forward chaining to a fixpoint and return the winning action.

    Per cycle, the conflict set is every rule whose conditions hold on the
    cycle's memory snapshot and that has not already fired on an identical
    memory state (refraction).  The whole set fires in (priority desc,
    rule_id asc) order; assertions take effect immediately, emissions are
    collected.  The returned action is the emission with the highest
    (priority, rule_id asc) standing; the trace lists fired rule ids in
    firing order.

    Raises:
        NoActionEmitted: fixpoint reached with zero emitted actions.
        IterationLimitExceeded: no fixpoint within max_iterations cycles.
    """
    if max_iterations < 1:
        raise TutorError("max_iterations must be >= 1")
    memory: WorkingMemory = dict(facts)
    fired: set[tuple[str, frozenset]] = set()
    trace: list[str] = []
    emissions: list[tuple[int, str, PedagogicalAction]] = []

    for _ in range(max_iterations):
        snapshot = frozenset(memory.items())
        conflict = [
            rule
            for rule in rules
            if (rule.rule_id, snapshot) not in fired and _satisfied(rule, memory)
        ]
        if not conflict:
            if not emissions:
                raise NoActionEmitted("fixpoint reached without an emitted action")
            best = min(emissions, key=lambda e: (-e[0], e[1]))
            return best[2], trace
        conflict.sort(key=lambda r: (-r.priority, r.rule_id))
        for rule in conflict:
            fired.add((rule.rule_id, snapshot))
            trace.append(rule.rule_id)
            for action in rule.actions:
                if isinstance(action, AssertFact):
                    memory[(action.subject, action.attribute)] = action.value
                else:
                    emissions.append(
                        (
                            rule.priority,
                            rule.rule_id,
                            PedagogicalAction(action.kind, _resolve_params(action.params, memory)),
                        )
                    )
    raise IterationLimitExceeded(f"no fixpoint within {max_iterations} iterations")


def validate_rules(rules: list[Rule] | tuple[Rule, ...]) -> list[Diagnostic]:
    """Static diagnostics: duplicate ids, unsatisfiable condition sets,
    rules with no actions.  Diagnostics never raise."""
    diagnostics: list[Diagnostic] = []
    seen_ids: set[str] = set()
    for rule in rules:
        if rule.rule_id in seen_ids:
            diagnostics.append(Diagnostic("duplicate_rule", rule.rule_id, "rule id reused"))
        seen_ids.add(rule.rule_id)
        if not rule.actions:
            diagnostics.append(
                Diagnostic("dead_rule", rule.rule_id, "rule neither asserts nor emits")
            )
        reason = _unsatisfiable_reason(rule)
        if reason:
            diagnostics.append(Diagnostic("unsatisfiable", rule.rule_id, reason))
    return diagnostics


def _unsatisfiable_reason(rule: Rule) -> str | None:
    """Contradiction check per (subject, attribute) over integer domains.

    Equality/inequality constraints are checked for every value type;
    ordering bounds are solved over the integers.
    """
    by_key: dict[tuple[str, str], list[Condition]] = {}
    for cond in rule.conditions:
        by_key.setdefault((cond.subject, cond.attribute), []).append(cond)
    for (subject, attribute), conds in by_key.items():
        eqs = {c.value for c in conds if c.op == "="}
        neqs = {c.value for c in conds if c.op == "!="}
        if len(eqs) > 1:
            return f"{subject}.{attribute} equals two different values"
        if eqs & neqs:
            return f"{subject}.{attribute} both equals and differs from one value"
        low, high = None, None
        for c in conds:
            if not isinstance(c.value, int) or isinstance(c.value, bool):
                continue
            if c.op == ">":
                low = max(low, c.value + 1) if low is not None else c.value + 1
            elif c.op == ">=":
                low = max(low, c.value) if low is not None else c.value
            elif c.op == "<":
                high = min(high, c.value - 1) if high is not None else c.value - 1
            elif c.op == "<=":
                high = min(high, c.value) if high is not None else c.value
        if low is not None and high is not None and low > high:
            return f"{subject}.{attribute} has an empty integer range"
        if eqs:
            (eq,) = eqs
            if isinstance(eq, int) and not isinstance(eq, bool):
                if low is not None and eq < low:
                    return f"{subject}.{attribute} equality below its lower bound"
                if high is not None and eq > high:
                    return f"{subject}.{attribute} equality above its upper bound"
        if low is not None and high is not None and high - low + 1 <= len(neqs):
            if all(v in neqs for v in range(low, high + 1)):
                return f"{subject}.{attribute} integer range excluded entirely"
    return None


# Fact schema consumed by the built-in policy; the session layer publishes
# exactly these keys (see session.build_facts).
#   learner.profiled       bool
#   learner.style          dominant style tag ("SS".."DLA")
#   session.phase          ready | lesson_pending | in_lesson |
#                          remediate_pending | advance_pending
#   session.active_concept concept id ("" before the first pre-test)
#   session.remediation_style  next style on the fallback ring
#   concept.attempts       post-test attempts for the active concept
#   course.all_mastered    bool
#   course.next_concept    first unmastered concept in prerequisite order


def default_policy() -> list[Rule]:
    """Built-in pedagogy: pre-test, styled lesson, post-test, then advance
    or remediate; the course ends when everything is mastered."""
    return [
        Rule(
            rule_id="end-course",
            priority=100,
            conditions=(Condition("course", "all_mastered", "=", True),),
            actions=(EmitAction(ActionKind.END_COURSE),),
        ),
        Rule(
            rule_id="start-pretest",
            priority=60,
            conditions=(
                Condition("learner", "profiled", "=", True),
                Condition("session", "phase", "=", "ready"),
                Condition("course", "all_mastered", "=", False),
            ),
            actions=(
                EmitAction(ActionKind.GIVE_PRE_TEST, {"concept": "@course.next_concept"}),
            ),
        ),
        Rule(
            rule_id="deliver-lesson",
            priority=60,
            conditions=(Condition("session", "phase", "=", "lesson_pending"),),
            actions=(
                EmitAction(
                    ActionKind.DELIVER_LESSON,
                    {"concept": "@session.active_concept", "style": "@learner.style"},
                ),
            ),
        ),
        Rule(
            rule_id="issue-posttest",
            priority=60,
            conditions=(Condition("session", "phase", "=", "in_lesson"),),
            actions=(
                EmitAction(ActionKind.GIVE_POST_TEST, {"concept": "@session.active_concept"}),
            ),
        ),
        Rule(
            rule_id="remediate",
            priority=60,
            conditions=(Condition("session", "phase", "=", "remediate_pending"),),
            actions=(
                EmitAction(
                    ActionKind.REMEDIATE,
                    {
                        "concept": "@session.active_concept",
                        "variant_style": "@session.remediation_style",
                    },
                ),
            ),
        ),
        Rule(
            rule_id="advance",
            priority=60,
            conditions=(
                Condition("session", "phase", "=", "advance_pending"),
                Condition("course", "all_mastered", "=", False),
            ),
            actions=(
                EmitAction(ActionKind.ADVANCE_TO, {"concept": "@course.next_concept"}),
            ),
        ),
    ]


def rules_from_records(records: list[dict] | tuple[dict, ...]) -> list[Rule]:
    """Build a rule set from pack-file records.

    Record shape:
        id: str
        priority: int
        conditions: [[subject, attribute, op, value], ...]
        actions: [{assert: [subject, attribute, value]} |
                  {emit: <action kind>, params: {...}}, ...]
    """
    rules: list[Rule] = []
    for record in records:
        if "id" not in record:
            raise TutorError(f"rule record missing 'id': {record!r}")
        conditions = []
        for raw in record.get("conditions", []):
            if len(raw) != 4:
                raise TutorError(f"condition needs 4 elements, got {raw!r}")
            subject, attribute, op, value = raw
            if op not in COMPARATORS:
                raise TutorError(f"unknown comparator {op!r}")
            conditions.append(Condition(str(subject), str(attribute), op, value))
        if not conditions:
            raise TutorError(f"rule {record.get('id')!r} has no conditions")
        actions: list[AssertFact | EmitAction] = []
        for raw in record.get("actions", []):
            if "assert" in raw:
                subject, attribute, value = raw["assert"]
                actions.append(AssertFact(str(subject), str(attribute), value))
            elif "emit" in raw:
                try:
                    kind = ActionKind(raw["emit"])
                except ValueError:
                    raise TutorError(f"unknown action kind {raw['emit']!r}") from None
                actions.append(EmitAction(kind, dict(raw.get("params", {}))))
            else:
                raise TutorError(f"action must be 'assert' or 'emit': {raw!r}")
        rules.append(
            Rule(
                rule_id=str(record["id"]),
                priority=int(record.get("priority", 0)),
                conditions=tuple(conditions),
                actions=tuple(actions),
            )
        )
    return rules
