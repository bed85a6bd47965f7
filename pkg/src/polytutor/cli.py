"""Operator command line.

Subcommands:
    validate   load a content pack and its rule set, report diagnostics
    simulate   run a synthetic cohort through the full tutoring loop
    replay     rebuild every learner from an event log and verify invariants
    seed-demo  write the bundled demo pack and glossary
    serve      run the HTTP service

Exit codes: 0 success, 1 validation or invariant failures, 2 I/O problems.
All commands take --format {text,ndjson}; ndjson keeps one JSON object per
line so the output is machine-consumable.
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from . import events as ev
from .assessment import KnowledgeLevel, TestPhase, TestResult
from .cohort import DEFAULT_STEP_CAP, simulate
from .content import PackIOError, load_pack
from .demopack import write_demo_glossary, write_demo_pack
from .errors import TutorError
from .rules import default_policy, rules_from_records, validate_rules

OK, FAIL, IO_ERROR = 0, 1, 2


def _emit(record: dict, fmt: str, stream) -> None:
    if fmt == "ndjson":
        print(json.dumps(record, sort_keys=True, ensure_ascii=False), file=stream)
    else:
        level = record.get("level", "info")
        print(f"{level}: {record.get('detail', '')}", file=stream)


def _load_pack_checked(path: str, fmt: str):
    """Pack plus exit code on failure (None, code) when loading fails."""
    try:
        return load_pack(path), None
    except PackIOError as exc:
        _emit({"level": "error", "kind": exc.code, "detail": str(exc)}, fmt, sys.stderr)
        return None, IO_ERROR
    except TutorError as exc:
        _emit({"level": "error", "kind": exc.code, "detail": str(exc)}, fmt, sys.stderr)
        return None, FAIL


def cmd_validate(args) -> int:
    pack, failure = _load_pack_checked(args.pack, args.format)
    if pack is None:
        return failure
    try:
        rules = (
            rules_from_records(pack.rule_records) if pack.rule_records else default_policy()
        )
    except TutorError as exc:
        _emit({"level": "error", "kind": exc.code, "detail": str(exc)}, args.format, sys.stderr)
        return FAIL
    diagnostics = validate_rules(rules)
    for diag in diagnostics:
        _emit(
            {
                "level": "error",
                "kind": diag.kind,
                "rule_id": diag.rule_id,
                "detail": diag.detail,
            },
            args.format,
            sys.stderr,
        )
    summary = {
        "pack_id": pack.pack_id,
        "version": pack.version,
        "concepts": len(pack.concepts),
        "lesson_variants": len(pack.lesson_variants),
        "questions": len(pack.questions),
        "questionnaire_items": len(pack.questionnaire),
        "custom_rules": len(pack.rule_records),
        "diagnostics": len(diagnostics),
    }
    if args.format == "ndjson":
        print(json.dumps(summary, sort_keys=True, ensure_ascii=False))
    else:
        status = "ok" if not diagnostics else "invalid"
        print(
            f"{status}: pack {summary['pack_id']} v{summary['version']}: "
            f"{summary['concepts']} concepts, {summary['questions']} questions, "
            f"{summary['lesson_variants']} lesson variants, "
            f"{summary['questionnaire_items']} questionnaire items"
        )
    return FAIL if diagnostics else OK


def cmd_simulate(args) -> int:
    pack, failure = _load_pack_checked(args.pack, args.format)
    if pack is None:
        return failure
    if args.log:
        log_path = Path(args.log)
    else:
        log_path = Path(tempfile.mkdtemp(prefix="tutor-sim-")) / "events.ndjson"
    try:
        report = simulate(
            pack,
            log_path,
            count=args.count,
            ability=args.ability,
            seed=args.seed,
            step_cap=args.step_cap,
            workers=args.workers,
        )
    except TutorError as exc:
        _emit({"level": "error", "kind": exc.code, "detail": str(exc)}, args.format, sys.stderr)
        return FAIL
    rendered = report.to_ndjson() if args.format == "ndjson" else report.to_text()
    if args.out:
        try:
            Path(args.out).write_text(rendered, encoding="utf-8")
        except OSError as exc:
            _emit({"level": "error", "kind": "io", "detail": str(exc)}, args.format, sys.stderr)
            return IO_ERROR
    else:
        sys.stdout.write(rendered)
    print(f"note: event log written to {log_path}", file=sys.stderr)
    return OK


def verify_log(events: list[ev.LearnerEvent]) -> list[dict]:
    """Replay every learner and collect invariant violations.

    Checks, per learner: contiguous sequence numbers, decodable payloads,
    no post-test score that would regress an already-mastered concept, and
    replay determinism (two independent folds agree byte-for-byte).
    """
    violations = []
    for learner_id, learner_events in sorted(ev.group_by_learner(events).items()):
        state = ev.empty_state()
        broken = False
        for event in learner_events:
            if (
                event.kind is ev.EventKind.TEST_SCORED
                and event.payload.get("phase") == TestPhase.POST_TEST.value
            ):
                concept_id = event.payload.get("concept_id", "")
                record = state.mastery.get(concept_id)
                try:
                    result = TestResult.from_dict(event.payload["result"])
                    threshold = KnowledgeLevel(
                        event.payload.get(
                            "threshold", ev.DEFAULT_ADVANCEMENT_THRESHOLD.value
                        )
                    )
                except (KeyError, ValueError, TypeError):
                    result = None
                if (
                    record is not None
                    and result is not None
                    and record.status is ev.MasteryStatus.MASTERED
                    and ev.advancement_decision(record, result, threshold)
                    is ev.Decision.REMEDIATE
                ):
                    violations.append(
                        {
                            "invariant": "mastery_monotonicity",
                            "learner_id": learner_id,
                            "sequence_no": event.sequence_no,
                            "detail": (
                                f"concept {concept_id} already mastered but "
                                f"sequence {event.sequence_no} records a failing post-test"
                            ),
                        }
                    )
                    broken = True
                    break
            try:
                state = ev.apply_event(state, event)
            except TutorError as exc:
                violations.append(
                    {
                        "invariant": exc.code,
                        "learner_id": learner_id,
                        "sequence_no": event.sequence_no,
                        "detail": str(exc),
                    }
                )
                broken = True
                break
        if broken:
            continue
        if ev.rebuild(learner_events).to_canonical_json() != state.to_canonical_json():
            violations.append(
                {
                    "invariant": "replay_determinism",
                    "learner_id": learner_id,
                    "detail": "independent folds disagree",
                }
            )
    return violations


def cmd_replay(args) -> int:
    try:
        events = ev.read_log(args.log)
    except OSError as exc:
        _emit({"level": "error", "kind": "io", "detail": str(exc)}, args.format, sys.stderr)
        return IO_ERROR
    except TutorError as exc:
        _emit({"level": "error", "kind": exc.code, "detail": str(exc)}, args.format, sys.stderr)
        return FAIL
    violations = verify_log(events)
    for violation in violations:
        record = {"level": "error", **violation}
        record["detail"] = f"{violation['invariant']}: {violation['detail']}"
        _emit(record, args.format, sys.stderr)
    summary = {
        "events": len(events),
        "learners": len(ev.group_by_learner(events)),
        "violations": len(violations),
    }
    if args.format == "ndjson":
        print(json.dumps(summary, sort_keys=True, ensure_ascii=False))
    else:
        status = "ok" if not violations else "invalid"
        print(
            f"{status}: {summary['events']} events across "
            f"{summary['learners']} learners, {summary['violations']} violations"
        )
    return FAIL if violations else OK


def cmd_seed_demo(args) -> int:
    try:
        pack_dir = write_demo_pack(Path(args.dir) / "pack")
        glossary = write_demo_glossary(Path(args.dir) / "glossary.tsv")
    except OSError as exc:
        _emit({"level": "error", "kind": "io", "detail": str(exc)}, args.format, sys.stderr)
        return IO_ERROR
    if args.format == "ndjson":
        print(
            json.dumps(
                {"pack": str(pack_dir), "glossary": str(glossary)},
                sort_keys=True,
                ensure_ascii=False,
            )
        )
    else:
        print(f"ok: demo pack at {pack_dir}, glossary at {glossary}")
    return OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .session import TutorService

    pack, failure = _load_pack_checked(args.pack, args.format)
    if pack is None:
        return failure
    rules = rules_from_records(pack.rule_records) if pack.rule_records else default_policy()
    store = ev.EventStore(args.log)
    service = TutorService(
        pack,
        store,
        rules=rules,
        threshold=KnowledgeLevel(args.threshold),
        base_seed=args.base_seed,
    )
    uvicorn.run(create_app(service), host=args.host, port=args.port)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tutor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument("--format", choices=["text", "ndjson"], default="text")

    p = sub.add_parser("validate", help="validate a content pack")
    p.add_argument("pack")
    add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a synthetic learner cohort")
    p.add_argument("pack")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--ability", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--step-cap", type=int, default=DEFAULT_STEP_CAP)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--log", help="event log path (default: fresh temp file)")
    add_format(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="verify an event log by replay")
    p.add_argument("log")
    add_format(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("seed-demo", help="write the demo pack and glossary")
    p.add_argument("dir")
    add_format(p)
    p.set_defaults(func=cmd_seed_demo)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("pack")
    p.add_argument("--log", required=True, help="event log path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument(
        "--threshold",
        default=ev.DEFAULT_ADVANCEMENT_THRESHOLD.value,
        choices=[level.value for level in KnowledgeLevel],
        help="advancement threshold band",
    )
    p.add_argument("--base-seed", type=int, default=0)
    add_format(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
