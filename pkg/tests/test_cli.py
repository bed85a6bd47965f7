"""Operator CLI: exit codes, output formats, replay verification."""

import json

import pytest

from polytutor.cli import FAIL, IO_ERROR, OK, main
from polytutor.demopack import write_demo_pack
from polytutor.events import read_log


@pytest.fixture
def pack_dir(tmp_path):
    return write_demo_pack(tmp_path / "pack")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- seed-demo ----------------------------------------------------------------


def test_seed_demo_writes_usable_content(tmp_path, capsys):
    code, out, err = run(capsys, "seed-demo", str(tmp_path / "demo"))
    assert code == OK
    assert out.startswith("ok:")
    assert (tmp_path / "demo" / "pack" / "pack.yaml").exists()
    glossary = tmp_path / "demo" / "glossary.tsv"
    assert "کتاب" in glossary.read_text(encoding="utf-8")

    code, out, _ = run(capsys, "validate", str(tmp_path / "demo" / "pack"))
    assert code == OK
    assert out.startswith("ok:")


def test_seed_demo_ndjson(tmp_path, capsys):
    code, out, _ = run(capsys, "seed-demo", str(tmp_path / "demo"), "--format", "ndjson")
    assert code == OK
    record = json.loads(out)
    assert set(record) == {"pack", "glossary"}


# -- validate -----------------------------------------------------------------


def test_validate_ndjson_summary(pack_dir, capsys):
    code, out, err = run(capsys, "validate", str(pack_dir), "--format", "ndjson")
    assert code == OK
    summary = json.loads(out)
    assert summary["concepts"] == 3
    assert summary["questions"] == 45
    assert summary["diagnostics"] == 0
    assert err == ""


def test_validate_missing_pack_is_io_error(tmp_path, capsys):
    code, out, err = run(capsys, "validate", str(tmp_path / "nowhere"))
    assert code == IO_ERROR
    assert "error" in err


def test_validate_corrupt_manifest_is_io_error(pack_dir, capsys):
    manifest = pack_dir / "pack.yaml"
    manifest.write_text("pack_id: [unclosed\n", encoding="utf-8")
    code, _, err = run(capsys, "validate", str(pack_dir))
    assert code == IO_ERROR
    assert err


def test_validate_structural_problem_fails(pack_dir, capsys):
    manifest = pack_dir / "pack.yaml"
    text = manifest.read_text(encoding="utf-8")
    manifest.write_text(
        text.replace("default_language: en", "default_language: English"),
        encoding="utf-8",
    )
    code, _, err = run(capsys, "validate", str(pack_dir))
    assert code == FAIL
    assert err


def test_validate_flags_bad_rules(pack_dir, capsys):
    rules_dir = pack_dir / "rules"
    rules_dir.mkdir()
    (rules_dir / "policy.yaml").write_text(
        json.dumps(
            {
                "rules": [
                    {
                        "id": "impossible",
                        "priority": 5,
                        "conditions": [
                            ["learner", "score", ">", 10],
                            ["learner", "score", "<", 5],
                        ],
                        "actions": [{"emit": "remediate", "params": {}}],
                    }
                ]
            }
        ),
        encoding="utf-8",
    )
    code, out, err = run(capsys, "validate", str(pack_dir), "--format", "ndjson")
    assert code == FAIL
    diagnostics = [json.loads(line) for line in err.splitlines()]
    assert any(d["rule_id"] == "impossible" for d in diagnostics)
    assert json.loads(out)["diagnostics"] >= 1


# -- simulate -----------------------------------------------------------------


def test_simulate_writes_report_and_replayable_log(pack_dir, tmp_path, capsys):
    report = tmp_path / "report.txt"
    log = tmp_path / "events.ndjson"
    code, out, err = run(
        capsys,
        "simulate", str(pack_dir),
        "--count", "2", "--ability", "1.0", "--seed", "3",
        "--out", str(report), "--log", str(log),
    )
    assert code == OK
    assert "mastery rate 1.000" in report.read_text(encoding="utf-8")
    assert str(log) in err

    code, out, _ = run(capsys, "replay", str(log))
    assert code == OK
    assert out.startswith("ok:")


def test_simulate_ndjson_stdout(pack_dir, capsys):
    code, out, _ = run(
        capsys,
        "simulate", str(pack_dir),
        "--count", "1", "--ability", "1.0", "--seed", "3",
        "--format", "ndjson",
    )
    assert code == OK
    kinds = [json.loads(line)["kind"] for line in out.splitlines()]
    assert kinds == ["cohort", "learner", "aggregates"]


def test_simulate_refuses_existing_log(pack_dir, tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    log.write_text("{}\n", encoding="utf-8")
    code, _, err = run(
        capsys,
        "simulate", str(pack_dir),
        "--count", "1", "--ability", "1.0", "--seed", "3", "--log", str(log),
    )
    assert code == FAIL
    assert "non-empty" in err


# -- replay -------------------------------------------------------------------


def simulate_log(pack_dir, log, capsys, count="1"):
    code, _, _ = run(
        capsys,
        "simulate", str(pack_dir),
        "--count", count, "--ability", "1.0", "--seed", "9", "--log", str(log),
    )
    assert code == OK


def test_replay_missing_log_is_io_error(tmp_path, capsys):
    code, _, err = run(capsys, "replay", str(tmp_path / "absent.ndjson"))
    assert code == IO_ERROR
    assert err


def test_replay_rejects_unparseable_log(tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    log.write_text("not json\n", encoding="utf-8")
    code, _, err = run(capsys, "replay", str(log))
    assert code == FAIL
    assert err


def test_replay_detects_a_gap(pack_dir, tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    simulate_log(pack_dir, log, capsys)
    lines = log.read_text(encoding="utf-8").splitlines()
    assert len(lines) > 10
    del lines[len(lines) // 2]
    log.write_text("\n".join(lines) + "\n", encoding="utf-8")

    code, out, err = run(capsys, "replay", str(log), "--format", "ndjson")
    assert code == FAIL
    violations = [json.loads(line) for line in err.splitlines()]
    assert any(v["invariant"] == "sequence_gap" for v in violations)
    assert json.loads(out)["violations"] >= 1


def test_replay_detects_regressed_mastery(pack_dir, tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    simulate_log(pack_dir, log, capsys)
    events = read_log(log)
    # Re-issue the first concept's post-test, then score it as a failure;
    # a fold that already holds mastery must flag this, not absorb it.
    issued = next(
        e for e in events
        if e.kind.value == "test_issued" and e.payload["phase"] == "post_test"
    )
    scored = next(
        e for e in events
        if e.kind.value == "test_scored" and e.payload["phase"] == "post_test"
    )
    tail = events[-1].sequence_no
    failing = json.loads(json.dumps(scored.payload))
    failing["result"].update(
        total_score=10, conceptual_score=10, objective_score=10,
        level="weak", conceptual_level="weak", objective_level="weak",
    )
    with log.open("a", encoding="utf-8") as fh:
        for offset, (kind, payload) in enumerate(
            [("test_issued", issued.payload), ("test_scored", failing)], start=1
        ):
            fh.write(
                json.dumps(
                    {
                        "sequence_no": tail + offset,
                        "learner_id": scored.learner_id,
                        "timestamp": scored.timestamp,
                        "kind": kind,
                        "payload": payload,
                    },
                    sort_keys=True,
                )
                + "\n"
            )

    code, _, err = run(capsys, "replay", str(log))
    assert code == FAIL
    assert "mastery_monotonicity" in err


def test_replay_empty_log_is_ok(tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    log.touch()
    code, out, _ = run(capsys, "replay", str(log))
    assert code == OK
    assert "0 events" in out


def test_replay_counts_learners(pack_dir, tmp_path, capsys):
    log = tmp_path / "events.ndjson"
    simulate_log(pack_dir, log, capsys, count="3")
    code, out, _ = run(capsys, "replay", str(log), "--format", "ndjson")
    assert code == OK
    summary = json.loads(out)
    assert summary["learners"] == 3
    assert summary["violations"] == 0
