"""Content-pack loading, validation, and variant fallback."""

from pathlib import Path

import pytest
import yaml

from polytutor.content import (
    CyclicPrerequisites,
    DanglingReference,
    DuplicateId,
    MissingManifest,
    NoVariant,
    PackFormatError,
    PackIOError,
    UnknownConcept,
    bank_for,
    load_pack,
    variant_for,
)
from polytutor.styles import STYLE_FALLBACK_CHAIN, LearningStyle


def dump(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data, allow_unicode=True), encoding="utf-8")


def tiny_pack(root: Path):
    """Smallest pack that passes validation; tests then break one thing."""
    dump(root / "pack.yaml", {"pack_id": "tiny", "version": "1", "default_language": "en"})
    dump(root / "concepts" / "a.yaml", {"title": {"en": "A"}, "sections": ["s1"]})
    dump(
        root / "lessons" / "a.CA.yaml",
        {"blocks": [{"lang": "en", "text": "hello"}]},
    )
    dump(
        root / "questions" / "a.yaml",
        {
            "questions": [
                {
                    "id": "qa1",
                    "section": "s1",
                    "level": "good",
                    "eval_kind": "conceptual",
                    "weight": 1,
                    "stem": {"en": "?"},
                    "choices": [{"en": "yes"}, {"en": "no"}],
                    "correct_index": 0,
                }
            ]
        },
    )
    return root


# -- loading the demo pack -----------------------------------------------------


def test_demo_pack_loads(demo_pack):
    assert set(demo_pack.concepts) == {"c1-variables", "c2-conditionals", "c3-loops"}
    assert demo_pack.concept_order() == ["c1-variables", "c2-conditionals", "c3-loops"]
    assert len(demo_pack.questionnaire) == 10
    assert demo_pack.default_language == "en"


def test_demo_pack_banks_are_sorted(demo_pack):
    for cid in demo_pack.concepts:
        bank = bank_for(demo_pack, cid)
        assert bank, cid
        assert [q.question_id for q in bank] == sorted(q.question_id for q in bank)
        assert all(q.concept_id == cid for q in bank)
        sections = {q.section_id for q in bank}
        assert sections <= set(demo_pack.concepts[cid].sections)


def test_two_loads_are_equal(demo_pack_dir):
    assert load_pack(demo_pack_dir) == load_pack(demo_pack_dir)


def test_questionnaire_items_sorted_and_complete(demo_pack):
    ids = [i.item_id for i in demo_pack.questionnaire]
    assert ids == sorted(ids)
    assert {i.scale for i in demo_pack.questionnaire} == set(LearningStyle)
    assert any(i.reverse_scored for i in demo_pack.questionnaire)


# -- variant selection ---------------------------------------------------------


def test_exact_variant_wins(demo_pack):
    got = variant_for(demo_pack, "c1-variables", LearningStyle.GOAL_ORIENTED_ACHIEVER)
    assert got.style is LearningStyle.GOAL_ORIENTED_ACHIEVER
    assert got.concept_id == "c1-variables"


def test_fallback_walks_chain_in_order(demo_pack):
    # The loops concept ships DLA and SS only; any other request lands on
    # DLA because the chain starts there.
    got = variant_for(demo_pack, "c3-loops", LearningStyle.CONSCIENTIOUS_ACHIEVER)
    assert got.style is LearningStyle.DEEP_LEARNING_ACHIEVER


def test_fallback_reaches_late_chain_entries(tmp_path):
    pack = load_pack(tiny_pack(tmp_path / "p"))
    # Only CA exists; a request for SS must walk past DLA to CA.
    got = variant_for(pack, "a", LearningStyle.SENSATION_SEEKING)
    assert got.style is LearningStyle.CONSCIENTIOUS_ACHIEVER


def test_fallback_chain_shape():
    assert STYLE_FALLBACK_CHAIN[0] is LearningStyle.DEEP_LEARNING_ACHIEVER
    assert list(STYLE_FALLBACK_CHAIN) == [
        LearningStyle.DEEP_LEARNING_ACHIEVER,
        LearningStyle.CONSCIENTIOUS_ACHIEVER,
        LearningStyle.EMOTIONALLY_INTELLIGENT_ACHIEVER,
        LearningStyle.GOAL_ORIENTED_ACHIEVER,
        LearningStyle.SENSATION_SEEKING,
    ]


def test_unknown_concept_rejected(demo_pack):
    with pytest.raises(UnknownConcept):
        variant_for(demo_pack, "ghost", LearningStyle.SENSATION_SEEKING)
    with pytest.raises(UnknownConcept):
        bank_for(demo_pack, "ghost")


def test_concept_without_lessons_rejected(tmp_path):
    root = tiny_pack(tmp_path / "p")
    (root / "lessons" / "a.CA.yaml").unlink()
    pack = load_pack(root)
    with pytest.raises(NoVariant):
        variant_for(pack, "a", LearningStyle.SENSATION_SEEKING)


# -- validation errors -----------------------------------------------------------


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingManifest):
        load_pack(tmp_path)


def test_unparseable_yaml_is_io_error(tmp_path):
    root = tiny_pack(tmp_path / "p")
    (root / "concepts" / "a.yaml").write_text("title: [unclosed", encoding="utf-8")
    with pytest.raises(PackIOError):
        load_pack(root)


def test_unreadable_file_is_io_error(tmp_path):
    root = tiny_pack(tmp_path / "p")
    (root / "concepts" / "a.yaml").unlink()
    (root / "concepts" / "a.yaml").mkdir()
    with pytest.raises(PackIOError):
        load_pack(root)


def test_dangling_prerequisite(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(
        root / "concepts" / "a.yaml",
        {"title": {"en": "A"}, "sections": ["s1"], "prerequisites": ["ghost"]},
    )
    with pytest.raises(DanglingReference):
        load_pack(root)


def test_cyclic_prerequisites(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(
        root / "concepts" / "a.yaml",
        {"title": {"en": "A"}, "sections": ["s1"], "prerequisites": ["b"]},
    )
    dump(
        root / "concepts" / "b.yaml",
        {"title": {"en": "B"}, "sections": ["s1"], "prerequisites": ["a"]},
    )
    with pytest.raises(CyclicPrerequisites) as exc:
        load_pack(root)
    assert exc.value.path[0] == exc.value.path[-1]


def test_lesson_for_missing_concept(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(root / "lessons" / "ghost.CA.yaml", {"blocks": [{"lang": "en", "text": "x"}]})
    with pytest.raises(DanglingReference):
        load_pack(root)


def test_bad_style_tag_in_lesson_name(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(root / "lessons" / "a.ZZ.yaml", {"blocks": [{"lang": "en", "text": "x"}]})
    with pytest.raises(PackFormatError):
        load_pack(root)


def test_question_section_must_exist(tmp_path):
    root = tiny_pack(tmp_path / "p")
    data = yaml.safe_load((root / "questions" / "a.yaml").read_text(encoding="utf-8"))
    data["questions"][0]["section"] = "ghost"
    dump(root / "questions" / "a.yaml", data)
    with pytest.raises(DanglingReference):
        load_pack(root)


def test_duplicate_question_id(tmp_path):
    root = tiny_pack(tmp_path / "p")
    data = yaml.safe_load((root / "questions" / "a.yaml").read_text(encoding="utf-8"))
    data["questions"].append(dict(data["questions"][0]))
    dump(root / "questions" / "a.yaml", data)
    with pytest.raises(DuplicateId):
        load_pack(root)


def test_duplicate_section_id(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(root / "concepts" / "a.yaml", {"title": {"en": "A"}, "sections": ["s1", "s1"]})
    with pytest.raises(DuplicateId):
        load_pack(root)


@pytest.mark.parametrize(
    "patch",
    [
        {"weight": 0},
        {"correct_index": 5},
        {"correct_index": -1},
        {"level": "heroic"},
        {"eval_kind": "vibes"},
        {"choices": [{"en": "only one"}]},
        {"stem": {"not a lang code!": "?"}},
    ],
)
def test_malformed_question_fields(tmp_path, patch):
    root = tiny_pack(tmp_path / "p")
    data = yaml.safe_load((root / "questions" / "a.yaml").read_text(encoding="utf-8"))
    data["questions"][0].update(patch)
    dump(root / "questions" / "a.yaml", data)
    with pytest.raises(PackFormatError):
        load_pack(root)


def test_empty_sections_rejected(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(root / "concepts" / "a.yaml", {"title": {"en": "A"}, "sections": []})
    with pytest.raises(PackFormatError):
        load_pack(root)


def test_missing_manifest_field(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(root / "pack.yaml", {"pack_id": "tiny", "version": "1"})
    with pytest.raises(PackFormatError):
        load_pack(root)


def test_bad_default_language(tmp_path):
    root = tiny_pack(tmp_path / "p")
    dump(
        root / "pack.yaml",
        {"pack_id": "tiny", "version": "1", "default_language": "not a code"},
    )
    with pytest.raises(PackFormatError):
        load_pack(root)


def test_topological_order_prefers_id_ties(tmp_path):
    root = tiny_pack(tmp_path / "p")
    # b and c both depend on a; z is independent.  Ties resolve by id.
    for cid, prereqs in (("b", ["a"]), ("c", ["a"]), ("z", [])):
        dump(
            root / "concepts" / f"{cid}.yaml",
            {"title": {"en": cid.upper()}, "sections": ["s1"], "prerequisites": prereqs},
        )
    pack = load_pack(root)
    order = pack.concept_order()
    assert order == ["a", "b", "c", "z"]
    for cid in pack.concepts:
        for prereq in pack.concepts[cid].prerequisites:
            assert order.index(prereq) < order.index(cid)
