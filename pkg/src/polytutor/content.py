"""Content packs: concepts, styled lesson variants, question banks,
questionnaires, and optional pedagogy rules, loaded from an authorable
on-disk bundle.

Pack layout (all files UTF-8 YAML; ids come from file names):

    pack.yaml                        pack_id, version, default_language
    concepts/<concept_id>.yaml       title, sections, prerequisites
    lessons/<concept_id>.<STYLE>.yaml   ordered content blocks
    questions/<concept_id>.yaml      question records for the concept
    questionnaire/items.yaml         learning-style questionnaire items
    rules/<name>.yaml                optional rule set (default policy if absent)

A loaded pack is immutable and fully cross-checked; validation is
all-or-nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .assessment import DifficultyLevel, EvalKind
from .errors import TutorError
from .styles import STYLE_FALLBACK_CHAIN, LearningStyle, QuestionnaireItem
from .translation import is_language_code


class PackFormatError(TutorError):
    """A pack file has the wrong structure or violates a field constraint."""

    code = "pack_format"


class PackIOError(TutorError):
    """A pack file cannot be read or parsed at all."""

    code = "pack_io"


class MissingManifest(PackIOError):
    code = "missing_manifest"


class DanglingReference(TutorError):
    code = "dangling_reference"

    def __init__(self, entity: str, ref: str, message: str | None = None):
        super().__init__(message or f"{entity} references missing {ref!r}", entity=entity, ref=ref)
        self.entity = entity
        self.ref = ref


class DuplicateId(TutorError):
    code = "duplicate_id"

    def __init__(self, entity_id: str):
        super().__init__(f"duplicate id {entity_id!r}", entity_id=entity_id)
        self.entity_id = entity_id


class CyclicPrerequisites(TutorError):
    code = "cyclic_prerequisites"

    def __init__(self, path: list[str]):
        super().__init__("prerequisite cycle: " + " -> ".join(path), path=path)
        self.path = path


class UnknownConcept(TutorError):
    code = "unknown_concept"

    def __init__(self, concept_id: str):
        super().__init__(f"unknown concept {concept_id!r}", concept_id=concept_id)
        self.concept_id = concept_id


class NoVariant(TutorError):
    code = "no_variant"

    def __init__(self, concept_id: str):
        super().__init__(f"concept {concept_id!r} has no lesson variants", concept_id=concept_id)
        self.concept_id = concept_id


@dataclass(frozen=True)
class Concept:
    concept_id: str
    title: dict[str, str]
    sections: tuple[str, ...]
    prerequisites: tuple[str, ...]


@dataclass(frozen=True)
class ContentBlock:
    lang: str
    text: str


@dataclass(frozen=True)
class LessonVariant:
    concept_id: str
    style: LearningStyle
    blocks: tuple[ContentBlock, ...]


@dataclass(frozen=True)
class Question:
    question_id: str
    concept_id: str
    section_id: str
    level: DifficultyLevel
    score_weight: int
    eval_kind: EvalKind
    stem: dict[str, str]
    choices: tuple[dict[str, str], ...]
    correct_index: int


@dataclass(frozen=True)
class ContentPack:
    pack_id: str
    version: str
    default_language: str
    concepts: dict[str, Concept]
    lesson_variants: dict[tuple[str, LearningStyle], LessonVariant]
    questions: dict[str, Question]
    questionnaire: tuple[QuestionnaireItem, ...]
    rule_records: tuple[dict, ...]

    def concept_order(self) -> list[str]:
        """Concept ids in prerequisite order (topological, ties by id)."""
        return _topological_order(self.concepts)


def _read_yaml(path: Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise PackIOError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise PackIOError(f"invalid YAML in {path}: {exc}") from exc


def _require(data, key: str, path: Path):
    if not isinstance(data, dict) or key not in data:
        raise PackFormatError(f"{path}: missing required field {key!r}")
    return data[key]


def _localized(value, path: Path, what: str) -> dict[str, str]:
    if not isinstance(value, dict) or not value:
        raise PackFormatError(f"{path}: {what} must map language codes to text")
    out = {}
    for lang, text in value.items():
        if not is_language_code(str(lang)):
            raise PackFormatError(f"{path}: bad language code {lang!r} in {what}")
        out[str(lang)] = str(text)
    return out


def load_pack(root: str | Path) -> ContentPack:
    """Load and validate a content pack directory.

    All cross-references are resolved up front and entities are held in
    id-sorted order, so two loads of the same directory are structurally
    equal.

    Raises:
        MissingManifest: pack.yaml is absent.
        PackFormatError: a file is unreadable or malformed.
        DuplicateId / DanglingReference / CyclicPrerequisites: invariant
            violations anywhere in the pack.
    """
    root = Path(root)
    manifest_path = root / "pack.yaml"
    if not manifest_path.exists():
        raise MissingManifest(f"no pack.yaml in {root}")
    manifest = _read_yaml(manifest_path)
    pack_id = str(_require(manifest, "pack_id", manifest_path))
    version = str(_require(manifest, "version", manifest_path))
    default_language = str(_require(manifest, "default_language", manifest_path))
    if not is_language_code(default_language):
        raise PackFormatError(f"{manifest_path}: bad default_language {default_language!r}")

    concepts: dict[str, Concept] = {}
    for path in sorted((root / "concepts").glob("*.yaml")):
        concept_id = path.stem
        if concept_id in concepts:
            raise DuplicateId(concept_id)
        data = _read_yaml(path)
        sections = tuple(str(s) for s in _require(data, "sections", path))
        if not sections:
            raise PackFormatError(f"{path}: sections must be non-empty")
        if len(set(sections)) != len(sections):
            raise DuplicateId(f"{concept_id}: duplicate section id")
        prerequisites = tuple(str(p) for p in data.get("prerequisites", []))
        concepts[concept_id] = Concept(
            concept_id=concept_id,
            title=_localized(_require(data, "title", path), path, "title"),
            sections=sections,
            prerequisites=prerequisites,
        )
    concepts = dict(sorted(concepts.items()))

    for concept in concepts.values():
        for prereq in concept.prerequisites:
            if prereq not in concepts:
                raise DanglingReference(f"concept {concept.concept_id}", prereq)
    _topological_order(concepts)  # raises CyclicPrerequisites

    variants: dict[tuple[str, LearningStyle], LessonVariant] = {}
    lessons_dir = root / "lessons"
    for path in sorted(lessons_dir.glob("*.yaml")):
        parts = path.stem.rsplit(".", 1)
        if len(parts) != 2:
            raise PackFormatError(f"{path}: lesson files are named <concept_id>.<STYLE>.yaml")
        concept_id, style_tag = parts
        try:
            style = LearningStyle(style_tag)
        except ValueError:
            raise PackFormatError(f"{path}: unknown style tag {style_tag!r}") from None
        if concept_id not in concepts:
            raise DanglingReference(f"lesson {path.name}", concept_id)
        data = _read_yaml(path)
        blocks = []
        for block in _require(data, "blocks", path):
            lang = str(_require(block, "lang", path))
            if not is_language_code(lang):
                raise PackFormatError(f"{path}: bad block language {lang!r}")
            blocks.append(ContentBlock(lang=lang, text=str(_require(block, "text", path))))
        if not blocks:
            raise PackFormatError(f"{path}: blocks must be non-empty")
        variants[(concept_id, style)] = LessonVariant(
            concept_id=concept_id, style=style, blocks=tuple(blocks)
        )

    questions: dict[str, Question] = {}
    for path in sorted((root / "questions").glob("*.yaml")):
        concept_id = path.stem
        if concept_id not in concepts:
            raise DanglingReference(f"questions file {path.name}", concept_id)
        concept = concepts[concept_id]
        data = _read_yaml(path)
        for record in _require(data, "questions", path):
            qid = str(_require(record, "id", path))
            if qid in questions:
                raise DuplicateId(qid)
            section = str(_require(record, "section", path))
            if section not in concept.sections:
                raise DanglingReference(f"question {qid}", f"{concept_id}/{section}")
            try:
                level = DifficultyLevel(str(_require(record, "level", path)))
                eval_kind = EvalKind(str(_require(record, "eval_kind", path)))
            except ValueError as exc:
                raise PackFormatError(f"{path}: question {qid}: {exc}") from None
            weight = int(_require(record, "weight", path))
            if weight < 1:
                raise PackFormatError(f"{path}: question {qid}: weight must be >= 1")
            choices = tuple(
                _localized(c, path, f"choice of {qid}") for c in _require(record, "choices", path)
            )
            if len(choices) < 2:
                raise PackFormatError(f"{path}: question {qid}: need at least 2 choices")
            correct_index = int(_require(record, "correct_index", path))
            if not 0 <= correct_index < len(choices):
                raise PackFormatError(f"{path}: question {qid}: correct_index out of range")
            questions[qid] = Question(
                question_id=qid,
                concept_id=concept_id,
                section_id=section,
                level=level,
                score_weight=weight,
                eval_kind=eval_kind,
                stem=_localized(_require(record, "stem", path), path, f"stem of {qid}"),
                choices=choices,
                correct_index=correct_index,
            )
    questions = dict(sorted(questions.items()))

    items: list[QuestionnaireItem] = []
    items_path = root / "questionnaire" / "items.yaml"
    if items_path.exists():
        seen_items = set()
        for record in _require(_read_yaml(items_path), "items", items_path):
            item_id = str(_require(record, "id", items_path))
            if item_id in seen_items:
                raise DuplicateId(item_id)
            seen_items.add(item_id)
            try:
                scale = LearningStyle(str(_require(record, "scale", items_path)))
            except ValueError:
                raise PackFormatError(f"{items_path}: item {item_id}: unknown scale") from None
            items.append(
                QuestionnaireItem(
                    item_id=item_id,
                    prompt=_localized(_require(record, "prompt", items_path), items_path, "prompt"),
                    scale=scale,
                    reverse_scored=bool(record.get("reverse_scored", False)),
                )
            )
        items.sort(key=lambda i: i.item_id)

    rule_records: list[dict] = []
    rules_dir = root / "rules"
    if rules_dir.is_dir():
        for path in sorted(rules_dir.glob("*.yaml")):
            data = _read_yaml(path)
            for record in _require(data, "rules", path):
                if not isinstance(record, dict):
                    raise PackFormatError(f"{path}: each rule must be a mapping")
                rule_records.append(record)

    return ContentPack(
        pack_id=pack_id,
        version=version,
        default_language=default_language,
        concepts=concepts,
        lesson_variants=variants,
        questions=questions,
        questionnaire=tuple(items),
        rule_records=tuple(rule_records),
    )


def _topological_order(concepts: dict[str, Concept]) -> list[str]:
    """Prerequisite-respecting order, ties broken by concept id."""
    order: list[str] = []
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(cid: str, path: list[str]):
        if state.get(cid) == 1:
            return
        if state.get(cid) == 0:
            cycle_start = path.index(cid)
            raise CyclicPrerequisites(path[cycle_start:] + [cid])
        state[cid] = 0
        for prereq in sorted(concepts[cid].prerequisites):
            visit(prereq, path + [cid])
        state[cid] = 1
        order.append(cid)

    for cid in sorted(concepts):
        visit(cid, [])
    return order


def variant_for(pack: ContentPack, concept_id: str, style: LearningStyle) -> LessonVariant:
    """The lesson variant for a style, or the first fallback-chain match.

    Raises:
        UnknownConcept: no such concept.
        NoVariant: the concept has no lesson variants at all.
    """
    if concept_id not in pack.concepts:
        raise UnknownConcept(concept_id)
    exact = pack.lesson_variants.get((concept_id, style))
    if exact is not None:
        return exact
    for fallback in STYLE_FALLBACK_CHAIN:
        variant = pack.lesson_variants.get((concept_id, fallback))
        if variant is not None:
            return variant
    raise NoVariant(concept_id)


def bank_for(pack: ContentPack, concept_id: str) -> list[Question]:
    """All questions for a concept, stable-sorted by question id.

    Raises:
        UnknownConcept: no such concept.
    """
    if concept_id not in pack.concepts:
        raise UnknownConcept(concept_id)
    return sorted(
        (q for q in pack.questions.values() if q.concept_id == concept_id),
        key=lambda q: q.question_id,
    )
