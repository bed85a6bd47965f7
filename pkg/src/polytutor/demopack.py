"""Writer for a small self-contained demo course.

Three chained programming concepts with styled lesson variants, a
five-scale questionnaire, enough questions per concept to exercise every
selection rule, and an English-to-Farsi glossary file for the term-table
translation backend.  Everything here is plain data generation; the pack
loader remains the single validation authority.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .assessment import EvalKind, KnowledgeLevel
from .styles import LearningStyle

_LEVELS = [
    KnowledgeLevel.WEAK,
    KnowledgeLevel.AVERAGE,
    KnowledgeLevel.GOOD,
    KnowledgeLevel.VERY_GOOD,
    KnowledgeLevel.EXCELLENT,
]

_CONCEPTS = [
    {
        "id": "c1-variables",
        "title": {"en": "Variables and values", "fa": "متغیرها و مقادیر"},
        "sections": ["s-basics", "s-naming"],
        "prerequisites": [],
        "topic": "a variable",
        "styles": [s.value for s in LearningStyle],
    },
    {
        "id": "c2-conditionals",
        "title": {"en": "Conditional branching", "fa": "شاخه‌بندی شرطی"},
        "sections": ["s-syntax", "s-logic"],
        "prerequisites": ["c1-variables"],
        "topic": "an if statement",
        "styles": ["DLA", "CA", "GOA"],
    },
    {
        "id": "c3-loops",
        "title": {"en": "Loops and repetition", "fa": "حلقه‌ها و تکرار"},
        "sections": ["s-for", "s-while", "s-nesting"],
        "prerequisites": ["c2-conditionals"],
        "topic": "a loop",
        "styles": ["DLA", "SS"],
    },
]

_STYLE_OPENERS = {
    "SS": "Try it hands-on first:",
    "GOA": "Your goal for this lesson:",
    "EIA": "Take a moment to reflect:",
    "CA": "Step-by-step walkthrough:",
    "DLA": "The underlying idea:",
}

# One question template per (level, parity); parity alternates eval kinds
# so each bank mixes conceptual and objective items at every difficulty.
_STEM_TEMPLATES = {
    KnowledgeLevel.WEAK: "What does {topic} do in section {section}?",
    KnowledgeLevel.AVERAGE: "Pick the correct statement about {topic} ({section}).",
    KnowledgeLevel.GOOD: "Which example uses {topic} correctly in {section}?",
    KnowledgeLevel.VERY_GOOD: "Spot the subtle bug involving {topic} in {section}.",
    KnowledgeLevel.EXCELLENT: "Predict the output when {topic} interacts with {section} edge cases.",
}

GLOSSARY_ROWS = [
    ("en", "fa", "book", "کتاب"),
    ("en", "fa", "variable", "متغیر"),
    ("en", "fa", "loop", "حلقه"),
    ("en", "fa", "value", "مقدار"),
    ("en", "fa", "lesson", "درس"),
    ("en", "fa", "question", "پرسش"),
    ("fa", "en", "کتاب", "book"),
    ("fa", "en", "درس", "lesson"),
]


def _dump(path: Path, data: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(data, fh, allow_unicode=True, sort_keys=False)


def _questions_for(concept: dict, per_level: int = 3) -> list[dict]:
    """per_level questions at each of the five difficulties, cycling
    through the concept's sections and alternating eval kinds."""
    records = []
    sections = concept["sections"]
    counter = 0
    for level in _LEVELS:
        for i in range(per_level):
            section = sections[counter % len(sections)]
            kind = EvalKind.CONCEPTUAL if counter % 2 == 0 else EvalKind.OBJECTIVE
            stem = _STEM_TEMPLATES[level].format(topic=concept["topic"], section=section)
            qid = f"q-{concept['id']}-{level.value}-{i}"
            records.append(
                {
                    "id": qid,
                    "section": section,
                    "level": level.value,
                    "eval_kind": kind.value,
                    "weight": 1 + (counter % 3),
                    "stem": {"en": stem},
                    "choices": [
                        {"en": f"Correct answer for {qid}"},
                        {"en": f"Plausible distractor A for {qid}"},
                        {"en": f"Plausible distractor B for {qid}"},
                        {"en": f"Plausible distractor C for {qid}"},
                    ],
                    "correct_index": 0,
                }
            )
            counter += 1
    return records


def _questionnaire_items() -> list[dict]:
    prompts = {
        "SS": (
            "I enjoy diving into new material without a plan.",
            "من از غوطه‌ور شدن در مطالب تازه بدون برنامه لذت می‌برم.",
        ),
        "GOA": (
            "I set a concrete target before I start studying.",
            "پیش از شروع مطالعه هدف مشخصی تعیین می‌کنم.",
        ),
        "EIA": (
            "I notice how my mood changes what I learn.",
            "متوجه می‌شوم که حال‌وهوایم بر یادگیری‌ام اثر می‌گذارد.",
        ),
        "CA": (
            "I finish every exercise before moving on.",
            "هر تمرین را پیش از رفتن به بعدی تمام می‌کنم.",
        ),
        "DLA": (
            "I keep asking why until the principle is clear.",
            "آن‌قدر «چرا» می‌پرسم تا اصل مطلب روشن شود.",
        ),
    }
    reversed_prompts = {
        "SS": (
            "I avoid trying things before reading instructions.",
            "از امتحان کردن چیزها پیش از خواندن دستورالعمل پرهیز می‌کنم.",
        ),
        "GOA": (
            "I study without any particular aim in mind.",
            "بدون هدف خاصی مطالعه می‌کنم.",
        ),
        "EIA": (
            "My feelings play no part in how I study.",
            "احساساتم نقشی در نحوه مطالعه‌ام ندارد.",
        ),
        "CA": (
            "I often leave tasks half done.",
            "اغلب کارها را نیمه‌کاره رها می‌کنم.",
        ),
        "DLA": (
            "Memorizing facts is enough for me; reasons can wait.",
            "حفظ کردن حقایق برایم کافی است؛ دلیل‌ها بماند.",
        ),
    }
    items = []
    for idx, (scale, (en, fa)) in enumerate(prompts.items(), start=1):
        items.append(
            {
                "id": f"i-{idx:02d}-{scale.lower()}",
                "scale": scale,
                "prompt": {"en": en, "fa": fa},
            }
        )
    for idx, (scale, (en, fa)) in enumerate(reversed_prompts.items(), start=6):
        items.append(
            {
                "id": f"i-{idx:02d}-{scale.lower()}r",
                "scale": scale,
                "prompt": {"en": en, "fa": fa},
                "reverse_scored": True,
            }
        )
    return items


def write_demo_pack(root: str | Path) -> Path:
    """Write the demo course under ``root`` and return the pack directory."""
    root = Path(root)
    _dump(
        root / "pack.yaml",
        {
            "pack_id": "demo-programming-basics",
            "version": "1.0.0",
            "default_language": "en",
        },
    )
    for concept in _CONCEPTS:
        _dump(
            root / "concepts" / f"{concept['id']}.yaml",
            {
                "title": concept["title"],
                "sections": concept["sections"],
                "prerequisites": concept["prerequisites"],
            },
        )
        for style in concept["styles"]:
            title_en = concept["title"]["en"]
            blocks = [
                {
                    "lang": "en",
                    "text": f"{_STYLE_OPENERS[style]} {title_en}.",
                },
                {
                    "lang": "en",
                    "text": (
                        f"This lesson covers {', '.join(concept['sections'])} "
                        f"using {concept['topic']} as the running example."
                    ),
                },
            ]
            _dump(
                root / "lessons" / f"{concept['id']}.{style}.yaml",
                {"blocks": blocks},
            )
        _dump(
            root / "questions" / f"{concept['id']}.yaml",
            {"questions": _questions_for(concept)},
        )
    _dump(root / "questionnaire" / "items.yaml", {"items": _questionnaire_items()})
    return root


def write_demo_glossary(path: str | Path) -> Path:
    """Write the demo TSV glossary and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# source\ttarget\tterm\ttranslation"]
    lines += ["\t".join(row) for row in GLOSSARY_ROWS]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
