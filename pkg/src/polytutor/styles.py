"""Learning-style profiling: questionnaire scoring and dominant-style selection.

The profiler administers a five-scale learning-styles questionnaire (Likert
1..5, optional reverse scoring) and reduces the responses to one integer
score per style plus a deterministic dominant style.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import TutorError


class LearningStyle(str, Enum):
    """The five learner styles, in fixed tie-break order (earlier wins)."""

    SENSATION_SEEKING = "SS"
    GOAL_ORIENTED_ACHIEVER = "GOA"
    EMOTIONALLY_INTELLIGENT_ACHIEVER = "EIA"
    CONSCIENTIOUS_ACHIEVER = "CA"
    DEEP_LEARNING_ACHIEVER = "DLA"


# Tie-break / presentation order.  Dominant-style argmax and every other
# deterministic walk over styles uses this exact sequence.
STYLE_ORDER: tuple[LearningStyle, ...] = (
    LearningStyle.SENSATION_SEEKING,
    LearningStyle.GOAL_ORIENTED_ACHIEVER,
    LearningStyle.EMOTIONALLY_INTELLIGENT_ACHIEVER,
    LearningStyle.CONSCIENTIOUS_ACHIEVER,
    LearningStyle.DEEP_LEARNING_ACHIEVER,
)

# Lesson-variant fallback chain, most to least structured style.  Also the
# rotation ring used when remediation switches presentation style.
STYLE_FALLBACK_CHAIN: tuple[LearningStyle, ...] = (
    LearningStyle.DEEP_LEARNING_ACHIEVER,
    LearningStyle.CONSCIENTIOUS_ACHIEVER,
    LearningStyle.EMOTIONALLY_INTELLIGENT_ACHIEVER,
    LearningStyle.GOAL_ORIENTED_ACHIEVER,
    LearningStyle.SENSATION_SEEKING,
)


class MissingResponse(TutorError):
    code = "missing_response"

    def __init__(self, item_id: str):
        super().__init__(f"no response for questionnaire item {item_id!r}", item_id=item_id)
        self.item_id = item_id


class InvalidLikert(TutorError):
    code = "invalid_likert"

    def __init__(self, item_id: str, value):
        super().__init__(
            f"response for {item_id!r} must be an integer in [1, 5], got {value!r}",
            item_id=item_id,
            value=value,
        )
        self.item_id = item_id
        self.value = value


@dataclass(frozen=True)
class QuestionnaireItem:
    """One questionnaire item loading on a single style scale.

    ``prompt`` maps language codes to the item text so packs can ship
    pre-authored translations; missing languages are machine-translated
    at serving time.
    """

    item_id: str
    prompt: dict[str, str]
    scale: LearningStyle
    reverse_scored: bool = False


@dataclass(frozen=True)
class StyleVector:
    """Scores on all five style scales plus the dominant style."""

    scores: dict[LearningStyle, int]
    dominant: LearningStyle = field(init=False)

    def __post_init__(self):
        missing = [s for s in STYLE_ORDER if s not in self.scores]
        if missing:
            raise ValueError(f"style vector missing scales: {missing}")
        object.__setattr__(self, "dominant", dominant_style(self.scores))

    def to_dict(self) -> dict:
        return {
            "scores": {s.value: self.scores[s] for s in STYLE_ORDER},
            "dominant": self.dominant.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StyleVector":
        return cls(scores={LearningStyle(k): int(v) for k, v in data["scores"].items()})


def dominant_style(scores: dict[LearningStyle, int]) -> LearningStyle:
    """Argmax over the five scores; ties go to the earliest style in STYLE_ORDER."""
    best = STYLE_ORDER[0]
    for style in STYLE_ORDER:
        if scores[style] > scores[best]:
            best = style
    return best


def rotate_style(style: LearningStyle) -> LearningStyle:
    """Next style after ``style`` on the fallback ring (wraps around)."""
    i = STYLE_FALLBACK_CHAIN.index(style)
    return STYLE_FALLBACK_CHAIN[(i + 1) % len(STYLE_FALLBACK_CHAIN)]


def score_questionnaire(
    items: list[QuestionnaireItem], responses: dict[str, int]
) -> StyleVector:
    """Score a full questionnaire into a StyleVector.

    Each item contributes its Likert response to its scale; reverse-scored
    items contribute ``6 - response``.  Every item must have a response and
    values must be integers in [1, 5].

    Raises:
        MissingResponse: an item has no response.
        InvalidLikert: a response is not an integer in [1, 5].
    """
    totals = {style: 0 for style in STYLE_ORDER}
    for item in items:
        if item.item_id not in responses:
            raise MissingResponse(item.item_id)
        value = responses[item.item_id]
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise InvalidLikert(item.item_id, value)
        totals[item.scale] += (6 - value) if item.reverse_scored else value
    return StyleVector(scores=totals)
