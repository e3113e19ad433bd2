"""Map raw LLM replies to a choice letter with an explicit parse status."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .prompting import ChoiceMap

TAG_PARSED = "tag_parsed"
FALLBACK_PARSED = "fallback_parsed"
UNPARSEABLE = "unparseable"

_ANSWER_TAG = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)


@dataclass(frozen=True)
class Prediction:
    raw: str
    letter: str | None
    status: str

    def __post_init__(self):
        if (self.letter is None) != (self.status == UNPARSEABLE):
            raise ValueError(f"letter {self.letter!r} inconsistent with status {self.status!r}")

    def to_dict(self) -> dict:
        return {"raw": self.raw, "letter": self.letter, "status": self.status}


def parse_answer(raw: str, choices: ChoiceMap) -> Prediction:
    """Extract the committed answer from ``raw``.

    The last ``<answer>X</answer>`` whose trimmed content is a valid letter wins.
    Otherwise the match nearest the end among ``X: <class name>`` and bare exact
    class names is used; overlapping matches prefer the longer one.
    """
    for m in reversed(list(_ANSWER_TAG.finditer(raw))):
        letter = m.group(1).strip()
        if letter in choices:
            return Prediction(raw, letter, TAG_PARSED)

    best: tuple[int, int, str] | None = None  # (end, length, letter)
    for letter, name in choices.pairs:
        patterns = [
            rf"(?<![A-Za-z0-9]){re.escape(letter)}\s*:\s*{re.escape(name)}(?![A-Za-z0-9])",
            rf"(?<![A-Za-z0-9]){re.escape(name)}(?![A-Za-z0-9])",
        ]
        for pat in patterns:
            for m in re.finditer(pat, raw):
                cand = (m.end(), m.end() - m.start(), letter)
                if best is None or cand[:2] > best[:2]:
                    best = cand
    if best is not None:
        return Prediction(raw, best[2], FALLBACK_PARSED)
    return Prediction(raw, None, UNPARSEABLE)
