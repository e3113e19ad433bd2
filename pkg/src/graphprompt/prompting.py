"""Multi-choice QA prompt assembly: choice map, demonstrations and the query block."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .graph import Graph, class_letter

ANSWER_DIRECTIVE = "Remember, your answer should be in the form of the class choice wrapped by <answer> </answer>."
DEMO_HEADER = "Here are a few examples:"
QUERY_HEADER = "Now let's answer the question below:"
TEMPLATE_KEYS = ("role", "choice_intro", "demo_question", "query_question")


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class ChoiceMap:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        letters = [p[0] for p in self.pairs]
        if letters != [class_letter(i) for i in range(len(letters))]:
            raise PromptError(f"choice letters must run consecutively from 'A', got {letters}")

    @classmethod
    def from_class_names(cls, names: Iterable[str]) -> "ChoiceMap":
        return cls(tuple((class_letter(i), n) for i, n in enumerate(names)))

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(p[0] for p in self.pairs)

    def name(self, letter: str) -> str:
        return dict(self.pairs)[letter]

    def __contains__(self, letter: object) -> bool:
        return letter in self.letters

    def __len__(self) -> int:
        return len(self.pairs)

    def format(self) -> str:
        return "[" + ", ".join(f"{k}: {v}" for k, v in self.pairs) + "]"


@lru_cache(maxsize=None)
def _builtin_templates() -> dict:
    return json.loads(resources.files("graphprompt").joinpath("templates.json").read_text(encoding="utf-8"))


def load_templates(path: str | Path | None = None) -> dict[str, dict[str, str]]:
    """Built-in templates, overridden/extended by an optional JSON file of the same shape."""
    templates = {k: dict(v) for k, v in _builtin_templates().items()}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for name, entry in json.load(fh).items():
                templates[name] = {**templates.get(name, {}), **entry}
    for name, entry in templates.items():
        missing = [k for k in TEMPLATE_KEYS if k not in entry]
        if missing:
            raise PromptError(f"template {name!r} is missing {missing}")
    return templates


def get_template(template: str | dict, templates: dict | None = None) -> dict[str, str]:
    if isinstance(template, dict):
        return template
    templates = templates or load_templates()
    if template not in templates:
        raise PromptError(f"unknown template {template!r}; known: {sorted(templates)}")
    return templates[template]


def select_demonstrations(graph: Graph, train: Iterable[int], n_shots: int, per_class: bool = False) -> list[int]:
    """Highest-degree labelled training nodes, taken round-robin over classes in class order.

    Within a class candidates are ordered by degree (descending) then id. With
    ``per_class`` each class contributes up to ``n_shots`` nodes instead.
    """
    train = sorted(i for i in set(train) if i in graph.labels)
    if not train:
        raise PromptError("no labelled training nodes to draw demonstrations from")
    total = n_shots * graph.num_classes if per_class else n_shots
    if n_shots < 0 or (not per_class and n_shots > len(train)):
        raise PromptError(f"cannot draw {n_shots} demonstrations from {len(train)} training nodes")
    deg = graph.degrees()
    by_class: list[list[int]] = [[] for _ in range(graph.num_classes)]
    for i in train:
        by_class[graph.labels[i]].append(i)
    for group in by_class:
        group.sort(key=lambda i: (-deg[i], i))
    if per_class:
        picked = []
        for rnd in range(n_shots):
            picked.extend(g[rnd] for g in by_class if rnd < len(g))
        return picked
    picked = []
    rnd = 0
    while len(picked) < total:
        for group in by_class:
            if rnd < len(group) and len(picked) < total:
                picked.append(group[rnd])
        rnd += 1
    return picked


@dataclass(frozen=True)
class PromptBundle:
    system: str
    demonstrations: tuple[tuple[str, str], ...]
    query: str
    choices: ChoiceMap
    demo_question: str
    query_question: str

    def user_message(self) -> str:
        parts = []
        if self.demonstrations:
            demos = [
                f"{block}\n<question>{self.demo_question}</question>\n<answer>{letter}</answer>\n"
                for block, letter in self.demonstrations
            ]
            parts.append(DEMO_HEADER + "\n" + "\n".join(demos))
        parts.append(
            f"{QUERY_HEADER}\n{self.query}\n\n"
            f"{self.query_question} Valid choices are {self.choices.format()}.\n{ANSWER_DIRECTIVE}"
        )
        return "\n".join(parts)

    def messages(self) -> list[dict[str, str]]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user_message()}]


def build_bundle(
    demonstrations: Sequence[tuple[str, str]],
    query: str,
    choices: ChoiceMap,
    template: str | dict = "generic",
    templates: dict | None = None,
) -> PromptBundle:
    t = get_template(template, templates)
    for _, letter in demonstrations:
        if letter not in choices:
            raise PromptError(f"demonstration answer {letter!r} is not a valid choice")
    system = f"{t['role']} {t['choice_intro']} {choices.format()}"
    return PromptBundle(
        system=system,
        demonstrations=tuple((b, l) for b, l in demonstrations),
        query=query,
        choices=choices,
        demo_question=t["demo_question"],
        query_question=t["query_question"],
    )


def assemble_prompt(
    demonstrations: Sequence[tuple[str, str]],
    query: str,
    choices: ChoiceMap,
    template: str | dict = "generic",
    templates: dict | None = None,
) -> list[dict[str, str]]:
    """System + user chat messages for one query."""
    return build_bundle(demonstrations, query, choices, template, templates).messages()


def format_transcript(messages: Sequence[dict[str, str]]) -> str:
    """Plain-text dump of chat messages, as written by ``--dump-prompt``."""
    return "\n\n".join(f"[{m['role']}]\n{m['content']}" for m in messages) + "\n"
