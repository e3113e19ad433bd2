"""Deterministic mock backends that read the rendered query block like a model would.

Policies:

* ``first-ppr``    answer the first usable token of the ``ppr`` leaf list
* ``majority-ppr`` answer the most frequent usable ``ppr`` token (ties: earliest)
* ``center``       answer the center-node token
* ``fixed:X``      always answer ``X``
* ``script:FILE``  replay a list of replies, one per assistant turn

``NA`` tokens are skipped; when no usable token remains the answer falls back to ``A``.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .attributes import NA
from .tree import read_info_block

POLICIES = ("first-ppr", "majority-ppr", "center", "fixed", "script")
FALLBACK_LETTER = "A"
PPR_TAGS = ("ppr",)
CENTER_TAGS = ("center_node", "center-node")


class MockPolicyError(ValueError):
    pass


@dataclass(frozen=True)
class MockPolicy:
    kind: str
    letter: str | None = None
    replies: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise MockPolicyError(f"unknown mock policy {self.kind!r}")
        if self.kind == "fixed" and not (self.letter and len(self.letter) == 1 and self.letter.isupper()):
            raise MockPolicyError(f"fixed policy needs a choice letter, got {self.letter!r}")
        if self.kind == "script" and not self.replies:
            raise MockPolicyError("script policy needs at least one reply")

    @classmethod
    def parse(cls, key: str) -> "MockPolicy":
        """Parse ``first-ppr``, ``fixed:B``, ``script:replies.json`` (with or without a ``mock:`` prefix)."""
        key = key.removeprefix("mock:")
        kind, _, arg = key.partition(":")
        if kind == "fixed":
            return cls("fixed", letter=arg)
        if kind == "script":
            replies = json.loads(Path(arg).read_text(encoding="utf-8"))
            if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
                raise MockPolicyError(f"{arg}: expected a JSON list of reply strings")
            return cls("script", replies=tuple(replies))
        if arg:
            raise MockPolicyError(f"policy {kind!r} takes no argument")
        return cls(kind)

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"mock:fixed:{self.letter}"
        if self.kind == "script":
            return f"mock:script[{len(self.replies)}]"
        return f"mock:{self.kind}"


def _find(blocks, tags: Sequence[str]) -> list[str] | None:
    for path, tokens in blocks:
        if any(t in tags for t in path):
            return tokens
    return None


def _usable(tokens: Sequence[str]) -> list[str]:
    return [t for t in tokens if t != NA]


def mock_complete(messages: Sequence[dict], policy: MockPolicy) -> str:
    """Pure function of ``(messages, policy)`` returning a reply with an ``<answer>`` tag."""
    if policy.kind == "script":
        turn = sum(1 for m in messages if m["role"] == "assistant")
        return policy.replies[min(turn, len(policy.replies) - 1)]
    if policy.kind == "fixed":
        return f"I always choose {policy.letter}.\n<answer>{policy.letter}</answer>"

    users = [m["content"] for m in messages if m["role"] == "user"]
    if not users:
        raise MockPolicyError("no user message to answer")
    blocks = read_info_block(users[-1])
    untagged = all(not path for path, _ in blocks)

    if policy.kind == "center":
        tokens = blocks[0][1] if untagged and blocks else _find(blocks, CENTER_TAGS)
        if tokens is None:
            raise MockPolicyError("query block has no center-node entry")
        usable = _usable(tokens)
        letter = usable[0] if usable else FALLBACK_LETTER
        reason = f"The center node is labelled {letter}."
    else:
        tokens = None if untagged else _find(blocks, PPR_TAGS)
        if tokens is None:
            hint = " (this style drops tags; use mock:center or mock:fixed:X)" if untagged else ""
            raise MockPolicyError(f"mock:{policy.kind} needs a <ppr> entry in the query block{hint}")
        usable = _usable(tokens)
        if not usable:
            letter = FALLBACK_LETTER
        elif policy.kind == "first-ppr":
            letter = usable[0]
        else:
            counts = Counter(usable)
            top = max(counts.values())
            letter = next(t for t in usable if counts[t] == top)
        reason = f"The {'first' if policy.kind == 'first-ppr' else 'most frequent'} PPR label is {letter}."
    return f"{reason}\n<answer>{letter}</answer>"


class MockBackend:
    deterministic = True

    def __init__(self, policy: MockPolicy):
        self.policy = policy

    def complete(self, messages: Sequence[dict]) -> str:
        return mock_complete(messages, self.policy)

    def __repr__(self) -> str:
        return f"MockBackend({self.policy.describe()})"
