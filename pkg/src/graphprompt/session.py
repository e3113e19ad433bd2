"""Multi-turn conversation about one query node, with a JSONL transcript."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

from .gateway import Backend
from .parsing import Prediction, parse_answer
from .prompting import ChoiceMap


class SessionStateError(RuntimeError):
    pass


@dataclass
class Turn:
    prompt: list[dict]
    reply: str | None
    prediction: Prediction | None
    error: str | None = None


class InteractiveSession:
    """One conversation, one owner. ``ask`` sends the initial query; ``feedback`` adds a human turn."""

    def __init__(self, messages: Sequence[dict], backend: Backend, choices: ChoiceMap, sink: IO[str] | None = None):
        self.messages = [dict(m) for m in messages]
        self.backend = backend
        self.choices = choices
        self.sink = sink
        self.turns: list[Turn] = []
        for m in self.messages:
            self._emit(m)

    @property
    def queried(self) -> bool:
        return any(t.error is None for t in self.turns)

    def _emit(self, record: dict) -> None:
        if self.sink is not None:
            self.sink.write(json.dumps(record, ensure_ascii=False) + "\n")
            self.sink.flush()

    def _query(self, pending: list[dict]) -> Turn:
        prompt = self.messages + pending
        try:
            reply = self.backend.complete(prompt)
        except Exception as exc:  # noqa: BLE001 - errors are per-turn, the session survives
            turn = Turn(prompt, None, None, f"{type(exc).__name__}: {exc}")
            self._emit({"role": "error", "content": turn.error, "pending": pending})
            self.turns.append(turn)
            return turn
        prediction = parse_answer(reply, self.choices)
        for m in pending:
            self._emit(m)
        self._emit({"role": "assistant", "content": reply, "parsed": prediction.letter, "status": prediction.status})
        self.messages = prompt + [{"role": "assistant", "content": reply}]
        turn = Turn(prompt, reply, prediction)
        self.turns.append(turn)
        return turn

    def ask(self) -> Turn:
        if self.queried:
            raise SessionStateError("the query was already sent; reply with feedback instead")
        return self._query([])

    def feedback(self, text: str) -> Turn | None:
        """Append a human message and re-query. Blank input is ignored and returns ``None``."""
        if not self.queried:
            raise SessionStateError("send the query first (/ask) before giving feedback")
        if not text.strip():
            return None
        return self._query([{"role": "user", "content": text.strip()}])


def load_transcript(path: str | Path) -> list[dict]:
    """Chat messages recorded in a transcript, without error records or parse annotations."""
    messages = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if record["role"] == "error":
                continue
            messages.append({"role": record["role"], "content": record["content"]})
    return messages


def replay_transcript(path: str | Path, backend: Backend, choices: ChoiceMap, sink: IO[str] | None = None) -> InteractiveSession:
    """Re-run the human turns of a saved transcript against ``backend``."""
    messages = load_transcript(path)
    first_reply = next((i for i, m in enumerate(messages) if m["role"] == "assistant"), len(messages))
    session = InteractiveSession(messages[:first_reply], backend, choices, sink)
    if first_reply < len(messages):
        session.ask()
        for m in messages[first_reply + 1:]:
            if m["role"] == "user":
                session.feedback(m["content"])
    return session
