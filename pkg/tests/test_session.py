import io
import json

import pytest

from conftest import golden
from graphprompt.mock import MockBackend, MockPolicy
from graphprompt.prompting import ChoiceMap, assemble_prompt
from graphprompt.session import InteractiveSession, SessionStateError, load_transcript, replay_transcript

CHOICES = ChoiceMap.from_class_names(["Theory", "Reinforcement Learning", "Genetic Algorithm", "Neural Network", "Probabilistic Method", "Case Based", "Rule Learning"])
MESSAGES = assemble_prompt([], golden("cite24_query_legacy.txt"), CHOICES, "citation")
FEEDBACK = "The ppr list is ordered by importance, first entry most important. Weigh it against the center node and answer again."


def scripted(*replies):
    return MockBackend(MockPolicy("script", replies=replies))


def records(buf):
    return [json.loads(line) for line in buf.getvalue().splitlines()]


def test_feedback_flips_answer_and_transcript_records_both_turns():
    buf = io.StringIO()
    s = InteractiveSession(MESSAGES, scripted("center wins <answer>G</answer>", "ppr first <answer>A</answer>"), CHOICES, buf)
    first = s.ask()
    assert first.prediction.letter == "G"
    second = s.feedback(FEEDBACK)
    assert second.prediction.letter == "A"
    roles = [r["role"] for r in records(buf)]
    assert roles == ["system", "user", "assistant", "user", "assistant"]
    assert [r.get("parsed") for r in records(buf) if r["role"] == "assistant"] == ["G", "A"]
    assert records(buf)[3]["content"] == FEEDBACK


def test_feedback_before_ask_is_rejected():
    s = InteractiveSession(MESSAGES, scripted("<answer>A</answer>"), CHOICES)
    with pytest.raises(SessionStateError, match="/ask"):
        s.feedback("hello")
    s.ask()
    with pytest.raises(SessionStateError):
        s.ask()


def test_blank_feedback_is_ignored():
    s = InteractiveSession(MESSAGES, scripted("<answer>A</answer>"), CHOICES)
    s.ask()
    n = len(s.messages)
    assert s.feedback("   ") is None
    assert len(s.messages) == n


def test_quit_immediately_leaves_query_only_transcript():
    buf = io.StringIO()
    InteractiveSession(MESSAGES, scripted("<answer>A</answer>"), CHOICES, buf)
    assert [r["role"] for r in records(buf)] == ["system", "user"]


def test_backend_error_keeps_session_alive():
    class Down:
        deterministic = True
        calls = 0

        def complete(self, messages):
            Down.calls += 1
            if Down.calls == 1:
                raise TimeoutError("slow")
            return "<answer>B</answer>"

    buf = io.StringIO()
    s = InteractiveSession(MESSAGES, Down(), CHOICES, buf)
    t = s.ask()
    assert t.error.startswith("TimeoutError") and not s.queried
    assert s.ask().prediction.letter == "B"
    assert [r["role"] for r in records(buf)] == ["system", "user", "error", "assistant"]


def test_messages_sent_grow_with_history():
    seen = []

    class Spy:
        deterministic = True

        def complete(self, messages):
            seen.append(list(messages))
            return "<answer>A</answer>"

    s = InteractiveSession(MESSAGES, Spy(), CHOICES)
    s.ask()
    s.feedback("why?")
    assert len(seen[0]) == 2 and len(seen[1]) == 4
    assert seen[1][2] == {"role": "assistant", "content": "<answer>A</answer>"}


def test_replay_transcript(tmp_path):
    path = tmp_path / "t.jsonl"
    with open(path, "w") as fh:
        s = InteractiveSession(MESSAGES, scripted("<answer>G</answer>", "<answer>A</answer>"), CHOICES, fh)
        s.ask()
        s.feedback(FEEDBACK)
    assert [m["role"] for m in load_transcript(path)] == ["system", "user", "assistant", "user", "assistant"]
    again = replay_transcript(path, scripted("<answer>G</answer>", "<answer>A</answer>"), CHOICES)
    assert [t.prediction.letter for t in again.turns] == ["G", "A"]
