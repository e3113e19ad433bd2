import socket
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
ROOT = TESTS.parent
FIXTURES = TESTS / "fixtures"
GOLDEN = TESTS / "golden"

sys.path.insert(0, str(TESTS))

# filled by test_acceptance.py, printed in the terminal summary
ACCEPTANCE: dict[int, tuple[str, bool, float]] = {}
_LOOPBACK = ("127.0.0.1", "::1", "localhost")
_real_connect = socket.socket.connect


def _guarded_connect(self, address):
    host = address[0] if isinstance(address, tuple) else address
    if self.family in (socket.AF_INET, socket.AF_INET6) and host not in _LOOPBACK:
        raise OSError(f"network access disabled in tests (tried {host})")
    return _real_connect(self, address)


@pytest.fixture(autouse=True)
def _offline(monkeypatch):
    monkeypatch.setattr(socket.socket, "connect", _guarded_connect)
    # tests must never pick up a real key from the developer's shell
    monkeypatch.delenv("LLM_API_KEY", raising=False)


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, secs = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {title} ({secs:.2f}s)")
