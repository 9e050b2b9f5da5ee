import threading
from pathlib import Path

import pytest

from groundgate.model import EvalRecord, Label, read_records
from groundgate.providers import DATA_DIR, HashingEmbedder, OverlapJudge, Providers, ScriptedChat

GOLDEN = Path(__file__).parent / "golden"


class CountingChat:
    """Wraps a chat model and counts calls per template id."""

    def __init__(self, inner):
        self.inner = inner
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def chat(self, request):
        from groundgate.providers.mock import parse_sentinels

        template_id, _ = parse_sentinels(request.prompt)
        with self._lock:
            self.calls.append(template_id)
        return self.inner.chat(request)

    def reset(self):
        self.calls.clear()


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def dev_records(data_dir):
    return read_records(data_dir / "dev.jsonl")


@pytest.fixture(scope="session")
def test_records(data_dir):
    return read_records(data_dir / "test.jsonl")


@pytest.fixture(scope="session")
def scripted_chat(data_dir):
    return ScriptedChat.from_file(data_dir / "chat_fixtures.json")


@pytest.fixture
def mock_providers(scripted_chat):
    return Providers(HashingEmbedder(), OverlapJudge(), scripted_chat)


@pytest.fixture
def simple_record():
    return EvalRecord(
        record_id="r1",
        query_id="q1",
        query="When was the lease signed?",
        context=("The lease was signed in 2019. The tenant paid rent monthly.", "The landlord sued in 2021."),
        response="The lease was signed in 2019. The landlord sued in 2021.",
        gold_label=Label.GROUNDED,
    )


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = rep.failed
    if rep.when == "call" or failed:
        prev = _ACCEPTANCE.get(number, (title, True))[1]
        _ACCEPTANCE[number] = (title, prev and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}")
