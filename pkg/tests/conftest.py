import json
import sys
from importlib import resources

import pytest


def pytest_terminal_summary(terminalreporter):
    """Echo acceptance-criterion pass/fail lines past output capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULT_LINES", None)
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in lines:
            terminalreporter.write_line(line)

from themeweaver.agents import Orchestrator
from themeweaver.corpus import Corpus
from themeweaver.gateway import Gateway, ProviderConfig
from themeweaver.session import SessionStore


def load_bundled(corpus: Corpus):
    data = resources.files("themeweaver.data")
    corpus.import_pool_file(str(data / "pool_informal.jsonl"))
    corpus.import_pool_file(str(data / "pool_subjects.jsonl"))
    records = [
        json.loads(line)
        for line in (data / "sample_materials.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    return corpus.import_materials(records)


@pytest.fixture
def gateway():
    return Gateway(ProviderConfig(kind="scripted", embedding_dim=32))


@pytest.fixture
def corpus(gateway):
    return Corpus(gateway)


@pytest.fixture
def loaded_corpus(corpus):
    materials = load_bundled(corpus)
    return corpus, materials


@pytest.fixture
def orchestrator(gateway, loaded_corpus):
    corpus, _ = loaded_corpus
    return Orchestrator(gateway, corpus)


@pytest.fixture
def store():
    return SessionStore()


@pytest.fixture
def session(store, loaded_corpus):
    _, materials = loaded_corpus
    return store.create(
        ["informal", "science", "art", "music", "mathematics"],
        [m.id for m in materials[:4]],
    )


class SeqGateway:
    """Queue-backed gateway stand-in for fault-injection tests."""

    def __init__(self, responses, embedding_dim=32):
        from themeweaver.gateway import ProviderConfig, TranscriptLog

        self.responses = list(responses)
        self.config = ProviderConfig(kind="scripted", embedding_dim=embedding_dim)
        self.transcript = TranscriptLog()
        self.calls = []

    def chat(self, messages, role_hint=""):
        from themeweaver.gateway import ChatExchange

        self.calls.append((role_hint, messages))
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        exchange = ChatExchange(
            request=list(messages), response=item,
            provider_tag=self.config.provider_tag, role_hint=role_hint,
        )
        self.transcript.append(exchange)
        return exchange

    def embed(self, text):
        from themeweaver.gateway import stub_embedding

        return stub_embedding(text, self.config.embedding_dim)
