"""Provider-neutral chat-completion and embedding access.

Three provider kinds:

* ``live_http`` — a generic JSON chat-completion HTTP backend. The bearer
  credential is read from the environment variable named by
  ``credential_ref`` and never logged.
* ``replay`` — deterministic offline provider. Chat responses come from a
  fixture file keyed by a content hash of the message list; a missing key
  raises :class:`FixtureMiss` rather than falling through. Embeddings use
  the same seeded-hash algorithm as ``hash_stub``.
* ``hash_stub`` — embeddings only, plus canned chat for smoke tests.

Stub embedding algorithm (stable, documented contract):
  seed = first 8 bytes of BLAKE2b(utf-8 text) as a big-endian integer;
  vector = numpy ``default_rng(seed).standard_normal(dim)``, then
  L2-normalized.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import httpx
import numpy as np

from .errors import (
    BudgetExceeded,
    FixtureMiss,
    ProviderHttpError,
    ProviderTimeout,
    ProviderUnavailable,
)

VALID_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise ValueError(f"bad role: {self.role}")
        if not self.content:
            raise ValueError("empty message content")


@dataclass
class ProviderConfig:
    kind: str = "hash_stub"  # live_http | replay | hash_stub
    model_name: str = "stub-chat"
    base_url: str = ""
    chat_path: str = "/v1/chat/completions"
    embed_path: str = "/v1/embeddings"
    credential_ref: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.7
    embedding_dim: int = 64
    fixture_path: Optional[str] = None
    char_budget: int = 24_000

    @property
    def provider_tag(self) -> str:
        return f"{self.kind}:{self.model_name}:d{self.embedding_dim}"

    @classmethod
    def from_file(cls, path: str | Path) -> "ProviderConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)


@dataclass
class ChatExchange:
    request: list[ChatMessage]
    response: str
    provider_tag: str
    latency: float = 0.0
    role_hint: str = ""  # which agent role issued the call, set by callers

    def canonical(self) -> dict:
        # latency excluded: transcripts must be byte-identical across runs
        return {
            "role_hint": self.role_hint,
            "request": [{"role": m.role, "content": m.content} for m in self.request],
            "response": self.response,
            "provider_tag": self.provider_tag,
        }


class TranscriptLog:
    """Append-only exchange log with serialized writes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[ChatExchange] = []

    def append(self, exchange: ChatExchange) -> None:
        with self._lock:
            self._entries.append(exchange)

    @property
    def entries(self) -> list[ChatExchange]:
        with self._lock:
            return list(self._entries)

    def dump(self) -> str:
        """Canonical JSONL rendering, stable across runs."""
        lines = [
            json.dumps(e.canonical(), ensure_ascii=False, sort_keys=True)
            for e in self.entries
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def fixture_key(messages: Iterable[ChatMessage]) -> str:
    """Stable hash of the canonicalized message list."""
    canon = json.dumps(
        [{"role": m.role, "content": m.content} for m in messages],
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def stub_embedding(text: str, dim: int) -> np.ndarray:
    """Reproducible pseudo-random unit vector for a text (see module doc)."""
    seed = int.from_bytes(
        hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big"
    )
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


def load_fixtures(path: str | Path) -> dict[str, str]:
    """Fixture file: one JSON object {key, response} per line."""
    fixtures: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        fixtures[rec["key"]] = rec["response"]
    return fixtures


def save_fixtures(path: str | Path, fixtures: dict[str, str]) -> None:
    lines = [
        json.dumps({"key": k, "response": v}, ensure_ascii=False)
        for k, v in fixtures.items()
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


class Gateway:
    """One chat/embed front door per process; shareable across threads."""

    def __init__(self, config: ProviderConfig, transcript: TranscriptLog | None = None):
        self.config = config
        self.transcript = transcript if transcript is not None else TranscriptLog()
        self.retry_counts: list[int] = []
        self._fixtures: dict[str, str] = {}
        if config.kind == "replay":
            if not config.fixture_path:
                raise ValueError("replay provider requires fixture_path")
            self._fixtures = load_fixtures(config.fixture_path)

    # -- chat ---------------------------------------------------------------

    def chat(self, messages: list[ChatMessage], role_hint: str = "") -> ChatExchange:
        if not messages:
            raise ValueError("messages must be non-empty")
        if messages[0].role != "system":
            raise ValueError("first message must have role system")
        total = sum(len(m.content) for m in messages)
        if total > self.config.char_budget:
            raise BudgetExceeded(
                f"request content length {total} exceeds budget {self.config.char_budget}"
            )

        start = time.monotonic()
        if self.config.kind == "replay":
            key = fixture_key(messages)
            if key not in self._fixtures:
                raise FixtureMiss(f"no fixture for key {key}")
            response = self._fixtures[key]
            latency = 0.0
        elif self.config.kind == "scripted":
            from .stubserver import respond

            response = respond(messages)
            latency = 0.0
        elif self.config.kind == "hash_stub":
            response = f"stub-response:{fixture_key(messages)[:12]}"
            latency = 0.0
        else:
            response = self._chat_http(messages)
            latency = time.monotonic() - start

        exchange = ChatExchange(
            request=list(messages),
            response=response,
            provider_tag=self.config.provider_tag,
            latency=latency,
            role_hint=role_hint,
        )
        self.transcript.append(exchange)
        return exchange

    def _chat_http(self, messages: list[ChatMessage]) -> str:
        payload = {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        data = self._post(self.config.chat_path, payload)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderHttpError(f"malformed completion payload: {exc}") from exc

    # -- embeddings ---------------------------------------------------------

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        if self.config.kind in ("hash_stub", "replay", "scripted"):
            return stub_embedding(text, self.config.embedding_dim)
        payload = {"model": self.config.model_name, "input": text}
        data = self._post(self.config.embed_path, payload)
        try:
            v = np.asarray(data["data"][0]["embedding"], dtype=np.float64)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderHttpError(f"malformed embedding payload: {exc}") from exc
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ProviderHttpError("provider returned a zero embedding")
        return v / norm

    # -- http plumbing ------------------------------------------------------

    def _post(self, path: str, payload: dict) -> dict:
        headers = {}
        if self.config.credential_ref:
            secret = os.environ.get(self.config.credential_ref, "")
            if not secret:
                raise ProviderUnavailable(
                    f"credential env var {self.config.credential_ref} is unset"
                )
            headers["Authorization"] = f"Bearer {secret}"
        url = self.config.base_url.rstrip("/") + path
        retries = 0
        while True:
            try:
                resp = httpx.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
            except httpx.TimeoutException as exc:
                if retries < self.config.max_retries:
                    retries += 1
                    time.sleep(0.05 * 2**retries)
                    continue
                self.retry_counts.append(retries)
                raise ProviderTimeout(str(exc)) from exc
            except httpx.HTTPError as exc:
                raise ProviderUnavailable(str(exc)) from exc
            if resp.status_code >= 500 and retries < self.config.max_retries:
                retries += 1
                time.sleep(0.05 * 2**retries)
                continue
            self.retry_counts.append(retries)
            if resp.status_code != 200:
                raise ProviderHttpError(
                    f"provider returned {resp.status_code}", status=resp.status_code
                )
            return resp.json()
