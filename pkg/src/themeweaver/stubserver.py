"""Deterministic development responder.

``respond(messages)`` produces a format-valid completion for any prompt
this package emits, derived purely from the prompt text. It backs the
``scripted`` provider kind (offline demos, fixture recording in CI) and
the fake chat-completion HTTP server used in tests.

It is a format oracle, not a model: content is boilerplate, structure is
exactly what each task's response contract demands.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Iterable

_BODY_RE = re.compile(r'Reading material "([^"]*)":\n(.*?)(?:\n\n|$)', re.S)
_THEME_RE = re.compile(r'Theme "([^"]*)"')
_LESSONS_RE = re.compile(r"exactly (\d+) lessons")
_ANALYSIS_TITLE_RE = re.compile(r'Analysis of "([^"]*)":')
_MENTION_RE = re.compile(r'Mention the theme "([^"]*)"')


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:8]


def _first_sentence(body: str) -> str:
    m = re.search(r"[^.!?]*[.!?]", body)
    return m.group(0).strip() if m else body[:60]


def respond(messages: Iterable[dict | object]) -> str:
    msgs = [
        m if isinstance(m, dict) else {"role": m.role, "content": m.content}
        for m in messages
    ]
    prompt = msgs[1]["content"] if len(msgs) > 1 else msgs[0]["content"]
    theme = _THEME_RE.search(prompt)
    theme_title = theme.group(1) if theme else "the theme"

    if "overall:" in prompt and "element line" in prompt:
        title, body = _BODY_RE.search(prompt).groups()
        sentence = _first_sentence(body)
        return (
            f"overall: \"{title}\" meets {theme_title} where its imagery slows down "
            f"and asks to be read twice.\n"
            f"- sentence :: {sentence} :: This line carries the theme's central image "
            f"into the text.\n"
            f"- viewpoint :: {sentence} :: Read as a viewpoint, it frames how the "
            f"theme shapes the narrator's attention."
        )
    if "rating:" in prompt:
        subject = _digest(prompt)
        return (
            "rating: 4\n"
            f"critique: The connection to {theme_title} is defensible but leans on a "
            f"single image; a cautious reader would want one more anchor point "
            f"(ref {subject}).\n"
            "relevance: yes\n"
            "accuracy: yes"
        )
    if "similarity:" in prompt:
        bodies = _BODY_RE.findall(prompt)
        a = bodies[0][0] if bodies else "the first text"
        b = bodies[1][0] if len(bodies) > 1 else "the second text"
        return (
            f"similarity: Both \"{a}\" and \"{b}\" approach {theme_title} through "
            f"concrete, observable detail.\n"
            f"similarity: Each text lets a small object stand for the whole theme.\n"
            f"difference: \"{a}\" keeps the narrator inside the scene while \"{b}\" "
            f"watches it from a remove."
        )
    if "- [literature]" in prompt:
        return (
            "- [literature] Close Reading Circle: Students reread the passages named "
            "in the plan and each share one line that carries the theme.\n"
            "- [interdisciplinary] Theme Exhibit: Working in pairs, students present "
            "the theme with one artifact borrowed from the other subject.\n"
            "- [literature] Write the Missing Scene: Students write a short scene the "
            "plan's texts leave untold, keeping the theme in view."
        )
    if "Segment <n>:" in prompt:
        n_lessons = int(_LESSONS_RE.search(prompt).group(1))
        titles = _ANALYSIS_TITLE_RE.findall(prompt) or ["Untitled"]
        return _build_plan(theme_title, titles, n_lessons)
    mention = _MENTION_RE.search(prompt)
    if mention:
        t = mention.group(1)
        return (
            f"This unit invites students to meet the theme \"{t}\" through a small "
            f"set of carefully ordered texts. Each segment begins with close reading "
            f"and ends by handing the theme back to the students, so that by the "
            f"final lesson the connection belongs to them rather than to the plan."
        )
    if "Write a detailed prose description" in prompt:
        mats = _BODY_RE.findall(prompt)
        names = ", ".join(f'"{t}"' for t, _ in mats) or "the selected texts"
        return (
            f"{theme_title} offers a frame the selected materials keep reaching for "
            f"on their own. Across {names}, the theme surfaces as a recurring image "
            f"that a class can trace from text to text, starting from the concrete "
            f"details and working toward the idea behind them."
        )
    question = re.search(r"Question: (.*)$", prompt, re.S)
    q = question.group(1).strip() if question else "your question"
    return (
        f"Considering {theme_title}, the short answer to \"{q[:120]}\" is that the "
        f"text already gestures at it: follow the concrete images first, then ask "
        f"students what those images have in common, and the connection emerges "
        f"without being imposed."
    )


def _build_plan(theme_title: str, titles: list[str], n_lessons: int) -> str:
    # one segment per title (capped by lesson count), lessons dealt round-robin
    n_segments = max(1, min(len(titles), n_lessons))
    counts = [n_lessons // n_segments] * n_segments
    for i in range(n_lessons % n_segments):
        counts[i] += 1
    lines: list[str] = []
    lesson = 1
    for i in range(n_segments):
        title = titles[i % len(titles)]
        if lines:
            lines.append("")
        lines.append(f"Segment {i + 1}: Meeting {theme_title} · Movement {i + 1}")
        lines.append(f'- "{title}" (How this text carries {theme_title})')
        for _ in range(counts[i]):
            lines.append(
                f"  - Lesson {lesson}: Trace {theme_title} through the key images of "
                f"the text and explain the connection in your own words."
            )
            lesson += 1
    return "\n".join(lines) + "\n"


class _Handler(BaseHTTPRequestHandler):
    fail_first = 0  # class-level switch for retry tests
    _failures = 0

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        cls = type(self)
        if cls._failures < cls.fail_first:
            cls._failures += 1
            self.send_response(503)
            self.end_headers()
            return
        if self.path.endswith("/embeddings"):
            # tests use stub embeddings; live embed path kept minimal
            from .gateway import stub_embedding

            vec = stub_embedding(payload["input"], 8).tolist()
            body = json.dumps({"data": [{"embedding": vec}]})
        else:
            content = respond(payload["messages"])
            body = json.dumps({"choices": [{"message": {"content": content}}]})
        data = body.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def serve_fake_provider(port: int = 0, fail_first: int = 0):
    """Start the fake chat-completion server; returns (server, port)."""
    _Handler.fail_first = fail_first
    _Handler._failures = 0
    server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address[1]
