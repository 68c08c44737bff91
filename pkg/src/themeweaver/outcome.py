"""Outcome generation (course plan, introduction, activities) and export.

The summarizer role emits plans in the shared line grammar from
:mod:`themeweaver.planfmt`, so the LLM response, the txt export, and the
parser all speak one format. Lesson-count mismatches get one repair turn
and then degrade to a warning: teachers edit everything downstream, so a
blocking error would fight the workflow.
"""

from __future__ import annotations

import html as html_mod
from dataclasses import dataclass, field
from typing import Optional

from .agents import Orchestrator, parse_activities
from .errors import EmptyCollectionEntry, MalformedOutput, NothingToExport
from .gateway import ChatMessage
from .planfmt import CoursePlan, parse_plan, render_plan, validate_plan
from .prompts import build_prompt, persona
from .session import Session

MIN_RECOMMENDED_TEXTS = 3


@dataclass
class GeneratedOutcome:
    context_card_id: str
    plan: CoursePlan
    plan_text: str
    warnings: list[str] = field(default_factory=list)


class OutcomeGenerator:
    """Drives the summarizer role; pure transforms elsewhere."""

    def __init__(self, orchestrator: Orchestrator):
        self.orch = orchestrator

    def _summarizer_call(self, task: str, payload: dict) -> tuple[list[ChatMessage], str]:
        p = persona("context_summarizer")
        spec = build_prompt(p, task, payload, self.orch.catalog)
        messages = [
            ChatMessage(role="system", content=f"You are a {p.persona_line}."),
            ChatMessage(role="user", content=spec.render(self.orch.catalog)),
        ]
        response = self.orch.gateway.chat(messages, role_hint="context_summarizer").response
        return messages, response

    def _repair(self, messages: list[ChatMessage], bad: str, reason: str) -> str:
        repair = messages + [
            ChatMessage(role="assistant", content=bad),
            ChatMessage(
                role="user",
                content=(
                    f"Your previous output failed to parse because: {reason}. "
                    "Re-emit your full answer in exactly the required format."
                ),
            ),
        ]
        return self.orch.gateway.chat(repair, role_hint="context_summarizer").response

    # -- course plan --------------------------------------------------------

    def generate_course_plan(self, session: Session, context_card_id: str,
                             expected_lesson_count: int) -> GeneratedOutcome:
        with session.lock:
            card = session.card(context_card_id)
            starred = [c for c in session.children(context_card_id) if c.state == "starred"]
            if not starred:
                raise EmptyCollectionEntry(
                    f"context card {context_card_id!r} has no starred texts"
                )
            warnings = []
            if len(starred) < MIN_RECOMMENDED_TEXTS:
                warnings.append(
                    f"only {len(starred)} starred texts; {MIN_RECOMMENDED_TEXTS}+ recommended"
                )
            payload = {
                "context_title": card.title,
                "context_description": card.content,
                "analyses": [
                    {"title": c.material_title, "analysis": c.content} for c in starred
                ],
                "expected_lesson_count": expected_lesson_count,
            }
            starred_titles = [c.material_title for c in starred]

        messages, response = self._summarizer_call("generate_plan", payload)
        try:
            plan = parse_plan(response)
        except MalformedOutput as exc:
            response = self._repair(messages, response, exc.message)
            plan = parse_plan(response)

        if plan.total_lessons() != expected_lesson_count:
            retry = self._repair(
                messages, response,
                f"the plan has {plan.total_lessons()} lessons but exactly "
                f"{expected_lesson_count} were requested",
            )
            try:
                retry_plan = parse_plan(retry)
                if retry_plan.total_lessons() == expected_lesson_count:
                    plan, response = retry_plan, retry
            except MalformedOutput:
                pass  # keep the first parseable plan
            if plan.total_lessons() != expected_lesson_count:
                warnings.append(
                    f"lesson count mismatch: plan has {plan.total_lessons()}, "
                    f"expected {expected_lesson_count}"
                )

        warnings.extend(validate_plan(plan))
        plan_titles = set(plan.material_titles())
        for title in starred_titles:
            if title not in plan_titles:
                warnings.append(f"starred text {title!r} missing from the plan")

        plan_text = render_plan(plan)
        with session.lock:
            session.set_lesson_count(context_card_id, expected_lesson_count)
            session.set_plan(context_card_id, plan_text, warnings)
        return GeneratedOutcome(context_card_id=context_card_id, plan=plan,
                                plan_text=plan_text, warnings=warnings)

    # -- introduction -------------------------------------------------------

    def generate_introduction(self, session: Session, context_card_id: str) -> str:
        with session.lock:
            card = session.card(context_card_id)
            if session.outcome is None or not session.outcome.plan_text:
                raise NothingToExport("generate the course plan first")
            payload = {
                "context_title": card.title,
                "course_plan": session.outcome.plan_text,
            }
        messages, response = self._summarizer_call("generate_introduction", payload)
        if not response.strip():
            response = self._repair(messages, response, "the introduction is empty")
        with session.lock:
            session.set_introduction(context_card_id, response.strip())
        return response.strip()

    # -- activities ---------------------------------------------------------

    def generate_activities(self, session: Session, context_card_id: str) -> list[dict]:
        with session.lock:
            if session.outcome is None or not session.outcome.plan_text:
                raise NothingToExport("generate the course plan first")
            if not session.outcome.introduction:
                raise NothingToExport("generate the introduction first")
            payload = {
                "course_plan": session.outcome.plan_text,
                "introduction": session.outcome.introduction,
            }
        messages, response = self._summarizer_call("generate_activities", payload)
        try:
            activities, warnings = parse_activities(response)
        except MalformedOutput as exc:
            response = self._repair(messages, response, exc.message)
            activities, warnings = parse_activities(response)
        with session.lock:
            session.set_activities(context_card_id, activities, warnings)
        return activities


# -- export ----------------------------------------------------------------

_TXT_INTRO_HEADER = "Introduction"
_TXT_PLAN_HEADER = "Course Plan"
_TXT_ACT_HEADER = "Classroom Activities"


def export_txt(session: Session) -> bytes:
    """Plain-text rendering: introduction, plan, activities. UTF-8, LF."""
    outcome = session.outcome
    if outcome is None or not outcome.plan_text:
        raise NothingToExport("no generated outcome in this session")
    card = session.card(outcome.context_card_id)
    parts = [card.title, "=" * max(4, len(card.title)), ""]
    if outcome.introduction:
        parts += [_TXT_INTRO_HEADER, "-" * len(_TXT_INTRO_HEADER), outcome.introduction, ""]
    parts += [_TXT_PLAN_HEADER, "-" * len(_TXT_PLAN_HEADER), outcome.plan_text.rstrip("\n"), ""]
    if outcome.activities:
        parts += [_TXT_ACT_HEADER, "-" * len(_TXT_ACT_HEADER)]
        parts += [
            f"- [{a['kind']}] {a['title']}: {a['description']}" for a in outcome.activities
        ]
        parts.append("")
    return ("\n".join(parts)).encode("utf-8")


def parse_txt_export(data: bytes) -> dict:
    """Inverse of :func:`export_txt`; returns title, introduction, plan, activities."""
    text = data.decode("utf-8")
    lines = text.split("\n")
    title = lines[0]
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    i = 2
    while i < len(lines):
        line = lines[i]
        if line in (_TXT_INTRO_HEADER, _TXT_PLAN_HEADER, _TXT_ACT_HEADER) and \
                i + 1 < len(lines) and set(lines[i + 1]) == {"-"}:
            current = line
            sections[current] = []
            i += 2
            continue
        if current:
            sections[current].append(line)
        i += 1
    intro = "\n".join(sections.get(_TXT_INTRO_HEADER, [])).strip()
    plan_text = "\n".join(sections.get(_TXT_PLAN_HEADER, [])).strip("\n")
    activities = []
    for line in sections.get(_TXT_ACT_HEADER, []):
        if line.startswith("- ["):
            kind, rest = line[3:].split("] ", 1)
            a_title, _, desc = rest.partition(": ")
            activities.append({"title": a_title, "description": desc, "kind": kind})
    return {
        "title": title,
        "introduction": intro,
        "plan": parse_plan(plan_text + "\n") if plan_text else None,
        "activities": activities,
    }


def export_html(session: Session) -> bytes:
    """Standalone print-friendly document, no scripts, no external resources."""
    outcome = session.outcome
    if outcome is None or not outcome.plan_text:
        raise NothingToExport("no generated outcome in this session")
    card = session.card(outcome.context_card_id)
    esc = html_mod.escape
    plan = parse_plan(outcome.plan_text)

    body: list[str] = [f"<h1>{esc(card.title)}</h1>"]
    if outcome.introduction:
        body.append(f"<h2>{esc(_TXT_INTRO_HEADER)}</h2>")
        for para in outcome.introduction.split("\n\n"):
            body.append(f"<p>{esc(para)}</p>")
    body.append(f"<h2>{esc(_TXT_PLAN_HEADER)}</h2>")
    for i, seg in enumerate(plan.segments, start=1):
        body.append(f"<h3>Segment {i}: {esc(seg.title)}</h3>")
        body.append("<ul>")
        for grp in seg.groups:
            titles = " + ".join(f"&#8220;{esc(t)}&#8221;" for t in grp.material_titles)
            body.append(f"<li>{titles} <em>({esc(grp.theme_note)})</em><ol>")
            for lesson in grp.lessons:
                body.append(
                    f'<li value="{lesson.number}">Lesson {lesson.number}: '
                    f"{esc(lesson.objective)}</li>"
                )
            body.append("</ol></li>")
        body.append("</ul>")
    if outcome.activities:
        body.append(f"<h2>{esc(_TXT_ACT_HEADER)}</h2><ul>")
        for a in outcome.activities:
            body.append(
                f"<li><strong>{esc(a['title'])}</strong> [{esc(a['kind'])}]: "
                f"{esc(a['description'])}</li>"
            )
        body.append("</ul>")

    doc = (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>{esc(card.title)}</title>\n"
        "<style>\n"
        "body { font-family: Georgia, serif; max-width: 46rem; margin: 2rem auto; "
        "line-height: 1.5; color: #222; }\n"
        "h1 { border-bottom: 2px solid #222; padding-bottom: .3rem; }\n"
        "h3 { margin-bottom: .2rem; }\n"
        "@media print { body { margin: 0; } }\n"
        "</style>\n</head>\n<body>\n"
        + "\n".join(body)
        + "\n</body>\n</html>\n"
    )
    return doc.encode("utf-8")
