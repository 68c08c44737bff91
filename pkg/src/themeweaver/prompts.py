"""Co-Star prompt assembly for the four agent roles.

Every prompt carries six sections in fixed order (context, objective,
style, tone, audience, response). The objective section always names the
six lesson-quality metrics; the context section carries exactly the
knowledge a task needs and nothing else, enforced by per-task payload
contracts.

Section headers and metric names live in a message catalog
(``data/catalog.<lang>.json``) so the content language is configurable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from .errors import PayloadMissing, PayloadOverflow

ROLES = ("context_analyst", "text_analyst", "text_reviewer", "context_summarizer")

METRIC_KEYS = (
    "content_alignment",
    "internal_logic",
    "curriculum_standards",
    "subject_goals",
    "subject_integration",
    "knowledge_transfer",
)

PERSONA_LINES = {
    "context_analyst": "teacher with expertise across various disciplines",
    "text_analyst": "active-minded literature teacher",
    "text_reviewer": "conservative and experienced literature teacher",
    "context_summarizer": "literature teacher skilled in summarization",
}

_STYLES = {
    "context_analyst": "curious, connective, grounded in concrete detail",
    "text_analyst": "close-reading, evidence-first, quotes the text verbatim",
    "text_reviewer": "skeptical, precise, points at weaknesses before strengths",
    "context_summarizer": "structured, concise, faithful to the source analyses",
}


@dataclass(frozen=True)
class AgentPersona:
    role: str
    persona_line: str
    style: str
    tone: str
    audience: str


@dataclass(frozen=True)
class PromptSpec:
    context_section: str
    objective_section: str
    style_section: str
    tone_section: str
    audience_section: str
    response_section: str

    def render(self, catalog: "Catalog") -> str:
        parts = []
        for header, body in zip(
            catalog.section_headers(),
            (
                self.context_section,
                self.objective_section,
                self.style_section,
                self.tone_section,
                self.audience_section,
                self.response_section,
            ),
        ):
            parts.append(f"# {header}\n{body}")
        return "\n\n".join(parts)


class Catalog:
    """Localized section headers, metric names, and task boilerplate."""

    def __init__(self, language: str = "en"):
        self.language = language
        path = resources.files("themeweaver.data") / f"catalog.{language}.json"
        self._data = json.loads(path.read_text(encoding="utf-8"))

    def section_headers(self) -> list[str]:
        return self._data["sections"]

    def metric_names(self) -> list[str]:
        return [self._data["metrics"][k]["name"] for k in METRIC_KEYS]

    def metric_lines(self) -> str:
        return "\n".join(
            f"- {self._data['metrics'][k]['name']}: {self._data['metrics'][k]['definition']}"
            for k in METRIC_KEYS
        )

    def text(self, key: str) -> str:
        return self._data["strings"][key]


def persona(role: str) -> AgentPersona:
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    return AgentPersona(
        role=role,
        persona_line=PERSONA_LINES[role],
        style=_STYLES[role],
        tone="professional, encouraging",
        audience="elementary school literature teachers and grade 3-6 students",
    )


def course_plan_template() -> str:
    """Canonical course-plan example in the shared line grammar."""
    path = resources.files("themeweaver.data") / "course_plan_template.txt"
    return path.read_text(encoding="utf-8")


def _fmt_material(title: str, body: str) -> str:
    return f'Reading material "{title}":\n{body}'


def _ctx_describe(p: dict) -> str:
    mats = "\n\n".join(_fmt_material(m["title"], m["body"]) for m in p["materials"])
    return (
        "Task: study the candidate theme below and write a detailed description "
        "that connects it to every reading material in this session.\n\n"
        f'Theme "{p["context_title"]}" ({p["context_subject"]}):\n{p["context_background"]}\n\n'
        f"{mats}"
    )


def _ctx_find_context(p: dict) -> str:
    thread = "".join(
        f"\nEarlier question: {q}\nEarlier answer: {a}" for q, a in p["qa_history"]
    )
    return (
        "Task: answer the teacher's question about this theme card.\n\n"
        f'Theme "{p["context_title"]}":\n{p["description"]}{thread}\n\n'
        f"Question: {p['question']}"
    )


def _ctx_analyze_text(p: dict) -> str:
    return (
        "Task: find the specific points where this one text connects to the theme "
        "and produce an in-depth single-text analysis.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"{_fmt_material(p['material_title'], p['material_body'])}"
    )


def _ctx_find_text(p: dict) -> str:
    thread = "".join(
        f"\nEarlier question: {q}\nEarlier answer: {a}" for q, a in p["qa_history"]
    )
    return (
        "Task: answer the teacher's question about this text under the given theme.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"{_fmt_material(p['material_title'], p['material_body'])}{thread}\n\n"
        f"Question: {p['question']}"
    )


def _ctx_compare(p: dict) -> str:
    return (
        "Task: compare the two texts in relation to the theme, listing similarities "
        "and differences.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"{_fmt_material(p['material_a']['title'], p['material_a']['body'])}\n\n"
        f"{_fmt_material(p['material_b']['title'], p['material_b']['body'])}"
    )


def _ctx_review(p: dict) -> str:
    return (
        "Task: assess the relevance and accuracy of the analysis below against the "
        "reading material and the theme.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"{_fmt_material(p['material_title'], p['material_body'])}\n\n"
        f"Analysis under review:\n{p['analysis_text']}"
    )


def _ctx_review_edit(p: dict) -> str:
    return (
        "Task: the teacher edited this card; re-assess the edited content against "
        "the theme.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"Edited content:\n{p['edited_text']}"
    )


def _ctx_plan(p: dict) -> str:
    analyses = "\n\n".join(
        f'Analysis of "{a["title"]}":\n{a["analysis"]}' for a in p["analyses"]
    )
    return (
        f"Task: integrate the theme and the analyses below into a course plan with "
        f"exactly {p['expected_lesson_count']} lessons in total.\n\n"
        f'Theme "{p["context_title"]}":\n{p["context_description"]}\n\n'
        f"{analyses}"
    )


def _ctx_introduction(p: dict) -> str:
    return (
        "Task: write a prose introduction aligned with the course plan below. "
        f'Mention the theme "{p["context_title"]}" by name.\n\n'
        f"Course plan:\n{p['course_plan']}"
    )


def _ctx_activities(p: dict) -> str:
    return (
        "Task: recommend classroom activities for this course plan, covering both "
        "literature activities and activities drawing on the other subject.\n\n"
        f"Course plan:\n{p['course_plan']}\n\nIntroduction:\n{p['introduction']}"
    )


_RESP_ANALYSIS = (
    "Respond in exactly this plain-text format:\n"
    "overall: <one-paragraph summary of how the text connects to the theme>\n"
    "- <sentence|paragraph|viewpoint> :: <verbatim excerpt from the text> :: "
    "<how it connects to the theme>\n"
    "List at least one element line. Every excerpt must be copied verbatim "
    "from the reading material."
)

_RESP_REVIEW = (
    "Respond in exactly this plain-text format:\n"
    "rating: <integer 1-5>\n"
    "critique: <one-paragraph critical assessment>\n"
    "relevance: <yes|no>\n"
    "accuracy: <yes|no>"
)

_RESP_COMPARE = (
    "Respond with one item per line, at least one line total:\n"
    "similarity: <a similarity in relation to the theme>\n"
    "difference: <a difference in relation to the theme>"
)

_RESP_ACTIVITIES = (
    "Respond with one activity per line:\n"
    "- [literature] <title>: <description>\n"
    "- [interdisciplinary] <title>: <description>\n"
    "Titles must be unique."
)

_RESP_PROSE = "Respond with plain prose. No headings, no lists."


def _resp_plan(p: dict) -> str:
    return (
        "Respond with a course plan in exactly this line format, and nothing else:\n"
        'Segment <n>: <segment title>\n- "<material title>" + "<material title>" '
        "(<theme note>)\n  - Lesson <k>: <objective>\n"
        f"Number lessons consecutively from 1; the plan must contain exactly "
        f"{p['expected_lesson_count']} lessons. Example of the expected shape:\n\n"
        + course_plan_template()
    )


@dataclass(frozen=True)
class TaskSpec:
    role: str
    required_keys: frozenset[str]
    context_builder: Callable[[dict], str]
    response: Callable[[dict], str] | str


TASKS: dict[str, TaskSpec] = {
    "describe_context": TaskSpec(
        "context_analyst",
        frozenset({"context_title", "context_subject", "context_background", "materials"}),
        _ctx_describe,
        "Write a detailed prose description of the theme and its connections to "
        "each reading material. No headings.",
    ),
    "find_context": TaskSpec(
        "context_analyst",
        frozenset({"context_title", "description", "question", "qa_history"}),
        _ctx_find_context,
        _RESP_PROSE,
    ),
    "analyze_text": TaskSpec(
        "text_analyst",
        frozenset({"context_title", "context_description", "material_title", "material_body"}),
        _ctx_analyze_text,
        _RESP_ANALYSIS,
    ),
    "find_text": TaskSpec(
        "text_analyst",
        frozenset(
            {"context_title", "context_description", "material_title", "material_body",
             "question", "qa_history"}
        ),
        _ctx_find_text,
        _RESP_PROSE,
    ),
    "compare_texts": TaskSpec(
        "text_analyst",
        frozenset({"context_title", "context_description", "material_a", "material_b"}),
        _ctx_compare,
        _RESP_COMPARE,
    ),
    "review_analysis": TaskSpec(
        "text_reviewer",
        frozenset(
            {"context_title", "context_description", "material_title", "material_body",
             "analysis_text"}
        ),
        _ctx_review,
        _RESP_REVIEW,
    ),
    "review_edit": TaskSpec(
        "text_reviewer",
        frozenset({"context_title", "context_description", "edited_text"}),
        _ctx_review_edit,
        _RESP_REVIEW,
    ),
    "generate_plan": TaskSpec(
        "context_summarizer",
        frozenset({"context_title", "context_description", "analyses", "expected_lesson_count"}),
        _ctx_plan,
        _resp_plan,
    ),
    "generate_introduction": TaskSpec(
        "context_summarizer",
        frozenset({"context_title", "course_plan"}),
        _ctx_introduction,
        _RESP_PROSE,
    ),
    "generate_activities": TaskSpec(
        "context_summarizer",
        frozenset({"course_plan", "introduction"}),
        _ctx_activities,
        _RESP_ACTIVITIES,
    ),
}


def build_prompt(
    role: AgentPersona, task: str, knowledge: dict, catalog: Catalog
) -> PromptSpec:
    """Assemble the six-section prompt for a task.

    The knowledge payload must contain exactly the task's required keys:
    a missing key raises :class:`PayloadMissing`, an extra key raises
    :class:`PayloadOverflow` (the minimal-context contract is enforced,
    not advisory).
    """
    spec = TASKS[task]
    if spec.role != role.role:
        raise ValueError(f"task {task!r} belongs to {spec.role}, not {role.role}")
    keys = set(knowledge)
    missing = spec.required_keys - keys
    extra = keys - spec.required_keys
    if missing:
        raise PayloadMissing(f"task {task!r} missing keys: {sorted(missing)}")
    if extra:
        raise PayloadOverflow(f"task {task!r} got extra keys: {sorted(extra)}")
    response = spec.response(knowledge) if callable(spec.response) else spec.response
    return PromptSpec(
        context_section=spec.context_builder(knowledge),
        objective_section=catalog.text("objective_intro") + "\n" + catalog.metric_lines(),
        style_section=role.style,
        tone_section=role.tone,
        audience_section=role.audience,
        response_section=response,
    )
