"""Line-oriented course-plan grammar.

One grammar serves three purposes: the response format the summarizer
role is instructed to emit, the txt export, and the parser that turns
either back into structured data.

    Segment <n>: <segment title>
    - "<material title>" + "<material title>" (<theme note>)
      - Lesson <k>: <objective>

Syntactic validity (the domain on which parse(render(p)) == p holds):
material titles contain no double quote or newline; theme notes contain
no parenthesis or newline; segment titles and objectives contain no
newline. Blank lines between segments are ignored by the parser.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import MalformedOutput

_SEGMENT_RE = re.compile(r"^Segment (\d+): (.+)$")
_LESSON_RE = re.compile(r"^  - Lesson (\d+): (.+)$")
_TITLE_RE = re.compile(r'"([^"]*)"')


@dataclass
class Lesson:
    number: int
    objective: str


@dataclass
class MaterialGroup:
    material_titles: list[str]
    theme_note: str
    lessons: list[Lesson] = field(default_factory=list)


@dataclass
class Segment:
    title: str
    groups: list[MaterialGroup] = field(default_factory=list)


@dataclass
class CoursePlan:
    segments: list[Segment]

    def lesson_numbers(self) -> list[int]:
        return [
            lesson.number
            for seg in self.segments
            for grp in seg.groups
            for lesson in grp.lessons
        ]

    def material_titles(self) -> list[str]:
        return [t for seg in self.segments for grp in seg.groups for t in grp.material_titles]

    def total_lessons(self) -> int:
        return len(self.lesson_numbers())


def render_plan(plan: CoursePlan) -> str:
    lines: list[str] = []
    for i, seg in enumerate(plan.segments, start=1):
        if lines:
            lines.append("")
        lines.append(f"Segment {i}: {seg.title}")
        for grp in seg.groups:
            titles = " + ".join(f'"{t}"' for t in grp.material_titles)
            lines.append(f"- {titles} ({grp.theme_note})")
            for lesson in grp.lessons:
                lines.append(f"  - Lesson {lesson.number}: {lesson.objective}")
    return "\n".join(lines) + "\n"


def parse_plan(text: str) -> CoursePlan:
    segments: list[Segment] = []
    # split on \n only: splitlines() would also break on \x0b/\x0c/\x85 etc.,
    # which are legal inside titles and objectives
    for lineno, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        if not line.strip():
            continue
        m = _SEGMENT_RE.match(line)
        if m:
            segments.append(Segment(title=m.group(2)))
            continue
        m = _LESSON_RE.match(line)
        if m:
            if not segments or not segments[-1].groups:
                raise MalformedOutput(f"line {lineno}: lesson outside a material group")
            segments[-1].groups[-1].lessons.append(
                Lesson(number=int(m.group(1)), objective=m.group(2))
            )
            continue
        if line.startswith("- "):
            body = line[2:]
            if not body.endswith(")") or " (" not in body:
                raise MalformedOutput(f"line {lineno}: group line missing theme note")
            title_part, _, note = body[:-1].rpartition(" (")
            titles = _TITLE_RE.findall(title_part)
            if not titles:
                raise MalformedOutput(f"line {lineno}: group line has no quoted titles")
            if not segments:
                raise MalformedOutput(f"line {lineno}: group outside a segment")
            segments[-1].groups.append(MaterialGroup(material_titles=titles, theme_note=note))
            continue
        raise MalformedOutput(f"line {lineno}: unrecognized plan line {line!r}")
    if not segments:
        raise MalformedOutput("plan has no segments")
    return CoursePlan(segments=segments)


def validate_plan(plan: CoursePlan) -> list[str]:
    """Structural warnings: non-consecutive lesson numbers, empty groups."""
    warnings = []
    numbers = plan.lesson_numbers()
    if numbers != list(range(1, len(numbers) + 1)):
        warnings.append(f"lesson numbers are not consecutive from 1: {numbers}")
    for seg in plan.segments:
        if not seg.groups:
            warnings.append(f"segment {seg.title!r} has no material groups")
    return warnings
