import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from themeweaver.errors import MalformedOutput
from themeweaver.planfmt import (
    CoursePlan,
    Lesson,
    MaterialGroup,
    Segment,
    parse_plan,
    render_plan,
    validate_plan,
)

# grammar-safe text strategies (see module doc for the validity domain)
title_st = st.text(
    alphabet=st.characters(blacklist_characters='"\n\r', blacklist_categories=("Cs",)),
    min_size=1, max_size=30,
).map(lambda s: s.strip() or "t").map(lambda s: s.replace("\n", " "))
note_st = st.text(
    alphabet=st.characters(blacklist_characters='()\n\r', blacklist_categories=("Cs",)),
    min_size=1, max_size=40,
).map(lambda s: s.strip() or "note")
line_st = st.text(
    alphabet=st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
    min_size=1, max_size=60,
).map(lambda s: s.strip() or "x")


@st.composite
def plans(draw):
    n_segments = draw(st.integers(1, 4))
    lesson_no = 1
    segments = []
    for _ in range(n_segments):
        n_groups = draw(st.integers(1, 3))
        groups = []
        for _ in range(n_groups):
            titles = draw(st.lists(title_st, min_size=1, max_size=3))
            n_lessons = draw(st.integers(1, 3))
            lessons = []
            for _ in range(n_lessons):
                lessons.append(Lesson(number=lesson_no, objective=draw(line_st)))
                lesson_no += 1
            groups.append(MaterialGroup(material_titles=titles,
                                        theme_note=draw(note_st), lessons=lessons))
        segments.append(Segment(title=draw(line_st), groups=groups))
    return CoursePlan(segments=segments)


class TestRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(plans())
    def test_parse_render_identity(self, plan):
        assert parse_plan(render_plan(plan)) == plan

    def test_two_segment_example(self):
        plan = CoursePlan(segments=[
            Segment(title="Opening", groups=[
                MaterialGroup(material_titles=["A", "B"], theme_note="two poems",
                              lessons=[Lesson(1, "read closely")]),
            ]),
            Segment(title="Closing", groups=[
                MaterialGroup(material_titles=["C"], theme_note="one essay",
                              lessons=[Lesson(2, "compare"), Lesson(3, "write")]),
            ]),
        ])
        text = render_plan(plan)
        assert 'Segment 1: Opening' in text
        assert '- "A" + "B" (two poems)' in text
        assert parse_plan(text) == plan


class TestParserErrors:
    def test_lesson_before_group(self):
        with pytest.raises(MalformedOutput):
            parse_plan("Segment 1: x\n  - Lesson 1: y\n")

    def test_group_before_segment(self):
        with pytest.raises(MalformedOutput):
            parse_plan('- "A" (note)\n')

    def test_group_without_note(self):
        with pytest.raises(MalformedOutput):
            parse_plan('Segment 1: x\n- "A"\n')

    def test_unknown_line(self):
        with pytest.raises(MalformedOutput):
            parse_plan("Segment 1: x\ngarbage\n")

    def test_empty(self):
        with pytest.raises(MalformedOutput):
            parse_plan("\n\n")


class TestValidate:
    def test_consecutive_ok(self):
        plan = parse_plan('Segment 1: s\n- "A" (n)\n  - Lesson 1: a\n  - Lesson 2: b\n')
        assert validate_plan(plan) == []

    def test_gap_warns(self):
        plan = parse_plan('Segment 1: s\n- "A" (n)\n  - Lesson 1: a\n  - Lesson 3: b\n')
        assert any("not consecutive" in w for w in validate_plan(plan))
