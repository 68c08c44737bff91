"""Per-session card lifecycle state machine, event-sourced.

Every mutation is an event: validated against current state, appended to
the log, then applied. Replaying a session's log from empty state must
reproduce the exact same cards and collection, which is what the
persistence layer relies on (append-only ``<sid>.events.jsonl`` plus a
snapshot written on save).

Card states: active -> starred <-> active; delete is terminal. Deleting
a context card cascades a soft delete to its text cards. A context pool
entry shown once in a session is never suggested again in that session,
even after deletion.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import (
    AlreadyDeleted,
    DuplicateChild,
    InvalidTransition,
    ThemeWeaverError,
    UnknownCard,
    UnknownSession,
)
from .records import ContextDescription, Review, TextAnalysis

ACTIVE, STARRED, DELETED = "active", "starred", "deleted"


@dataclass
class ContextCard:
    card_id: str
    entry_id: str
    title: str
    subject: str
    background: str
    description: ContextDescription
    state: str = ACTIVE
    user_edited: bool = False
    qa_thread: list[tuple[str, str]] = field(default_factory=list)
    edit_history: list[str] = field(default_factory=list)
    review: Optional[Review] = None
    review_history: list[Review] = field(default_factory=list)
    error: str = ""  # non-empty for degraded error cards

    @property
    def content(self) -> str:
        return self.description.description


@dataclass
class TextCard:
    card_id: str
    parent_context_card: str
    material_id: str
    material_title: str
    analysis: TextAnalysis
    review: Optional[Review] = None
    review_history: list[Review] = field(default_factory=list)
    state: str = ACTIVE
    user_edited: bool = False
    qa_thread: list[tuple[str, str]] = field(default_factory=list)
    edit_history: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    edited_text: str = ""

    @property
    def content(self) -> str:
        return self.edited_text or self.analysis.rendered()


@dataclass
class OutcomeBundle:
    context_card_id: str
    expected_lesson_count: int = 0
    plan_text: str = ""
    introduction: str = ""
    activities: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class Session:
    """One teacher's ideation session. Mutations are single-writer."""

    def __init__(self, session_id: str, subjects: list[str], material_ids: list[str],
                 content_language: str = "en"):
        self.session_id = session_id
        self.selected_subjects = list(subjects)
        self.selected_material_ids = list(material_ids)
        self.content_language = content_language
        self.events: list[dict] = []
        self.context_cards: dict[str, ContextCard] = {}
        self.text_cards: dict[str, TextCard] = {}
        self.card_order: list[str] = []
        self.shown_entry_ids: set[str] = set()
        self.outcome: Optional[OutcomeBundle] = None
        self.lock = threading.RLock()
        self.op_lock = threading.Lock()  # whole-operation serialization (API layer)
        self._counter = 0
        self._record(
            {
                "type": "created",
                "session_id": session_id,
                "subjects": list(subjects),
                "material_ids": list(material_ids),
                "content_language": content_language,
            }
        )

    # -- event machinery ----------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}-{self._counter}"

    def _record(self, event: dict) -> None:
        self.events.append(event)
        self._apply(event)

    def _apply(self, event: dict) -> None:
        getattr(self, "_apply_" + event["type"])(event)

    @classmethod
    def replay(cls, events: list[dict]) -> "Session":
        head = events[0]
        assert head["type"] == "created"
        session = cls(
            head["session_id"], head["subjects"], head["material_ids"],
            head.get("content_language", "en"),
        )
        for event in events[1:]:
            session._apply(event)
            # keep the counter ahead of any replayed card id
            for key in ("card_id",):
                if key in event and "-" in str(event[key]):
                    try:
                        n = int(str(event[key]).rsplit("-", 1)[1])
                        session._counter = max(session._counter, n)
                    except ValueError:
                        pass
        session.events = list(events)
        return session

    def _apply_created(self, event: dict) -> None:
        pass

    # -- card lookup --------------------------------------------------------

    def card(self, card_id: str):
        card = self.context_cards.get(card_id) or self.text_cards.get(card_id)
        if card is None:
            raise UnknownCard(f"no card {card_id!r} in session {self.session_id}")
        return card

    def children(self, context_card_id: str) -> list[TextCard]:
        return [
            self.text_cards[cid]
            for cid in self.card_order
            if cid in self.text_cards
            and self.text_cards[cid].parent_context_card == context_card_id
        ]

    def live_context_cards(self) -> list[ContextCard]:
        return [
            self.context_cards[cid]
            for cid in self.card_order
            if cid in self.context_cards and self.context_cards[cid].state != DELETED
        ]

    # -- card creation ------------------------------------------------------

    def add_context_card(
        self, description: ContextDescription, title: str, subject: str,
        background: str, error: str = "",
    ) -> ContextCard:
        card_id = self._next_id("ctxcard")
        self._record(
            {
                "type": "context_card_added",
                "card_id": card_id,
                "entry_id": description.context_entry_ref,
                "title": title,
                "subject": subject,
                "background": background,
                "description": description.to_dict(),
                "error": error,
            }
        )
        return self.context_cards[card_id]

    def _apply_context_card_added(self, event: dict) -> None:
        card = ContextCard(
            card_id=event["card_id"],
            entry_id=event["entry_id"],
            title=event["title"],
            subject=event["subject"],
            background=event["background"],
            description=ContextDescription.from_dict(event["description"]),
            error=event.get("error", ""),
        )
        self.context_cards[card.card_id] = card
        self.card_order.append(card.card_id)
        self.shown_entry_ids.add(card.entry_id)

    def add_text_card(
        self, parent_context_card: str, material_id: str, material_title: str,
        analysis: TextAnalysis, review: Optional[Review], warnings: list[str],
    ) -> TextCard:
        parent = self.card(parent_context_card)
        if not isinstance(parent, ContextCard):
            raise UnknownCard(f"{parent_context_card!r} is not a context card")
        if parent.state == DELETED:
            raise AlreadyDeleted(f"context card {parent_context_card!r} is deleted")
        for child in self.children(parent_context_card):
            if child.material_id == material_id and child.state != DELETED:
                raise DuplicateChild(
                    f"material {material_id!r} already under {parent_context_card!r}"
                )
        card_id = self._next_id("txtcard")
        self._record(
            {
                "type": "text_card_added",
                "card_id": card_id,
                "parent": parent_context_card,
                "material_id": material_id,
                "material_title": material_title,
                "analysis": analysis.to_dict(),
                "review": review.to_dict() if review else None,
                "warnings": list(warnings),
            }
        )
        return self.text_cards[card_id]

    def _apply_text_card_added(self, event: dict) -> None:
        review = Review.from_dict(event["review"]) if event["review"] else None
        card = TextCard(
            card_id=event["card_id"],
            parent_context_card=event["parent"],
            material_id=event["material_id"],
            material_title=event["material_title"],
            analysis=TextAnalysis.from_dict(event["analysis"]),
            review=review,
            review_history=[review] if review else [],
            warnings=list(event["warnings"]),
        )
        self.text_cards[card.card_id] = card
        self.card_order.append(card.card_id)

    # -- lifecycle transitions ----------------------------------------------

    def star(self, card_id: str) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is deleted")
        if isinstance(card, TextCard):
            parent = self.context_cards[card.parent_context_card]
            if parent.state == DELETED:
                raise InvalidTransition("cannot star a text card under a deleted context")
        self._record({"type": "starred", "card_id": card_id})

    def _apply_starred(self, event: dict) -> None:
        self.card(event["card_id"]).state = STARRED

    def unstar(self, card_id: str) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is deleted")
        if card.state != STARRED:
            raise InvalidTransition(f"card {card_id!r} is not starred")
        self._record({"type": "unstarred", "card_id": card_id})

    def _apply_unstarred(self, event: dict) -> None:
        self.card(event["card_id"]).state = ACTIVE

    def delete(self, card_id: str) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is already deleted")
        self._record({"type": "deleted", "card_id": card_id})

    def _apply_deleted(self, event: dict) -> None:
        card = self.card(event["card_id"])
        card.state = DELETED
        if isinstance(card, ContextCard):
            for child in self.children(card.card_id):
                child.state = DELETED

    # -- content edits ------------------------------------------------------

    def edit_content(self, card_id: str, new_text: str) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is deleted")
        if not new_text:
            raise ThemeWeaverError("edited text must be non-empty")
        self._record({"type": "edited", "card_id": card_id, "new_text": new_text})

    def _apply_edited(self, event: dict) -> None:
        card = self.card(event["card_id"])
        card.edit_history.append(card.content)
        card.user_edited = True
        if isinstance(card, ContextCard):
            card.description.description = event["new_text"]
        else:
            card.edited_text = event["new_text"]

    def append_qa(self, card_id: str, question: str, answer: str) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is deleted")
        self._record(
            {"type": "qa_appended", "card_id": card_id, "question": question, "answer": answer}
        )

    def _apply_qa_appended(self, event: dict) -> None:
        self.card(event["card_id"]).qa_thread.append((event["question"], event["answer"]))

    def attach_review(self, card_id: str, review: Review) -> None:
        card = self.card(card_id)
        if card.state == DELETED:
            raise AlreadyDeleted(f"card {card_id!r} is deleted")
        self._record({"type": "review_attached", "card_id": card_id, "review": review.to_dict()})

    def _apply_review_attached(self, event: dict) -> None:
        card = self.card(event["card_id"])
        review = Review.from_dict(event["review"])
        card.review = review
        card.review_history.append(review)

    # -- collection ---------------------------------------------------------

    def collection(self) -> list[dict]:
        entries = []
        for cid in self.card_order:
            card = self.context_cards.get(cid)
            if card is None or card.state != STARRED:
                continue
            starred_texts = [
                c.card_id for c in self.children(cid) if c.state == STARRED
            ]
            entries.append({"context_card_id": cid, "starred_text_card_ids": starred_texts})
        return entries

    # -- outcome ------------------------------------------------------------

    def set_lesson_count(self, context_card_id: str, count: int) -> None:
        if count < 1:
            raise ThemeWeaverError("expected lesson count must be >= 1")
        self.card(context_card_id)
        self._record(
            {"type": "lesson_count_set", "context_card_id": context_card_id, "count": count}
        )

    def _apply_lesson_count_set(self, event: dict) -> None:
        if self.outcome is None or self.outcome.context_card_id != event["context_card_id"]:
            self.outcome = OutcomeBundle(context_card_id=event["context_card_id"])
        self.outcome.expected_lesson_count = event["count"]

    def set_plan(self, context_card_id: str, plan_text: str, warnings: list[str]) -> None:
        self._record(
            {
                "type": "plan_set",
                "context_card_id": context_card_id,
                "plan_text": plan_text,
                "warnings": list(warnings),
            }
        )

    def _apply_plan_set(self, event: dict) -> None:
        if self.outcome is None or self.outcome.context_card_id != event["context_card_id"]:
            self.outcome = OutcomeBundle(context_card_id=event["context_card_id"])
        self.outcome.plan_text = event["plan_text"]
        self.outcome.warnings = list(event["warnings"])

    def set_introduction(self, context_card_id: str, text: str) -> None:
        self._record(
            {"type": "introduction_set", "context_card_id": context_card_id, "text": text}
        )

    def _apply_introduction_set(self, event: dict) -> None:
        assert self.outcome is not None
        self.outcome.introduction = event["text"]

    def set_activities(self, context_card_id: str, activities: list[dict],
                       warnings: list[str]) -> None:
        self._record(
            {
                "type": "activities_set",
                "context_card_id": context_card_id,
                "activities": activities,
                "warnings": list(warnings),
            }
        )

    def _apply_activities_set(self, event: dict) -> None:
        assert self.outcome is not None
        self.outcome.activities = [dict(a) for a in event["activities"]]
        self.outcome.warnings = self.outcome.warnings + list(event["warnings"])

    def delete_activity(self, title: str) -> None:
        if self.outcome is None or not any(
            a["title"] == title for a in self.outcome.activities
        ):
            raise UnknownCard(f"no activity titled {title!r}")
        self._record({"type": "activity_deleted", "title": title})

    def _apply_activity_deleted(self, event: dict) -> None:
        assert self.outcome is not None
        self.outcome.activities = [
            a for a in self.outcome.activities if a["title"] != event["title"]
        ]

    # -- invariant audit (used by tests and the store) ----------------------

    def check_invariants(self) -> list[str]:
        problems = []
        live_entries: dict[str, str] = {}
        for card in self.context_cards.values():
            if card.state != DELETED:
                if card.entry_id in live_entries:
                    problems.append(f"entry {card.entry_id} on two live cards")
                live_entries[card.entry_id] = card.card_id
        for card in self.text_cards.values():
            parent = self.context_cards[card.parent_context_card]
            if card.state != DELETED and parent.state == DELETED:
                problems.append(f"live text card {card.card_id} under deleted parent")
        for entry in self.collection():
            ctx = self.context_cards[entry["context_card_id"]]
            if ctx.state != STARRED:
                problems.append(f"collection entry {ctx.card_id} not starred")
            for tid in entry["starred_text_card_ids"]:
                tc = self.text_cards[tid]
                if tc.state != STARRED or tc.parent_context_card != ctx.card_id:
                    problems.append(f"collection text {tid} inconsistent")
        return problems


class SessionStore:
    """Issues session ids, serializes per-session writes, persists event logs."""

    def __init__(self, directory: Optional[str | Path] = None):
        self.directory = Path(directory) if directory else None
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
            for path in sorted(self.directory.glob("*.events.jsonl")):
                events = [
                    json.loads(line)
                    for line in path.read_text(encoding="utf-8").splitlines()
                    if line.strip()
                ]
                if events:
                    session = Session.replay(events)
                    self._sessions[session.session_id] = session

    def create(self, subjects: list[str], material_ids: list[str],
               content_language: str = "en", session_id: str | None = None) -> Session:
        sid = session_id or f"sess-{uuid.uuid4().hex[:12]}"
        session = Session(sid, subjects, material_ids, content_language)
        with self._lock:
            self._sessions[sid] = session
        self.save(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def save(self, session: Session) -> None:
        if not self.directory:
            return
        lines = [json.dumps(e, ensure_ascii=False) for e in session.events]
        (self.directory / f"{session.session_id}.events.jsonl").write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
        )
        snapshot = {
            "session_id": session.session_id,
            "cards": len(session.card_order),
            "collection": session.collection(),
        }
        (self.directory / f"{session.session_id}.snapshot.json").write_text(
            json.dumps(snapshot, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
