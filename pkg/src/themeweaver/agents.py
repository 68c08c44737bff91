"""The four-role orchestration layer.

Each operation picks one role, assembles the minimal prompt for the task,
calls the gateway, and parses the structured response. Unparseable output
gets exactly one repair turn (the bad output plus a description of the
parse failure) before the operation fails.

Analysis excerpts are verified against the material body; an excerpt that
is not a verbatim substring is flagged as a hallucination warning on the
card, never silently accepted and never blocking.
"""

from __future__ import annotations

import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import Corpus, ReadingMaterial
from .errors import (
    AnalysisFailed,
    MalformedOutput,
    NoCandidates,
    SameMaterial,
    ThemeWeaverError,
    UnknownFocus,
    UnknownMaterial,
)
from .gateway import ChatMessage, Gateway
from .prompts import Catalog, build_prompt, persona
from .records import (
    ContextDescription,
    ElementLink,
    PairwiseComparison,
    Review,
    TextAnalysis,
)
from .retrieval import DEFAULT_BATCH, build_session_query, top_k_contexts, top_k_materials
from .session import ContextCard, Session, TextCard

LINK_KINDS = ("sentence", "paragraph", "viewpoint")
MEMORY_CHAR_BUDGET = 8_000


@dataclass
class MemoryItem:
    kind: str  # material | context_description | analysis
    ref_id: str
    summary_text: str


@dataclass
class RoleMemory:
    role: str
    char_budget: int = MEMORY_CHAR_BUDGET
    retained_items: list[MemoryItem] = field(default_factory=list)

    def retain(self, kind: str, ref_id: str, summary_text: str,
               pinned: set[str] | None = None) -> None:
        pinned = pinned or set()
        text = summary_text[: self.char_budget]
        self.retained_items = [i for i in self.retained_items if i.ref_id != ref_id]
        self.retained_items.append(MemoryItem(kind, ref_id, text))
        # oldest-first eviction, skipping refs the active task pinned
        total = sum(len(i.summary_text) for i in self.retained_items)
        idx = 0
        while total > self.char_budget and idx < len(self.retained_items):
            item = self.retained_items[idx]
            if item.ref_id in pinned or item is self.retained_items[-1]:
                idx += 1
                continue
            self.retained_items.pop(idx)
            total -= len(item.summary_text)

    def total_chars(self) -> int:
        return sum(len(i.summary_text) for i in self.retained_items)


# -- response parsers -------------------------------------------------------

_LINK_RE = re.compile(r"^- (\w+) :: (.*?) :: (.*)$")


def parse_analysis(text: str, material_ref: str, context_ref: str,
                   material_body: str) -> tuple[TextAnalysis, list[str]]:
    overall = ""
    links: list[ElementLink] = []
    warnings: list[str] = []
    for line in text.splitlines():
        line = line.rstrip()
        if not line:
            continue
        if line.startswith("overall:"):
            overall = line[len("overall:"):].strip()
            continue
        m = _LINK_RE.match(line)
        if m:
            kind, excerpt, connection = m.group(1), m.group(2), m.group(3)
            if kind not in LINK_KINDS:
                raise MalformedOutput(f"unknown element kind {kind!r}")
            links.append(ElementLink(kind=kind, excerpt=excerpt, connection=connection))
            continue
        raise MalformedOutput(f"unrecognized analysis line {line!r}")
    if not overall:
        raise MalformedOutput("analysis has no 'overall:' line")
    if not links:
        raise MalformedOutput("analysis has no element links")
    for link in links:
        if link.excerpt not in material_body:
            warnings.append(f"hallucinated excerpt: {link.excerpt!r} not found in the text")
    return TextAnalysis(material_ref=material_ref, context_ref=context_ref,
                        overall=overall, element_links=links), warnings


def parse_review(text: str) -> Review:
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise MalformedOutput(f"unrecognized review line {line!r}")
        fields[key.strip()] = value.strip()
    try:
        rating = int(fields["rating"])
    except (KeyError, ValueError) as exc:
        raise MalformedOutput(f"review rating missing or non-integer: {exc}") from exc
    if not 1 <= rating <= 5:
        raise MalformedOutput(f"review rating {rating} outside 1-5")
    critique = fields.get("critique", "")
    if not critique:
        raise MalformedOutput("review has no critique")
    return Review(
        rating=rating,
        critique=critique,
        relevance_flag=fields.get("relevance", "yes").lower() == "yes",
        accuracy_flag=fields.get("accuracy", "yes").lower() == "yes",
    )


def parse_comparison(text: str, material_a: str, material_b: str,
                     context_ref: str) -> PairwiseComparison:
    similarities, differences = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("similarity:"):
            similarities.append(line[len("similarity:"):].strip())
        elif line.startswith("difference:"):
            differences.append(line[len("difference:"):].strip())
        else:
            raise MalformedOutput(f"unrecognized comparison line {line!r}")
    if not similarities and not differences:
        raise MalformedOutput("comparison lists nothing")
    return PairwiseComparison(material_a=material_a, material_b=material_b,
                              context_ref=context_ref,
                              similarities=similarities, differences=differences)


def parse_activities(text: str) -> tuple[list[dict], list[str]]:
    item_re = re.compile(r"^- \[(literature|interdisciplinary)\] ([^:]+): (.*)$")
    activities: list[dict] = []
    warnings: list[str] = []
    seen: set[str] = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        m = item_re.match(line)
        if not m:
            raise MalformedOutput(f"unrecognized activity line {line!r}")
        kind, title, description = m.group(1), m.group(2).strip(), m.group(3)
        if title in seen:
            base, n = title, 2
            while f"{base} ({n})" in seen:
                n += 1
            title = f"{base} ({n})"
            warnings.append(f"duplicate activity title {base!r} renamed to {title!r}")
        seen.add(title)
        activities.append({"title": title, "description": description, "kind": kind})
    if not activities:
        raise MalformedOutput("no activities parsed")
    return activities, warnings


class Orchestrator:
    """Wires the roles to the gateway, retrieval, and one corpus."""

    def __init__(self, gateway: Gateway, corpus: Corpus, catalog: Catalog | None = None,
                 batch_size: int = DEFAULT_BATCH, parallel: bool = True):
        self.gateway = gateway
        self.corpus = corpus
        self.catalog = catalog or Catalog()
        self.batch_size = batch_size
        # offline providers have zero latency; sequential keeps transcripts
        # byte-identical across runs
        self.parallel = parallel and gateway.config.kind == "live_http"
        self.memories = {r: RoleMemory(role=r) for r in
                         ("context_analyst", "text_analyst", "text_reviewer",
                          "context_summarizer")}
        self._memory_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def _call(self, role: str, task: str, payload: dict) -> str:
        p = persona(role)
        spec = build_prompt(p, task, payload, self.catalog)
        messages = [
            ChatMessage(role="system", content=f"You are a {p.persona_line}."),
            ChatMessage(role="user", content=spec.render(self.catalog)),
        ]
        return self.gateway.chat(messages, role_hint=role).response

    def _call_parsed(self, role: str, task: str, payload: dict, parser):
        """One call plus at most one repair turn on parse failure."""
        p = persona(role)
        spec = build_prompt(p, task, payload, self.catalog)
        messages = [
            ChatMessage(role="system", content=f"You are a {p.persona_line}."),
            ChatMessage(role="user", content=spec.render(self.catalog)),
        ]
        response = self.gateway.chat(messages, role_hint=role).response
        try:
            return parser(response)
        except MalformedOutput as first:
            repair = messages + [
                ChatMessage(role="assistant", content=response),
                ChatMessage(
                    role="user",
                    content=(
                        f"Your previous output failed to parse because: {first.message}. "
                        "Re-emit your full answer in exactly the required format."
                    ),
                ),
            ]
            response = self.gateway.chat(repair, role_hint=role).response
            return parser(response)

    def _retain(self, role: str, kind: str, ref_id: str, text: str,
                pinned: set[str] | None = None) -> None:
        with self._memory_lock:
            self.memories[role].retain(kind, ref_id, text, pinned)

    def _session_materials(self, session: Session) -> list[ReadingMaterial]:
        materials = []
        for mid in session.selected_material_ids:
            mat = self.corpus.materials.get(mid)
            if mat is None:
                raise UnknownMaterial(f"material {mid!r} not in corpus")
            materials.append(mat)
        return materials

    # -- context recommendation ---------------------------------------------

    def recommend_contexts(self, session: Session, k: int | None = None) -> list[ContextCard]:
        k = k or self.batch_size
        with session.lock:
            materials = self._session_materials(session)
            if not materials:
                raise NoCandidates("session has no materials")
            query = build_session_query(materials)
            hits = top_k_contexts(
                query, self.corpus.pool.values(), set(session.selected_subjects),
                k=k, exclude=set(session.shown_entry_ids),
            )
        for mat in materials:
            self._retain("context_analyst", "material", mat.id, mat.body)

        def describe(hit):
            entry = self.corpus.pool[hit.record_id]
            payload = {
                "context_title": entry.title,
                "context_subject": entry.subject,
                "context_background": entry.background,
                "materials": [{"title": m.title, "body": m.body} for m in materials],
            }
            try:
                text = self._call("context_analyst", "describe_context", payload)
                return entry, text, ""
            except ThemeWeaverError as exc:
                return entry, "", f"{exc.code}: {exc.message}"

        if self.parallel and len(hits) > 1:
            with ThreadPoolExecutor(max_workers=min(8, len(hits))) as pool:
                results = list(pool.map(describe, hits))
        else:
            results = [describe(h) for h in hits]

        cards = []
        with session.lock:
            for entry, text, error in results:
                ranked = top_k_materials(entry, materials, k=min(3, len(materials)))
                titles = [self.corpus.materials[h.record_id].title for h in ranked]
                desc = ContextDescription(
                    context_entry_ref=entry.id, description=text,
                    relevant_material_titles=titles,
                )
                card = session.add_context_card(
                    desc, title=entry.title, subject=entry.subject,
                    background=entry.background, error=error,
                )
                cards.append(card)
                if text:
                    self._retain("context_analyst", "context_description", entry.id, text)
        return cards

    def add_manual_context(self, session: Session, title: str, background: str) -> ContextCard:
        entry = self.corpus.embed_user_context(title, background)
        with session.lock:
            materials = self._session_materials(session)
        payload = {
            "context_title": entry.title,
            "context_subject": entry.subject,
            "context_background": entry.background,
            "materials": [{"title": m.title, "body": m.body} for m in materials],
        }
        text = self._call("context_analyst", "describe_context", payload)
        with session.lock:
            ranked = top_k_materials(entry, materials, k=min(3, len(materials)))
            titles = [self.corpus.materials[h.record_id].title for h in ranked]
            desc = ContextDescription(context_entry_ref=entry.id, description=text,
                                      relevant_material_titles=titles)
            card = session.add_context_card(desc, title=entry.title, subject=entry.subject,
                                            background=entry.background)
        self._retain("context_analyst", "context_description", entry.id, text)
        return card

    # -- q&a ----------------------------------------------------------------

    def answer_query(self, session: Session, card_id: str, question: str) -> str:
        if not question:
            raise ThemeWeaverError("question must be non-empty")
        with session.lock:
            try:
                card = session.card(card_id)
            except ThemeWeaverError as exc:
                raise UnknownFocus(exc.message) from exc
            if isinstance(card, ContextCard):
                role, task = "context_analyst", "find_context"
                payload = {
                    "context_title": card.title,
                    "description": card.content,
                    "question": question,
                    "qa_history": list(card.qa_thread),
                }
            else:
                parent = session.context_cards[card.parent_context_card]
                material = self.corpus.materials[card.material_id]
                role, task = "text_analyst", "find_text"
                payload = {
                    "context_title": parent.title,
                    "context_description": parent.content,
                    "material_title": material.title,
                    "material_body": material.body,
                    "question": question,
                    "qa_history": list(card.qa_thread),
                }
        answer = self._call(role, task, payload)
        with session.lock:
            session.append_qa(card_id, question, answer)
        self._retain(role, "analysis", f"qa:{card_id}:{len(answer)}", f"Q: {question}\nA: {answer}")
        return answer

    # -- single-text analysis -----------------------------------------------

    def analyze_text(self, session: Session, context_card_id: str,
                     material_id: str) -> TextCard:
        with session.lock:
            parent = session.card(context_card_id)
            if not isinstance(parent, ContextCard):
                raise UnknownFocus(f"{context_card_id!r} is not a context card")
            material = self.corpus.materials.get(material_id)
            if material is None:
                raise UnknownMaterial(f"material {material_id!r} not in corpus")
            context_title, context_description = parent.title, parent.content
        analysis, review, warnings = self._analyze_one(
            context_title, context_description, parent.entry_id, material
        )
        with session.lock:
            card = session.add_text_card(
                context_card_id, material.id, material.title, analysis, review, warnings
            )
        return card

    def _analyze_one(self, context_title: str, context_description: str,
                     context_ref: str, material: ReadingMaterial):
        payload = {
            "context_title": context_title,
            "context_description": context_description,
            "material_title": material.title,
            "material_body": material.body,
        }
        try:
            analysis, warnings = self._call_parsed(
                "text_analyst", "analyze_text", payload,
                lambda text: parse_analysis(text, material.id, context_ref, material.body),
            )
        except MalformedOutput as exc:
            raise AnalysisFailed(
                f"analysis of {material.title!r} failed after repair: {exc.message}"
            ) from exc
        self._retain("text_analyst", "analysis", material.id, analysis.rendered())
        review_payload = {
            "context_title": context_title,
            "context_description": context_description,
            "material_title": material.title,
            "material_body": material.body,
            "analysis_text": analysis.rendered(),
        }
        review = self._call_parsed("text_reviewer", "review_analysis",
                                   review_payload, parse_review)
        return analysis, review, warnings

    def analyze_batch(self, session: Session, context_card_id: str,
                      k: int | None = None) -> tuple[list[TextCard], list[dict]]:
        """Analyze the top-k session materials under a context card.

        Returns (new cards in rank order, per-material failures). One bad
        material never takes down its siblings.
        """
        k = k or self.batch_size
        with session.lock:
            parent = session.card(context_card_id)
            if not isinstance(parent, ContextCard):
                raise UnknownFocus(f"{context_card_id!r} is not a context card")
            materials = self._session_materials(session)
            done = {c.material_id for c in session.children(context_card_id)
                    if c.state != "deleted"}
            entry = self.corpus.pool[parent.entry_id]
            hits = top_k_materials(entry, materials, k=k, exclude=done)
            context_title, context_description = parent.title, parent.content

        def work(hit):
            material = self.corpus.materials[hit.record_id]
            try:
                return hit.record_id, self._analyze_one(
                    context_title, context_description, parent.entry_id, material
                ), None
            except ThemeWeaverError as exc:
                return hit.record_id, None, {"material_id": material.id,
                                             "code": exc.code, "message": exc.message}

        if self.parallel and len(hits) > 1:
            with ThreadPoolExecutor(max_workers=min(8, len(hits))) as pool:
                results = list(pool.map(work, hits))
        else:
            results = [work(h) for h in hits]

        cards, failures = [], []
        with session.lock:
            for material_id, ok, failure in results:
                if failure:
                    failures.append(failure)
                    continue
                analysis, review, warnings = ok
                material = self.corpus.materials[material_id]
                cards.append(session.add_text_card(
                    context_card_id, material_id, material.title,
                    analysis, review, warnings,
                ))
        return cards, failures

    # -- pairwise comparison ------------------------------------------------

    def compare_texts(self, session: Session, context_card_id: str,
                      material_a: str, material_b: str) -> PairwiseComparison:
        if material_a == material_b:
            raise SameMaterial("cannot compare a material with itself")
        with session.lock:
            parent = session.card(context_card_id)
            if not isinstance(parent, ContextCard):
                raise UnknownFocus(f"{context_card_id!r} is not a context card")
            mats = []
            for mid in (material_a, material_b):
                material = self.corpus.materials.get(mid)
                if material is None:
                    raise UnknownMaterial(f"material {mid!r} not in corpus")
                mats.append(material)
            payload = {
                "context_title": parent.title,
                "context_description": parent.content,
                "material_a": {"title": mats[0].title, "body": mats[0].body},
                "material_b": {"title": mats[1].title, "body": mats[1].body},
            }
        comparison = self._call_parsed(
            "text_analyst", "compare_texts", payload,
            lambda text: parse_comparison(text, material_a, material_b, parent.entry_id),
        )
        self._retain("text_analyst", "analysis", f"cmp:{material_a}:{material_b}",
                     "\n".join(comparison.similarities + comparison.differences))
        return comparison

    # -- reviewer re-assessment after user edits ----------------------------

    def review_user_edit(self, session: Session, card_id: str, edited_text: str) -> Review:
        with session.lock:
            card = session.card(card_id)
            session.edit_content(card_id, edited_text)
            if isinstance(card, TextCard):
                parent = session.context_cards[card.parent_context_card]
            else:
                parent = card
            payload = {
                "context_title": parent.title,
                "context_description": parent.background if card is parent else parent.content,
                "edited_text": edited_text,
            }
        review = self._call_parsed("text_reviewer", "review_edit", payload, parse_review)
        with session.lock:
            session.attach_review(card_id, review)
        return review
