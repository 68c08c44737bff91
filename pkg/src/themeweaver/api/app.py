"""HTTP service exposing the full session workflow.

Routes live under a versioned ``/v1`` prefix. Mutations on one session are
serialized through the session's operation lock; generation endpoints that
may fan out into many chat calls return a job token immediately and are
polled at ``/v1/jobs/{job_id}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import outcome as outcome_mod
from ..agents import Orchestrator
from ..corpus import Corpus
from ..errors import ThemeWeaverError, UnknownSession
from ..gateway import Gateway, ProviderConfig
from ..prompts import Catalog
from ..session import ContextCard, Session, SessionStore, TextCard
from . import schemas as s
from .jobs import JobManager

# code -> HTTP status; anything unmapped but typed still gets 400, never 500
_STATUS = {
    "unknown_card": 404,
    "unknown_material": 404,
    "unknown_session": 404,
    "unknown_focus": 404,
    "no_candidates": 404,
    "already_deleted": 409,
    "duplicate_entry": 409,
    "duplicate_child": 409,
    "all_duplicates": 409,
    "invalid_transition": 409,
    "same_material": 409,
    "nothing_to_export": 409,
    "empty_collection_entry": 409,
    "provider_unavailable": 502,
    "provider_timeout": 502,
    "provider_http_error": 502,
    "fixture_miss": 502,
    "analysis_failed": 502,
    "malformed_output": 502,
}


@dataclass
class AppConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    corpus_dir: Optional[str] = None
    sessions_dir: Optional[str] = None
    content_language: str = "en"
    batch_size: int = 8
    static_dir: Optional[str] = None

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        provider = ProviderConfig(**data.pop("provider", {}))
        return cls(provider=provider, **data)


class AppState:
    def __init__(self, config: AppConfig):
        self.config = config
        self.gateway = Gateway(config.provider)
        self.corpus = Corpus(self.gateway, config.corpus_dir)
        self.catalog = Catalog(config.content_language)
        self.orchestrator = Orchestrator(
            self.gateway, self.corpus, self.catalog, batch_size=config.batch_size
        )
        self.outcomes = outcome_mod.OutcomeGenerator(self.orchestrator)
        self.sessions = SessionStore(config.sessions_dir)
        self.jobs = JobManager()


def _review_out(review) -> Optional[s.ReviewOut]:
    if review is None:
        return None
    return s.ReviewOut(**review.to_dict())


def _text_card_out(card: TextCard) -> s.TextCardOut:
    return s.TextCardOut(
        card_id=card.card_id,
        parent_context_card=card.parent_context_card,
        material_id=card.material_id,
        material_title=card.material_title,
        state=card.state,
        content=card.content,
        overall=card.analysis.overall,
        element_links=[
            s.ElementLinkOut(kind=l.kind, excerpt=l.excerpt, connection=l.connection)
            for l in card.analysis.element_links
        ],
        review=_review_out(card.review),
        warnings=list(card.warnings),
        qa_thread=list(card.qa_thread),
        user_edited=card.user_edited,
    )


def _context_card_out(session: Session, card: ContextCard) -> s.ContextCardOut:
    children = [
        _text_card_out(c) for c in session.children(card.card_id) if c.state != "deleted"
    ]
    return s.ContextCardOut(
        card_id=card.card_id,
        entry_id=card.entry_id,
        title=card.title,
        subject=card.subject,
        background=card.background,
        description=card.content,
        relevant_material_titles=list(card.description.relevant_material_titles),
        state=card.state,
        error=card.error,
        qa_thread=list(card.qa_thread),
        user_edited=card.user_edited,
        text_cards=children,
    )


def _session_out(session: Session) -> s.SessionOut:
    with session.lock:
        outcome = None
        if session.outcome is not None:
            outcome = s.OutcomeOut(
                context_card_id=session.outcome.context_card_id,
                expected_lesson_count=session.outcome.expected_lesson_count,
                plan_text=session.outcome.plan_text,
                introduction=session.outcome.introduction,
                activities=[s.ActivityOut(**a) for a in session.outcome.activities],
                warnings=list(session.outcome.warnings),
            )
        return s.SessionOut(
            session_id=session.session_id,
            subjects=list(session.selected_subjects),
            material_ids=list(session.selected_material_ids),
            content_language=session.content_language,
            context_cards=[
                _context_card_out(session, c) for c in session.live_context_cards()
            ],
            collection=[s.CollectionEntryOut(**e) for e in session.collection()],
            outcome=outcome,
        )


def create_app(config: AppConfig | None = None) -> FastAPI:
    state = AppState(config or AppConfig())
    app = FastAPI(title="themeweaver", version="0.1.0")
    app.state.tw = state

    @app.exception_handler(ThemeWeaverError)
    async def handle_domain_error(request: Request, exc: ThemeWeaverError):
        status = _STATUS.get(exc.code, 400)
        payload = s.ApiError(code=exc.code, message=exc.message, detail=exc.detail)
        return JSONResponse(status_code=status, content=payload.model_dump())

    def get_session(session_id: str) -> Session:
        return state.sessions.get(session_id)

    # -- corpus -------------------------------------------------------------

    @app.get("/v1/corpus", response_model=s.CorpusOut)
    def get_corpus():
        manifest = state.corpus.manifest()
        return s.CorpusOut(
            manifest=s.ManifestOut(**manifest.to_dict()),
            materials=[
                s.MaterialOut(id=m.id, title=m.title, source_label=m.source_label)
                for m in state.corpus.materials.values()
            ],
            subjects=sorted(manifest.pool_counts_by_subject),
        )

    @app.post("/v1/corpus/materials", response_model=list[s.MaterialOut])
    def import_materials(req: s.ImportMaterialsRequest):
        materials = state.corpus.import_materials([r.model_dump() for r in req.records])
        return [
            s.MaterialOut(id=m.id, title=m.title, source_label=m.source_label)
            for m in materials
        ]

    @app.post("/v1/corpus/pool", response_model=s.ImportPoolResponse)
    def import_pool(req: s.ImportPoolRequest):
        count, duplicates = state.corpus.import_context_batch(
            req.subject, [e.model_dump() for e in req.entries]
        )
        return s.ImportPoolResponse(imported=count, duplicates=duplicates)

    # -- sessions -----------------------------------------------------------

    @app.post("/v1/sessions", response_model=s.CreateSessionResponse)
    def create_session(req: s.CreateSessionRequest):
        for mid in req.material_ids:
            if mid not in state.corpus.materials:
                raise UnknownSession(f"material {mid!r} not in corpus")
        session = state.sessions.create(
            req.subjects, req.material_ids, req.content_language
        )
        return s.CreateSessionResponse(session_id=session.session_id)

    @app.get("/v1/sessions/{session_id}", response_model=s.SessionOut)
    def get_session_state(session_id: str):
        return _session_out(get_session(session_id))

    # -- context generation -------------------------------------------------

    @app.post("/v1/sessions/{session_id}/contexts/recommend", response_model=s.JobOut)
    def recommend(session_id: str):
        session = get_session(session_id)

        def run():
            with session.op_lock:
                cards = state.orchestrator.recommend_contexts(session)
                state.sessions.save(session)
                return {"card_ids": [c.card_id for c in cards]}

        return s.JobOut(**state.jobs.submit(run).to_dict())

    @app.post("/v1/sessions/{session_id}/contexts/manual", response_model=s.JobOut)
    def manual_context(session_id: str, req: s.ManualContextRequest):
        session = get_session(session_id)

        def run():
            with session.op_lock:
                card = state.orchestrator.add_manual_context(
                    session, req.title, req.background
                )
                state.sessions.save(session)
                return {"card_ids": [card.card_id]}

        return s.JobOut(**state.jobs.submit(run).to_dict())

    # -- card interactions --------------------------------------------------

    @app.post("/v1/sessions/{session_id}/cards/{card_id}/find",
              response_model=s.AnswerResponse)
    def find(session_id: str, card_id: str, req: s.QuestionRequest):
        session = get_session(session_id)
        with session.op_lock:
            answer = state.orchestrator.answer_query(session, card_id, req.question)
            state.sessions.save(session)
        return s.AnswerResponse(answer=answer)

    @app.post("/v1/sessions/{session_id}/cards/{card_id}/star",
              response_model=s.CardStateOut)
    def star(session_id: str, card_id: str):
        session = get_session(session_id)
        with session.op_lock:
            session.star(card_id)
            state.sessions.save(session)
        return s.CardStateOut(card_id=card_id, state=session.card(card_id).state)

    @app.post("/v1/sessions/{session_id}/cards/{card_id}/unstar",
              response_model=s.CardStateOut)
    def unstar(session_id: str, card_id: str):
        session = get_session(session_id)
        with session.op_lock:
            session.unstar(card_id)
            state.sessions.save(session)
        return s.CardStateOut(card_id=card_id, state=session.card(card_id).state)

    @app.post("/v1/sessions/{session_id}/cards/{card_id}/delete",
              response_model=s.CardStateOut)
    def delete(session_id: str, card_id: str):
        session = get_session(session_id)
        with session.op_lock:
            session.delete(card_id)
            state.sessions.save(session)
        return s.CardStateOut(card_id=card_id, state=session.card(card_id).state)

    @app.post("/v1/sessions/{session_id}/cards/{card_id}/edit",
              response_model=s.ReviewOut)
    def edit(session_id: str, card_id: str, req: s.EditRequest):
        session = get_session(session_id)
        with session.op_lock:
            review = state.orchestrator.review_user_edit(session, card_id, req.new_text)
            state.sessions.save(session)
        return s.ReviewOut(**review.to_dict())

    # -- text exploration ---------------------------------------------------

    @app.post("/v1/sessions/{session_id}/contexts/{card_id}/texts",
              response_model=s.TextCardOut)
    def add_text(session_id: str, card_id: str, req: s.AddTextRequest):
        session = get_session(session_id)
        with session.op_lock:
            card = state.orchestrator.analyze_text(session, card_id, req.material_id)
            state.sessions.save(session)
        return _text_card_out(card)

    @app.post("/v1/sessions/{session_id}/contexts/{card_id}/analyze",
              response_model=s.JobOut)
    def analyze_batch(session_id: str, card_id: str):
        session = get_session(session_id)

        def run():
            with session.op_lock:
                cards, failures = state.orchestrator.analyze_batch(session, card_id)
                state.sessions.save(session)
                return {
                    "card_ids": [c.card_id for c in cards],
                    "failures": failures,
                }

        return s.JobOut(**state.jobs.submit(run).to_dict())

    @app.post("/v1/sessions/{session_id}/contexts/{card_id}/compare",
              response_model=s.CompareResponse)
    def compare(session_id: str, card_id: str, req: s.CompareRequest):
        session = get_session(session_id)
        with session.op_lock:
            result = state.orchestrator.compare_texts(
                session, card_id, req.material_a, req.material_b
            )
        return s.CompareResponse(
            material_a=result.material_a,
            material_b=result.material_b,
            similarities=result.similarities,
            differences=result.differences,
        )

    # -- outcome ------------------------------------------------------------

    @app.post("/v1/sessions/{session_id}/outcome/lesson-count")
    def set_lesson_count(session_id: str, req: s.LessonCountRequest):
        session = get_session(session_id)
        with session.op_lock:
            session.set_lesson_count(req.context_card_id, req.count)
            state.sessions.save(session)
        return {"context_card_id": req.context_card_id, "count": req.count}

    @app.post("/v1/sessions/{session_id}/outcome/plan", response_model=s.JobOut)
    def generate_plan(session_id: str, req: s.PlanRequest):
        session = get_session(session_id)

        def run():
            with session.op_lock:
                generated = state.outcomes.generate_course_plan(
                    session, req.context_card_id, req.expected_lesson_count
                )
                intro = state.outcomes.generate_introduction(
                    session, req.context_card_id
                )
                state.sessions.save(session)
                return {
                    "plan_text": generated.plan_text,
                    "introduction": intro,
                    "warnings": generated.warnings,
                }

        return s.JobOut(**state.jobs.submit(run).to_dict())

    @app.post("/v1/sessions/{session_id}/outcome/activities", response_model=s.JobOut)
    def generate_activities(session_id: str, req: s.ActivitiesRequest):
        session = get_session(session_id)

        def run():
            with session.op_lock:
                activities = state.outcomes.generate_activities(
                    session, req.context_card_id
                )
                state.sessions.save(session)
                return {"activities": activities}

        return s.JobOut(**state.jobs.submit(run).to_dict())

    @app.delete("/v1/sessions/{session_id}/outcome/activities/{title}")
    def delete_activity(session_id: str, title: str):
        session = get_session(session_id)
        with session.op_lock:
            session.delete_activity(title)
            state.sessions.save(session)
        return {"deleted": title}

    @app.get("/v1/sessions/{session_id}/outcome/download")
    def download(session_id: str, format: str = "txt"):
        session = get_session(session_id)
        with session.lock:
            if format == "txt":
                data = outcome_mod.export_txt(session)
                media = "text/plain; charset=utf-8"
                name = "outcome.txt"
            elif format == "html":
                data = outcome_mod.export_html(session)
                media = "text/html; charset=utf-8"
                name = "outcome.html"
            else:
                raise ThemeWeaverError(f"unknown export format {format!r}")
        return Response(
            content=data,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{name}"'},
        )

    # -- jobs ---------------------------------------------------------------

    @app.get("/v1/jobs/{job_id}", response_model=s.JobOut)
    def poll_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise UnknownSession(f"no job {job_id!r}")
        return s.JobOut(**job.to_dict())

    static_dir = state.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
