"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ApiError(BaseModel):
    code: str
    message: str
    detail: Optional[object] = None


class MaterialIn(BaseModel):
    title: str
    body: str
    source_label: str = ""


class MaterialOut(BaseModel):
    id: str
    title: str
    source_label: str


class ImportMaterialsRequest(BaseModel):
    records: list[MaterialIn]


class PoolEntryIn(BaseModel):
    title: str
    background: str


class ImportPoolRequest(BaseModel):
    subject: str
    entries: list[PoolEntryIn]


class ImportPoolResponse(BaseModel):
    imported: int
    duplicates: list[str]


class ManifestOut(BaseModel):
    material_count: int
    pool_counts_by_subject: dict[str, int]
    embedding_dimension: int
    provider_tag: str


class CorpusOut(BaseModel):
    manifest: ManifestOut
    materials: list[MaterialOut]
    subjects: list[str]


class CreateSessionRequest(BaseModel):
    subjects: list[str] = Field(min_length=1)
    material_ids: list[str] = Field(min_length=1)
    content_language: str = "en"


class CreateSessionResponse(BaseModel):
    session_id: str


class ReviewOut(BaseModel):
    rating: int
    critique: str
    relevance_flag: bool
    accuracy_flag: bool


class ElementLinkOut(BaseModel):
    kind: str
    excerpt: str
    connection: str


class TextCardOut(BaseModel):
    card_id: str
    parent_context_card: str
    material_id: str
    material_title: str
    state: str
    content: str
    overall: str
    element_links: list[ElementLinkOut]
    review: Optional[ReviewOut]
    warnings: list[str]
    qa_thread: list[tuple[str, str]]
    user_edited: bool


class ContextCardOut(BaseModel):
    card_id: str
    entry_id: str
    title: str
    subject: str
    background: str
    description: str
    relevant_material_titles: list[str]
    state: str
    error: str
    qa_thread: list[tuple[str, str]]
    user_edited: bool
    text_cards: list[TextCardOut]


class CollectionEntryOut(BaseModel):
    context_card_id: str
    starred_text_card_ids: list[str]


class ActivityOut(BaseModel):
    title: str
    description: str
    kind: str


class OutcomeOut(BaseModel):
    context_card_id: str
    expected_lesson_count: int
    plan_text: str
    introduction: str
    activities: list[ActivityOut]
    warnings: list[str]


class SessionOut(BaseModel):
    session_id: str
    subjects: list[str]
    material_ids: list[str]
    content_language: str
    context_cards: list[ContextCardOut]
    collection: list[CollectionEntryOut]
    outcome: Optional[OutcomeOut]


class QuestionRequest(BaseModel):
    question: str


class AnswerResponse(BaseModel):
    answer: str


class EditRequest(BaseModel):
    new_text: str


class ManualContextRequest(BaseModel):
    title: str
    background: str


class AddTextRequest(BaseModel):
    material_id: str


class CompareRequest(BaseModel):
    material_a: str
    material_b: str


class CompareResponse(BaseModel):
    material_a: str
    material_b: str
    similarities: list[str]
    differences: list[str]


class LessonCountRequest(BaseModel):
    context_card_id: str
    count: int


class PlanRequest(BaseModel):
    context_card_id: str
    expected_lesson_count: int


class ActivitiesRequest(BaseModel):
    context_card_id: str


class JobOut(BaseModel):
    job_id: str
    status: str
    result: Optional[object] = None
    error: Optional[dict] = None


class CardStateOut(BaseModel):
    card_id: str
    state: str
