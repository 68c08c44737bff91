"""Exhaustive cosine-similarity search over the corpus.

Pool scale is O(10^2 - 10^3) records, so a full scan beats any index for
both simplicity and verifiability. Ties break by ascending record id to
keep runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import ContextEntry, ReadingMaterial
from .errors import (
    DegenerateQuery,
    DimensionMismatch,
    EmptyMaterialSet,
    NoCandidates,
    ZeroVector,
)

DEFAULT_BATCH = 8  # cards generated per request


@dataclass(frozen=True)
class QueryVector:
    vector: np.ndarray
    provenance: str  # mean_of_materials | single_context


@dataclass(frozen=True)
class RankedHit:
    record_id: str
    score: float


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("cosine is undefined for the zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def build_session_query(materials: Sequence[ReadingMaterial]) -> QueryVector:
    """Renormalized arithmetic mean of the material embeddings."""
    if not materials:
        raise EmptyMaterialSet("need at least one material to build a query")
    mean = np.mean([m.embedding for m in materials], axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-9:
        raise DegenerateQuery("material embeddings cancel out")
    return QueryVector(vector=mean / norm, provenance="mean_of_materials")


def _rank(
    query: np.ndarray,
    candidates: Iterable[tuple[str, np.ndarray]],
    k: int,
    exclude: set[str],
) -> list[RankedHit]:
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = [
        RankedHit(record_id=rid, score=cosine(query, vec))
        for rid, vec in candidates
        if rid not in exclude
    ]
    if not scored:
        raise NoCandidates("no candidates left after filtering")
    scored.sort(key=lambda h: (-h.score, h.record_id))
    return scored[:k]


def top_k_contexts(
    query: QueryVector,
    pool: Iterable[ContextEntry],
    subjects: set[str],
    k: int = DEFAULT_BATCH,
    exclude: set[str] | None = None,
) -> list[RankedHit]:
    candidates = (
        (e.id, e.embedding) for e in pool if e.subject in subjects
    )
    return _rank(query.vector, candidates, k, exclude or set())


def top_k_materials(
    context: ContextEntry,
    materials: Iterable[ReadingMaterial],
    k: int = DEFAULT_BATCH,
    exclude: set[str] | None = None,
) -> list[RankedHit]:
    candidates = ((m.id, m.embedding) for m in materials)
    return _rank(context.embedding, candidates, k, exclude or set())
