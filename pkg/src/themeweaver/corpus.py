"""Reading materials and the context pool, each record carrying one embedding.

On-disk layout (one directory, loaded fully at startup):

    materials.jsonl   {"id", "title", "body", "source_label"}
    pool.jsonl        {"id", "subject", "title", "background", "origin"}
    embeddings.npz    record id -> float64 unit vector
    manifest.json     counts, embedding_dimension, provider_tag

Pool batch files exchanged with teachers use the three-field record
{"subject", "title", "background"}, one JSON object per line, UTF-8.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import (
    AllDuplicates,
    DuplicateEntry,
    EmptyBody,
    EmptyTitle,
    ProviderUnavailable,
)
from .gateway import Gateway

SUBJECT_INFORMAL = "informal"
USER_SUBJECT = "user-defined"


@dataclass
class ReadingMaterial:
    id: str
    title: str
    body: str
    source_label: str
    embedding: np.ndarray


@dataclass
class ContextEntry:
    id: str
    subject: str
    title: str
    background: str
    embedding: np.ndarray
    origin: str = "bundled"  # bundled | imported


@dataclass
class CorpusManifest:
    material_count: int
    pool_counts_by_subject: dict[str, int]
    embedding_dimension: int
    provider_tag: str

    def to_dict(self) -> dict:
        return {
            "material_count": self.material_count,
            "pool_counts_by_subject": dict(sorted(self.pool_counts_by_subject.items())),
            "embedding_dimension": self.embedding_dimension,
            "provider_tag": self.provider_tag,
        }


def pool_record_line(subject: str, title: str, background: str) -> str:
    """Canonical serialization of one pool record (fixed key order)."""
    return json.dumps(
        {"subject": subject, "title": title, "background": background},
        ensure_ascii=False,
    )


class Corpus:
    """In-memory corpus with an optional persistence directory.

    All mutating calls are atomic: on any per-record failure nothing is
    persisted. Records are immutable after ingestion; reads need no lock.
    """

    def __init__(self, gateway: Gateway, directory: Optional[str | Path] = None):
        self.gateway = gateway
        self.directory = Path(directory) if directory else None
        self.materials: dict[str, ReadingMaterial] = {}
        self.pool: dict[str, ContextEntry] = {}
        self._pool_keys: set[tuple[str, str]] = set()
        if self.directory and (self.directory / "manifest.json").exists():
            self._load()

    # -- manifest -----------------------------------------------------------

    def manifest(self) -> CorpusManifest:
        counts: dict[str, int] = {}
        for entry in self.pool.values():
            counts[entry.subject] = counts.get(entry.subject, 0) + 1
        return CorpusManifest(
            material_count=len(self.materials),
            pool_counts_by_subject=counts,
            embedding_dimension=self.gateway.config.embedding_dim,
            provider_tag=self.gateway.config.provider_tag,
        )

    # -- ingestion ----------------------------------------------------------

    def import_materials(self, records: list[dict]) -> list[ReadingMaterial]:
        for i, rec in enumerate(records):
            if not rec.get("body"):
                raise EmptyBody(f"record {i} has an empty body", detail={"index": i})
        staged = []
        for rec in records:
            embedding = self.gateway.embed(rec["body"])
            staged.append(
                ReadingMaterial(
                    id=f"mat-{uuid.uuid4().hex[:12]}",
                    title=rec.get("title", ""),
                    body=rec["body"],
                    source_label=rec.get("source_label", ""),
                    embedding=embedding,
                )
            )
        for mat in staged:
            self.materials[mat.id] = mat
        self._save()
        return staged

    def import_context_batch(
        self, subject: str, entries: list[dict], origin: str = "imported"
    ) -> tuple[int, list[str]]:
        """Returns (persisted count, duplicate titles rejected)."""
        if not subject:
            raise EmptyTitle("subject must be non-empty")
        for i, e in enumerate(entries):
            if not e.get("title"):
                raise EmptyTitle(f"entry {i} has an empty title", detail={"index": i})
            if not e.get("background"):
                raise EmptyBody(f"entry {i} has an empty background", detail={"index": i})
        duplicates = []
        fresh = []
        seen: set[tuple[str, str]] = set()
        for e in entries:
            key = (subject, e["title"])
            if key in self._pool_keys or key in seen:
                duplicates.append(e["title"])
            else:
                seen.add(key)
                fresh.append(e)
        if entries and not fresh:
            raise AllDuplicates(
                f"all {len(duplicates)} entries already exist under {subject!r}",
                detail={"duplicates": duplicates},
            )
        staged = []
        for e in fresh:
            embedding = self.gateway.embed(e["title"] + "\n" + e["background"])
            staged.append(
                ContextEntry(
                    id=f"ctx-{uuid.uuid4().hex[:12]}",
                    subject=subject,
                    title=e["title"],
                    background=e["background"],
                    embedding=embedding,
                    origin=origin,
                )
            )
        for entry in staged:
            self.pool[entry.id] = entry
            self._pool_keys.add((entry.subject, entry.title))
        self._save()
        return len(staged), duplicates

    def embed_user_context(self, title: str, background: str) -> ContextEntry:
        if not title:
            raise EmptyTitle("context title must be non-empty")
        if not background:
            raise EmptyBody("context background must be non-empty")
        key = (USER_SUBJECT, title)
        if key in self._pool_keys:
            raise DuplicateEntry(f"context {title!r} already exists")
        entry = ContextEntry(
            id=f"ctx-{uuid.uuid4().hex[:12]}",
            subject=USER_SUBJECT,
            title=title,
            background=background,
            embedding=self.gateway.embed(title + "\n" + background),
            origin="imported",
        )
        self.pool[entry.id] = entry
        self._pool_keys.add(key)
        self._save()
        return entry

    # -- pool file exchange -------------------------------------------------

    def import_pool_file(self, path: str | Path, subject: Optional[str] = None):
        """Batch import from a pool file; records may carry their own subject."""
        by_subject: dict[str, list[dict]] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            subj = subject or rec.get("subject", SUBJECT_INFORMAL)
            by_subject.setdefault(subj, []).append(
                {"title": rec["title"], "background": rec["background"]}
            )
        total, duplicates = 0, []
        for subj, entries in by_subject.items():
            try:
                count, dups = self.import_context_batch(subj, entries)
            except AllDuplicates as exc:
                count, dups = 0, list(exc.detail["duplicates"])
            total += count
            duplicates.extend(dups)
        return total, duplicates

    def export_pool(self) -> str:
        """Canonical pool export; inverse of import for (subject, title, background)."""
        entries = sorted(self.pool.values(), key=lambda e: (e.subject, e.title))
        lines = [pool_record_line(e.subject, e.title, e.background) for e in entries]
        return "\n".join(lines) + ("\n" if lines else "")

    # -- persistence --------------------------------------------------------

    def _save(self) -> None:
        if not self.directory:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        mat_lines = [
            json.dumps(
                {"id": m.id, "title": m.title, "body": m.body, "source_label": m.source_label},
                ensure_ascii=False,
            )
            for m in self.materials.values()
        ]
        pool_lines = [
            json.dumps(
                {
                    "id": e.id,
                    "subject": e.subject,
                    "title": e.title,
                    "background": e.background,
                    "origin": e.origin,
                },
                ensure_ascii=False,
            )
            for e in self.pool.values()
        ]
        (self.directory / "materials.jsonl").write_text(
            "\n".join(mat_lines) + ("\n" if mat_lines else ""), encoding="utf-8"
        )
        (self.directory / "pool.jsonl").write_text(
            "\n".join(pool_lines) + ("\n" if pool_lines else ""), encoding="utf-8"
        )
        vectors = {m.id: m.embedding for m in self.materials.values()}
        vectors.update({e.id: e.embedding for e in self.pool.values()})
        np.savez(self.directory / "embeddings.npz", **vectors)
        (self.directory / "manifest.json").write_text(
            json.dumps(self.manifest().to_dict(), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    def _load(self) -> None:
        assert self.directory is not None
        manifest = json.loads((self.directory / "manifest.json").read_text(encoding="utf-8"))
        if manifest["provider_tag"] != self.gateway.config.provider_tag:
            raise ProviderUnavailable(
                "stored embeddings were produced by "
                f"{manifest['provider_tag']!r}, configured provider is "
                f"{self.gateway.config.provider_tag!r}; re-import the corpus"
            )
        with np.load(self.directory / "embeddings.npz") as vecs:
            vectors = {k: vecs[k] for k in vecs.files}
        for line in (self.directory / "materials.jsonl").read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            self.materials[rec["id"]] = ReadingMaterial(embedding=vectors[rec["id"]], **rec)
        for line in (self.directory / "pool.jsonl").read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            entry = ContextEntry(embedding=vectors[rec["id"]], **rec)
            self.pool[entry.id] = entry
            self._pool_keys.add((entry.subject, entry.title))
