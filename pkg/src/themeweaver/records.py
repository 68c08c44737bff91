"""Typed agent outputs attached to cards; all round-trip through plain dicts
so the session event log stays pure JSON."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ContextDescription:
    context_entry_ref: str
    description: str
    relevant_material_titles: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "context_entry_ref": self.context_entry_ref,
            "description": self.description,
            "relevant_material_titles": list(self.relevant_material_titles),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextDescription":
        return cls(**d)


@dataclass
class ElementLink:
    kind: str  # sentence | paragraph | viewpoint
    excerpt: str
    connection: str


@dataclass
class TextAnalysis:
    material_ref: str
    context_ref: str
    overall: str
    element_links: list[ElementLink] = field(default_factory=list)

    def rendered(self) -> str:
        lines = [f"overall: {self.overall}"]
        lines += [f"- {l.kind} :: {l.excerpt} :: {l.connection}" for l in self.element_links]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "material_ref": self.material_ref,
            "context_ref": self.context_ref,
            "overall": self.overall,
            "element_links": [
                {"kind": l.kind, "excerpt": l.excerpt, "connection": l.connection}
                for l in self.element_links
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TextAnalysis":
        return cls(
            material_ref=d["material_ref"],
            context_ref=d["context_ref"],
            overall=d["overall"],
            element_links=[ElementLink(**l) for l in d["element_links"]],
        )


@dataclass
class Review:
    rating: int
    critique: str
    relevance_flag: bool = True
    accuracy_flag: bool = True

    def to_dict(self) -> dict:
        return {
            "rating": self.rating,
            "critique": self.critique,
            "relevance_flag": self.relevance_flag,
            "accuracy_flag": self.accuracy_flag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Review":
        return cls(**d)


@dataclass
class PairwiseComparison:
    material_a: str
    material_b: str
    context_ref: str
    similarities: list[str] = field(default_factory=list)
    differences: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "material_a": self.material_a,
            "material_b": self.material_b,
            "context_ref": self.context_ref,
            "similarities": list(self.similarities),
            "differences": list(self.differences),
        }
