"""Exception hierarchy shared across the package.

Every exception carries a stable machine-readable ``code`` so the HTTP
layer can map failures without string matching.
"""

from __future__ import annotations


class ThemeWeaverError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "internal_error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.message = message
        self.detail = detail


# corpus
class EmptyBody(ThemeWeaverError):
    code = "empty_body"


class EmptyTitle(ThemeWeaverError):
    code = "empty_title"


class DuplicateEntry(ThemeWeaverError):
    code = "duplicate_entry"


class AllDuplicates(ThemeWeaverError):
    code = "all_duplicates"


class ProviderUnavailable(ThemeWeaverError):
    code = "provider_unavailable"


# retrieval
class DimensionMismatch(ThemeWeaverError):
    code = "dimension_mismatch"


class ZeroVector(ThemeWeaverError):
    code = "zero_vector"


class EmptyMaterialSet(ThemeWeaverError):
    code = "empty_material_set"


class DegenerateQuery(ThemeWeaverError):
    code = "degenerate_query"


class NoCandidates(ThemeWeaverError):
    code = "no_candidates"


# gateway
class ProviderTimeout(ThemeWeaverError):
    code = "provider_timeout"


class ProviderHttpError(ThemeWeaverError):
    code = "provider_http_error"

    def __init__(self, message: str, status: int = 0):
        super().__init__(message, detail={"status": status})
        self.status = status


class FixtureMiss(ThemeWeaverError):
    code = "fixture_miss"


class BudgetExceeded(ThemeWeaverError):
    code = "budget_exceeded"


# prompts
class PayloadMissing(ThemeWeaverError):
    code = "payload_missing"


class PayloadOverflow(ThemeWeaverError):
    code = "payload_overflow"


# agents / outcome
class MalformedOutput(ThemeWeaverError):
    code = "malformed_output"


class AnalysisFailed(ThemeWeaverError):
    code = "analysis_failed"


class SameMaterial(ThemeWeaverError):
    code = "same_material"


class UnknownFocus(ThemeWeaverError):
    code = "unknown_focus"


class EmptyCollectionEntry(ThemeWeaverError):
    code = "empty_collection_entry"


class NothingToExport(ThemeWeaverError):
    code = "nothing_to_export"


# session
class UnknownCard(ThemeWeaverError):
    code = "unknown_card"


class UnknownMaterial(ThemeWeaverError):
    code = "unknown_material"


class UnknownSession(ThemeWeaverError):
    code = "unknown_session"


class AlreadyDeleted(ThemeWeaverError):
    code = "already_deleted"


class DuplicateChild(ThemeWeaverError):
    code = "duplicate_child"


class InvalidTransition(ThemeWeaverError):
    code = "invalid_transition"
