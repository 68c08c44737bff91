"""Interdisciplinary theme ideation service for literature teachers.

Four specialized LLM roles explore an embedding-indexed pool of candidate
themes against a teacher's selected reading materials, producing editable
theme and text-analysis cards and a templated course-plan outcome with
txt/HTML export.
"""

__version__ = "0.1.0"
