"""Shared exception base for the tutoring service.

Every domain error carries a stable machine-readable ``code`` so the HTTP
layer and the CLI can map failures without string matching.
"""

from __future__ import annotations


class TutorError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "tutor_error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details
