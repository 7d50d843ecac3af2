"""Domain errors shared across the toolkit.

Every error carries a stable machine code (its class name) plus optional
structured details, so the HTTP API and the CLI can report the same
condition the same way.
"""

from __future__ import annotations

from typing import Any


class AssessmentError(Exception):
    """Base class for every error this package raises on purpose."""

    def __init__(self, message: str, details: Any = None):
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details is not None:
            payload["details"] = self.details
        return payload


class InvalidInput(AssessmentError):
    """A caller-supplied value is structurally unusable (empty name, bad enum, ...)."""


class OutOfRangeScore(AssessmentError):
    """A score falls outside the assessment scale."""


class UnknownLeafId(AssessmentError):
    """A score sheet references an id that is not an issue leaf of the taxonomy."""


class IncompleteAssessment(AssessmentError):
    """Strict evaluation requested while some issue leaves are unscored."""


class EmptyNode(AssessmentError):
    """A node has no aggregable children, so its mean is undefined."""


class MalformedDocument(AssessmentError):
    """A taxonomy document violates the file format."""


class DuplicateId(AssessmentError):
    """Two nodes in one taxonomy share an id."""


class DuplicateUsername(AssessmentError):
    """The username is already registered."""


class AuthFailure(AssessmentError):
    """Login failed or a request carried no valid session token."""


class NotFound(AssessmentError):
    """The referenced entity does not exist."""


class AlreadyFinalized(AssessmentError):
    """The experiment was finalized and is immutable."""


class BindFailure(AssessmentError):
    """The HTTP service could not bind its address."""


class StoreOpenFailure(AssessmentError):
    """The session store file exists but cannot be read."""
