"""Exception types raised across the package."""

from __future__ import annotations


class SpeechPruneError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SpeechPruneError, ValueError):
    """A matrix or vector has an incompatible or invalid shape."""

    def __init__(self, message: str, *shapes: tuple) -> None:
        if shapes:
            message = f"{message}: " + " vs ".join(str(s) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class ValidationError(SpeechPruneError, ValueError):
    """A configuration value or data structure violates its invariants."""


class BundleError(SpeechPruneError):
    """A bundle file could not be parsed or validated.

    ``kind`` is a stable machine-readable error category; ``offset`` is the
    byte position in the input where the problem was detected, when known.
    """

    def __init__(self, kind: str, message: str, offset: int | None = None) -> None:
        at = f" (at byte {offset})" if offset is not None else ""
        super().__init__(f"{kind}: {message}{at}")
        self.kind = kind
        self.offset = offset
