"""Exception types raised by the partree engine.

Every domain error subclasses ``ValueError`` so callers that only care about
"bad input" can catch that, while tests and the CLI can be precise.
"""

from __future__ import annotations

from typing import Any


class ShearRequiredError(ValueError):
    """A vertical line was dualized without a prior shear."""

    def __init__(self, what: str = "line") -> None:
        super().__init__(f"Dualizing a vertical {what} requires shear")


class OutsideClipError(ValueError):
    """A point was located outside a clipped arrangement."""


class PredicateNotFaceConstantError(ValueError):
    """An annotation predicate changed value inside a single face."""


class PreconditionError(ValueError):
    """Input to the refinement engine violates its preconditions."""


class DegenerateTriangleError(ValueError):
    """A triangle with zero area was given where a proper triangle is required."""


class IntersectingSegmentsError(ValueError):
    """Two segments that must be disjoint intersect."""


class ReportingDisabledError(ValueError):
    """A reporting query was issued against a counting-only index."""


class DatasetFormatError(ValueError):
    """A dataset or query file record could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class InvariantViolation(RuntimeError):
    """A structural invariant failed; ``witness`` identifies where."""

    def __init__(self, invariant: str, witness: Any = None) -> None:
        self.invariant = invariant
        self.witness = witness
        msg = invariant if witness is None else f"{invariant} (witness: {witness})"
        super().__init__(msg)
