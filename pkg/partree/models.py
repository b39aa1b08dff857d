"""Pydantic models for the partree public API.

These are thin wrappers over the engine types (``partree.engine``): the run
configuration shared by the client and the CLI, and the summaries the client
hands back for builds, query answers and audits.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from partree.engine.datagen import FAMILIES
from partree.engine.geometry import as_scalar, format_scalar
from partree.engine.rangecount import RangeCountConfig
from partree.engine.refine import RefineConfig
from partree.engine.segquery import SegQueryConfig
from partree.engine.stabbing import StabbingConfig


class RunConfig(BaseModel):
    """Everything that determines a run's output.

    Rationals (``beta``, ``eps``, ``c_cut``) are kept in canonical ``num/den``
    text so that two configs compare, hash and serialize equal exactly when
    they describe the same run.

    Example:
        ```python
        cfg = RunConfig(n=32, seed=7, beta="1/8")
        cfg.to_refine_config().beta   # Fraction(1, 8)
        ```
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: str = "uniform"
    n: int = Field(default=64, ge=1)
    seed: int = Field(default=0, ge=0)
    b: int = 8
    beta: str = "1/10"
    eps: str = "1/2"
    r: int | None = Field(default=None, ge=1)
    r1: int | None = Field(default=None, ge=1)
    t_leaf: int = Field(default=8, ge=2)
    c_cut: str = "1/4"
    max_test_lines: int = Field(default=128, ge=0)
    workers: int = Field(default=1, ge=1)
    reporting: bool = False
    allow_shared_endpoints: bool = False

    @field_validator("beta", "eps", "c_cut", mode="before")
    @classmethod
    def _canonical_rational(cls, value: Any) -> str:
        if isinstance(value, float):
            raise ValueError(f"rational must be an int or 'num/den' text, got: {value!r}")
        try:
            return format_scalar(as_scalar(value))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r} ({exc})") from None

    @field_validator("family")
    @classmethod
    def _known_family(cls, value: str) -> str:
        if value not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got: {value!r}")
        return value

    @model_validator(mode="after")
    def _check_ranges(self) -> RunConfig:
        if self.b < 4 or self.b & (self.b - 1):
            raise ValueError(f"b must be a power of two >= 4, got: {self.b}")
        if not 0 < self.fraction("beta") < 1:
            raise ValueError(f"beta must be in (0, 1), got: {self.beta}")
        if not 0 < self.fraction("eps") < 1:
            raise ValueError(f"eps must be in (0, 1), got: {self.eps}")
        if self.fraction("c_cut") <= 0:
            raise ValueError(f"c_cut must be positive, got: {self.c_cut}")
        return self

    def fraction(self, name: str) -> Fraction:
        return Fraction(getattr(self, name))

    # ========== Engine configs ==========

    def to_refine_config(self) -> RefineConfig:
        return RefineConfig(
            b=self.b,
            beta=self.fraction("beta"),
            c_cut=self.fraction("c_cut"),
            max_test_lines=self.max_test_lines,
        )

    def rangecount_config(self) -> RangeCountConfig:
        return RangeCountConfig(
            r=self.r, r1=self.r1, t_leaf=self.t_leaf, refine=self.to_refine_config()
        )

    def stabbing_config(self) -> StabbingConfig:
        return StabbingConfig(
            r=self.r,
            eps=self.fraction("eps"),
            t_leaf=self.t_leaf,
            reporting=self.reporting,
            refine=self.to_refine_config(),
        )

    def segquery_config(self) -> SegQueryConfig:
        return SegQueryConfig(r=self.r, refine=self.to_refine_config())

    def canonical_bytes(self) -> bytes:
        """Sorted-key JSON of every field; the determinism key of a run."""
        return json.dumps(self.model_dump(), sort_keys=True, separators=(",", ":")).encode()


class LevelStats(BaseModel):
    """Cells and query-line crossings of one tree level."""

    level: int
    cells: int
    max_points: int
    test_crossing_max: int = 0
    random_crossing_max: int = 0


class BuildStats(BaseModel):
    """Summary of one built structure.

    ``levels`` describes the top partition tree of the structure; structure
    specific figures (stage-2 tree count, stored ids, edge lists) go in
    ``extra``.
    """

    structure: str
    n: int
    structure_hash: str
    levels: list[LevelStats] = Field(default_factory=list)
    wall_ms: float = 0.0
    extra: dict[str, Any] = Field(default_factory=dict)


class QueryResult(BaseModel):
    """Answer to one query record plus the work its descent did.

    ``answer`` is a count for ``T``/``H``/``Q``/``G``, 0 or 1 for ``L`` and the
    hit segment id for ``R`` (-1 on a miss). ``detail`` holds the reported ids
    (space separated) or the hit point.
    """

    id: int
    kind: str
    answer: int
    detail: str = ""
    visited_cells: int = 0
    leaf_visits: int = 0

    def to_row(self) -> tuple[Any, ...]:
        return (
            self.id,
            self.kind,
            self.answer,
            self.detail,
            self.visited_cells,
            self.leaf_visits,
        )


RESULT_COLUMNS = ("id", "kind", "answer", "detail", "visited_cells", "leaf_visits")


class ValidationResult(BaseModel):
    """Result of a structure audit.

    ``errors`` name every violated invariant with its witness; ``warnings``
    hold checks that are expected to hold only empirically.
    """

    valid: bool
    errors: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    checks: int = 0


class BenchRow(BaseModel):
    """Medians of one query kind at one input size.

    ``leaf_ratio`` is the median leaf-visit count divided by the one at the
    previous (half) size; None on the first size of a schedule.
    """

    n: int
    kind: str
    queries: int
    median_visited: float
    median_leaf_visits: float
    median_ms: float
    leaf_ratio: float | None = None

    def to_row(self) -> tuple[Any, ...]:
        ratio = "" if self.leaf_ratio is None else f"{self.leaf_ratio:.3f}"
        return (
            self.n,
            self.kind,
            self.queries,
            f"{self.median_visited:.1f}",
            f"{self.median_leaf_visits:.1f}",
            f"{self.median_ms:.3f}",
            ratio,
        )


BENCH_COLUMNS = (
    "n",
    "kind",
    "queries",
    "median_visited",
    "median_leaf_visits",
    "median_ms",
    "leaf_ratio",
)
