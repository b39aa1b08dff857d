"""Brute-force reference answers.

Everything here is a direct scan over the input using the exact predicates
of :mod:`partree.engine.geometry` and nothing else, so the answers are
independent of the arrangement, cutting and tree code they are compared with.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .geometry import (
    ConvexRegion,
    HalfPlane,
    Line,
    Point,
    Ray,
    Segment,
    SimplexCell,
    Triangle,
    line_meets_segment,
    orient,
    ray_hit_parameter,
    segments_intersect,
)


def brute_count_region(points: Iterable[Point], halfplanes: Sequence[HalfPlane]) -> int:
    return sum(1 for p in points if all(h.value(p) >= 0 for h in halfplanes))


def brute_count_triangle(points: Iterable[Point], a: Point, b: Point, c: Point) -> int:
    """Points in the closed triangle abc; a degenerate triangle is its hull."""
    if orient(a, b, c) != 0:
        tri = Triangle(a, b, c)
        return sum(1 for p in points if tri.contains(p))
    ends = sorted((a, b, c), key=lambda p: p.key())
    lo, hi = ends[0], ends[-1]
    if lo.key() == hi.key():
        return sum(1 for p in points if p.key() == lo.key())
    hull = Segment(lo, hi)
    return sum(1 for p in points if hull.contains(p))


def brute_stab(triangles: Iterable[Triangle], q: Point) -> list[int]:
    return sorted(t.id for t in triangles if t.contains(q))


def brute_detect(segments: Iterable[Segment], ln: Line) -> bool:
    return any(line_meets_segment(ln, s) for s in segments)


def brute_line_hits(segments: Iterable[Segment], ln: Line) -> list[int]:
    return sorted(s.id for s in segments if line_meets_segment(ln, s))


def brute_seg_intersect(segments: Iterable[Segment], sq: Segment) -> list[int]:
    return sorted(s.id for s in segments if segments_intersect(s, sq))


def brute_first_hit(segments: Iterable[Segment], ray: Ray) -> tuple[int, Point] | None:
    """Segment hit first by ``ray`` (smallest parameter, then smallest id) and the hit point."""
    best: tuple[Fraction, int] | None = None
    for s in segments:
        t = ray_hit_parameter(ray, s)
        if t is not None and (best is None or (t, s.id) < best):
            best = (t, s.id)
    if best is None:
        return None
    return best[1], ray.at(best[0])


def brute_crossings(cells: Iterable[ConvexRegion], ln: Line) -> int:
    """Number of cells whose interior the line meets without containing them."""
    return sum(1 for cell in cells if cell.crosses(ln))


@dataclass(frozen=True)
class CuttingCheck:
    passed: bool
    witness_cell: int | None = None
    reason: str = ""


def verify_cutting(
    lines: Sequence[Line],
    weights: Sequence[int] | None,
    parent: ConvexRegion,
    r: Fraction | int,
    cells: Sequence[SimplexCell],
) -> CuttingCheck:
    """Check a cutting against its definition.

    Every cell must lie in ``parent`` and be crossed by lines of total weight
    at most ``W/r``; cell interiors must be pairwise disjoint and, for a
    bounded parent, the cell areas must add up to the parent's.
    """
    w = list(weights) if weights is not None else [1] * len(lines)
    total = sum(w)
    r = Fraction(r)
    for k, cell in enumerate(cells):
        crossing = sum(w[i] for i, ln in enumerate(lines) if cell.crosses(ln))
        if crossing * r > total:
            return CuttingCheck(False, k, f"crossing weight {crossing} exceeds {total}/{r}")
        inside = all(h.value(p) >= 0 for h in parent.halfplanes for p in cell.points) and all(
            h.dot(*d) >= 0 for h in parent.halfplanes for d in cell.rays
        )
        if not inside:
            return CuttingCheck(False, k, "cell leaves the parent")
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            overlap = ConvexRegion((*cells[i].halfplanes, *cells[j].halfplanes))
            if overlap.has_interior:
                return CuttingCheck(False, j, f"cell {j} overlaps cell {i}")
    if parent.bounded:
        if sum((c.area() for c in cells), Fraction(0)) != parent.area():
            return CuttingCheck(False, None, "cells do not cover the parent")
    return CuttingCheck(True)


@dataclass
class OracleReport:
    """Expected answers per query and invariant outcomes per structure."""

    expected: dict[int, Any] = field(default_factory=dict)
    checks: list[tuple[str, bool, Any]] = field(default_factory=list)

    def record(self, name: str, passed: bool, witness: Any = None) -> None:
        self.checks.append((name, passed, witness))

    @property
    def failures(self) -> list[tuple[str, bool, Any]]:
        return [c for c in self.checks if not c[1]]

    @property
    def ok(self) -> bool:
        return not self.failures
