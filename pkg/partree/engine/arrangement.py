"""Line arrangements with exact point location.

An :class:`Arrangement` is built once from a finite set of non-vertical lines
and then answers point location in O(log m) exact comparisons. Faces are
two-dimensional cells of the plane (optionally clipped to a convex region);
each face is identified by the bitmask of the distinct lines lying strictly
below it, which is the face's sign vector.

Layout:
    The sorted distinct x-coordinates of the vertices cut the plane into
    vertical slabs. Inside a slab no two lines cross, so the lines have a
    fixed bottom-to-top order and the gaps between consecutive lines are
    trapezoids, each belonging to exactly one face. ``slab_faces[j][k]`` is
    the face in gap ``k`` of slab ``j`` (gap 0 lies below every line).

Face ids are assigned in order of first sight while scanning slabs left to
right and gaps bottom to top, so they only depend on the input line set.

Thread Safety:
    Arrangements are frozen; annotated copies are produced with
    ``dataclasses.replace``.
"""

from __future__ import annotations

import bisect
import dataclasses
import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, TypeVar

from .errors import OutsideClipError, PredicateNotFaceConstantError, ShearRequiredError
from .geometry import (
    ONE,
    ZERO,
    ConvexRegion,
    HalfPlane,
    Line,
    Point,
    format_scalar,
    intersect_lines,
)

logger = logging.getLogger("partree.arrangement")

T = TypeVar("T")


@dataclass(frozen=True)
class Location:
    """Result of locating a point.

    Attributes:
        face: The smallest incident face id
        faces: Every face whose closure contains the point, ascending
        on_lines: Indices of the distinct lines through the point
    """

    face: int
    faces: tuple[int, ...]
    on_lines: tuple[int, ...]

    @property
    def generic(self) -> bool:
        return not self.on_lines


@dataclass(frozen=True)
class Arrangement:
    """A planar arrangement of distinct non-vertical lines.

    Attributes:
        lines: Distinct lines in canonical order
        multiplicity: How many input lines collapsed onto each distinct line
        members: Input positions merged into each distinct line
        vertices: Distinct intersection points, lexicographically sorted
        vertex_lines: Distinct lines through each vertex
        slab_xs: Sorted distinct vertex abscissae
        slab_orders: Bottom-to-top line order per slab
        slab_faces: Face id per gap per slab (-1 where the gap misses the clip)
        face_masks: Bitmask of lines strictly below each face
        face_witnesses: Two distinct interior points per face
        face_bounds: Lines bounding some trapezoid of each face
        clip: Optional convex clip region
        face_counts: Per-face item count after :func:`annotate_counts`
        face_items: Per-face item indices after ``annotate_counts(with_ids=True)``
    """

    lines: tuple[Line, ...]
    multiplicity: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]
    vertices: tuple[Point, ...]
    vertex_lines: tuple[tuple[int, ...], ...]
    slab_xs: tuple[Fraction, ...]
    slab_orders: tuple[tuple[int, ...], ...]
    slab_faces: tuple[tuple[int, ...], ...]
    face_masks: tuple[int, ...]
    face_witnesses: tuple[tuple[Point, Point], ...]
    face_bounds: tuple[tuple[int, ...], ...]
    clip: ConvexRegion | None = None
    face_counts: tuple[int, ...] | None = None
    face_items: tuple[tuple[int, ...], ...] | None = None

    @property
    def face_count(self) -> int:
        return len(self.face_masks)

    @property
    def edge_count(self) -> int:
        """Edges of the unclipped arrangement: each line is cut by its vertices."""
        per_line = [0] * len(self.lines)
        for through in self.vertex_lines:
            for i in through:
                per_line[i] += 1
        return sum(k + 1 for k in per_line)

    def euler_ok(self) -> bool:
        """Check V - E + F = 2 with one vertex at infinity (or its clipped form)."""
        if self.clip is not None:
            return _clipped_euler(self) == 2
        if not self.lines:
            return self.face_count == 1
        return (len(self.vertices) + 1) - self.edge_count + self.face_count == 2

    # ========== Point location ==========

    def _slabs_at(self, x: Fraction) -> list[int]:
        j = bisect.bisect_left(self.slab_xs, x)
        if j < len(self.slab_xs) and self.slab_xs[j] == x:
            return [j, j + 1]
        return [j]

    def locate_all(self, p: Point) -> Location:
        """Every face whose closure contains ``p`` plus the lines through ``p``.

        Raises:
            OutsideClipError: If the arrangement is clipped and p lies outside
        """
        if self.clip is not None and not self.clip.contains_point(p):
            raise OutsideClipError(
                f"Point ({format_scalar(p.x)}, {format_scalar(p.y)}) lies outside the clip"
            )
        faces: set[int] = set()
        on: set[int] = set()
        for j in self._slabs_at(p.x):
            order = self.slab_orders[j]
            ys = _OrderedYs(self.lines, order, p.x)
            lo = bisect.bisect_left(ys, p.y)
            hi = bisect.bisect_right(ys, p.y)
            on.update(order[lo:hi])
            for k in range(lo, hi + 1):
                f = self.slab_faces[j][k]
                if f >= 0:
                    faces.add(f)
        ordered = tuple(sorted(faces))
        if not ordered:
            raise OutsideClipError(
                f"Point ({format_scalar(p.x)}, {format_scalar(p.y)}) meets no face"
            )
        return Location(face=ordered[0], faces=ordered, on_lines=tuple(sorted(on)))

    def locate(self, p: Point) -> int:
        """Face id of ``p``; boundary points get the smallest incident face."""
        return self.locate_all(p).face

    def face_halfplanes(self, face: int) -> list[HalfPlane]:
        """Closed halfplanes (over the face's bounding lines) whose intersection is the face."""
        mask = self.face_masks[face]
        out = []
        for i in self.face_bounds[face]:
            ln = self.lines[i]
            below = (mask >> i) & 1
            # face above a line means sign(b) * value > 0
            flag = 1 if ln.b > 0 else -1
            out.append(HalfPlane(ln, flag if below else -flag))
        if self.clip is not None:
            out.extend(self.clip.halfplanes)
        return out

    def face_region(self, face: int) -> ConvexRegion:
        return ConvexRegion(self.face_halfplanes(face), id=face).reduced()

    def items_of_mask(self, mask: int) -> list[int]:
        """Input positions of every line whose bit is set."""
        out: list[int] = []
        while mask:
            low = mask & -mask
            out.extend(self.members[low.bit_length() - 1])
            mask ^= low
        return sorted(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lines": [list(ln.key()) for ln in self.lines],
            "multiplicity": list(self.multiplicity),
            "vertices": [[format_scalar(v.x), format_scalar(v.y)] for v in self.vertices],
            "slab_xs": [format_scalar(x) for x in self.slab_xs],
            "slab_orders": [list(o) for o in self.slab_orders],
            "slab_faces": [list(f) for f in self.slab_faces],
            "face_masks": [str(m) for m in self.face_masks],
            "clip": None if self.clip is None else self.clip.canonical(),
            "face_counts": None if self.face_counts is None else list(self.face_counts),
        }


class _OrderedYs(Sequence[Fraction]):
    """Lazy view of line heights at ``x`` in slab order, for bisect."""

    __slots__ = ("_lines", "_order", "_x")

    def __init__(self, lines: Sequence[Line], order: Sequence[int], x: Fraction) -> None:
        self._lines = lines
        self._order = order
        self._x = x

    def __len__(self) -> int:
        return len(self._order)

    def __getitem__(self, k: int) -> Fraction:  # type: ignore[override]
        return self._lines[self._order[k]].y_at(self._x)


# ========== Construction ==========


def _sample_xs(xs: Sequence[Fraction]) -> list[Fraction]:
    if not xs:
        return [ZERO]
    out = [xs[0] - ONE]
    out.extend((xs[i] + xs[i + 1]) / 2 for i in range(len(xs) - 1))
    out.append(xs[-1] + ONE)
    return out


def _gap_region(
    lines: Sequence[Line],
    order: Sequence[int],
    k: int,
    xs: Sequence[Fraction],
    j: int,
    clip: ConvexRegion | None,
) -> ConvexRegion:
    hs: list[HalfPlane] = []
    if j > 0:
        hs.append(HalfPlane(Line.vertical(xs[j - 1]), 1))
    if j < len(xs):
        hs.append(HalfPlane(Line.vertical(xs[j]), -1))
    if k > 0:
        ln = lines[order[k - 1]]
        hs.append(HalfPlane(ln, 1 if ln.b > 0 else -1))
    if k < len(order):
        ln = lines[order[k]]
        hs.append(HalfPlane(ln, -1 if ln.b > 0 else 1))
    if clip is not None:
        hs.extend(clip.halfplanes)
    return ConvexRegion(hs)


def _gap_witnesses(
    lines: Sequence[Line], order: Sequence[int], k: int, x: Fraction
) -> tuple[Point, Point]:
    lo = lines[order[k - 1]].y_at(x) if k > 0 else None
    hi = lines[order[k]].y_at(x) if k < len(order) else None
    if lo is not None and hi is not None:
        return Point(x, (lo + hi) / 2), Point(x, lo + (hi - lo) / 3)
    if lo is not None:
        return Point(x, lo + 1), Point(x, lo + 2)
    if hi is not None:
        return Point(x, hi - 1), Point(x, hi - 2)
    return Point(x, ZERO), Point(x, ONE)


def build_arrangement(lines: Iterable[Line], clip: ConvexRegion | None = None) -> Arrangement:
    """Build the arrangement of ``lines``, optionally restricted to ``clip``.

    Duplicate lines collapse into one distinct line with a multiplicity;
    ``members`` maps each distinct line back to the input positions.

    Raises:
        ShearRequiredError: If any line is vertical
    """
    by_key: dict[tuple[int, int, int], list[int]] = {}
    proto: dict[tuple[int, int, int], Line] = {}
    for pos, ln in enumerate(lines):
        if ln.is_vertical:
            raise ShearRequiredError("line in an arrangement")
        by_key.setdefault(ln.key(), []).append(pos)
        proto.setdefault(ln.key(), ln)
    keys = sorted(by_key)
    distinct = tuple(proto[k].with_id(i) for i, k in enumerate(keys))
    members = tuple(tuple(by_key[k]) for k in keys)
    m = len(distinct)

    through: dict[tuple[Fraction, Fraction], set[int]] = {}
    for i in range(m):
        for j in range(i + 1, m):
            p = intersect_lines(distinct[i], distinct[j])
            if p is not None:
                s = through.setdefault(p.key(), set())
                s.add(i)
                s.add(j)
    vkeys = sorted(through)
    vertices = tuple(Point(x, y) for x, y in vkeys)
    vertex_lines = tuple(tuple(sorted(through[k])) for k in vkeys)
    xs = tuple(sorted({x for x, _ in vkeys}))

    orders: list[tuple[int, ...]] = []
    for x in _sample_xs(xs):
        orders.append(tuple(sorted(range(m), key=lambda i, x=x: distinct[i].y_at(x))))

    ids: dict[int, int] = {}
    masks: list[int] = []
    witnesses: list[tuple[Point, Point]] = []
    bounds: list[set[int]] = []
    slab_faces: list[tuple[int, ...]] = []
    samples = _sample_xs(xs)
    for j, order in enumerate(orders):
        row: list[int] = []
        mask = 0
        for k in range(m + 1):
            if k > 0:
                mask |= 1 << order[k - 1]
            if clip is not None:
                region = _gap_region(distinct, order, k, xs, j, clip)
                w = region.interior_witness()
                if w is None:
                    row.append(-1)
                    continue
                corner = region.points[0]
                pair = (w, Point((w.x + corner.x) / 2, (w.y + corner.y) / 2))
            else:
                pair = _gap_witnesses(distinct, order, k, samples[j])
            f = ids.get(mask)
            if f is None:
                f = ids[mask] = len(masks)
                masks.append(mask)
                witnesses.append(pair)
                bounds.append(set())
            elif witnesses[f][0].x == witnesses[f][1].x and pair[0].x != witnesses[f][0].x:
                # prefer witnesses from two different slabs
                witnesses[f] = (witnesses[f][0], pair[0])
            if k > 0:
                bounds[f].add(order[k - 1])
            if k < m:
                bounds[f].add(order[k])
            row.append(f)
        slab_faces.append(tuple(row))

    arr = Arrangement(
        lines=distinct,
        multiplicity=tuple(len(mm) for mm in members),
        members=members,
        vertices=vertices,
        vertex_lines=vertex_lines,
        slab_xs=xs,
        slab_orders=tuple(orders),
        slab_faces=tuple(slab_faces),
        face_masks=tuple(masks),
        face_witnesses=tuple(witnesses),
        face_bounds=tuple(tuple(sorted(b)) for b in bounds),
        clip=clip,
    )
    logger.debug(
        "Built arrangement: %d lines, %d vertices, %d faces", m, len(vertices), len(masks)
    )
    return arr


def _line_chord(clip: ConvexRegion, ln: Line) -> tuple[Point, Point] | None:
    """Endpoints of ``ln`` inside a bounded clip, when it crosses the interior."""
    if not clip.crosses(ln):
        return None
    n2 = ln.a * ln.a + ln.b * ln.b
    foot = Point(Fraction(-ln.a * ln.c, n2), Fraction(-ln.b * ln.c, n2))
    dx, dy = ln.direction()
    lo: Fraction | None = None
    hi: Fraction | None = None
    for h in clip.halfplanes:
        dv = h.dot(dx, dy)
        if dv == 0:
            continue
        t = -h.value(foot) / dv
        if dv > 0:
            lo = t if lo is None else max(lo, t)
        else:
            hi = t if hi is None else min(hi, t)
    if lo is None or hi is None:
        return None
    return (
        Point(foot.x + lo * dx, foot.y + lo * dy),
        Point(foot.x + hi * dx, foot.y + hi * dy),
    )


def _clipped_euler(arr: Arrangement) -> int:
    clip = arr.clip
    assert clip is not None
    if not clip.bounded:
        raise ValueError("The clipped Euler check needs a bounded clip")
    boundary: set[tuple[Fraction, Fraction]] = {v.key() for v in clip.vertices_ccw()}
    interior_on: dict[int, int] = {}
    crossing = []
    for i, ln in enumerate(arr.lines):
        chord = _line_chord(clip, ln)
        if chord is None:
            continue
        crossing.append(i)
        interior_on[i] = 0
        boundary.update((chord[0].key(), chord[1].key()))
    inner_vertices = 0
    for v, through in zip(arr.vertices, arr.vertex_lines):
        if all(h.value(v) > 0 for h in clip.halfplanes):
            inner_vertices += 1
            for i in through:
                interior_on[i] += 1
    v_total = inner_vertices + len(boundary)
    e_total = sum(k + 1 for k in interior_on.values()) + len(boundary)
    return v_total - e_total + arr.face_count + 1


# ========== Annotation ==========


def annotate_counts(
    arr: Arrangement,
    items: Sequence[T],
    contains: Callable[[T, Point], bool],
    *,
    with_ids: bool = False,
) -> Arrangement:
    """Attach per-face counts of the items whose region contains the face.

    ``contains(item, p)`` must be constant on every face; it is evaluated at
    two interior witnesses per face and a disagreement is reported.

    Raises:
        PredicateNotFaceConstantError: If the predicate differs inside a face
    """
    counts: list[int] = []
    per_face: list[tuple[int, ...]] = []
    for f, (w1, w2) in enumerate(arr.face_witnesses):
        hits = []
        for idx, item in enumerate(items):
            a, b = contains(item, w1), contains(item, w2)
            if a != b:
                raise PredicateNotFaceConstantError(
                    f"Predicate for item {idx} differs inside face {f}"
                )
            if a:
                hits.append(idx)
        counts.append(len(hits))
        per_face.append(tuple(hits))
    return dataclasses.replace(
        arr,
        face_counts=tuple(counts),
        face_items=tuple(per_face) if with_ids else None,
    )
