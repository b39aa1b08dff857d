"""Ray shooting among pairwise disjoint segments.

Segments are stored exactly as for intersection queries (see
:mod:`partree.engine.segquery`), but every edge and leaf list carries a
:class:`RayLeafStructure`. Within one structure, the supporting line of the
ray crosses the segments of the face ``A_F`` holding its dual point, and every
such segment meets that line in the point where its own supporting line
does. The first segment hit is therefore bounded by the first supporting line
of ``A_F`` the ray crosses: locate the origin in the arrangement of those
lines and find the edge of its face through which the ray leaves.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

from .arrangement import Arrangement, build_arrangement
from .errors import IntersectingSegmentsError, InvariantViolation
from .geometry import (
    ConvexRegion,
    Line,
    Point,
    Ray,
    Segment,
    format_scalar,
    ray_hit_parameter,
    segments_intersect,
)
from .segquery import DualWedges, SegmentStore, SegQueryConfig, build_segment_store
from .tree import QueryStats

logger = logging.getLogger("partree.rayshoot")

_Secondary = tuple[Arrangement, dict[tuple[int, int, int], int]]


@dataclass(frozen=True, order=True)
class Candidate:
    """A segment hit at parameter ``t`` along the (sheared) ray."""

    t: Fraction
    segment: int


@dataclass(frozen=True)
class Hit:
    segment: int
    point: Point
    t: Fraction

    def to_row(self) -> tuple[str, str, str]:
        return (str(self.segment), format_scalar(self.point.x), format_scalar(self.point.y))


def _cross(ux: Fraction, uy: Fraction, vx: Fraction | int, vy: Fraction | int) -> Fraction:
    return ux * vy - uy * vx


def _angle_class(ref: tuple[Fraction, Fraction], u: tuple[Fraction, Fraction]) -> int:
    c = _cross(*ref, *u)
    if c > 0:
        return 1
    if c < 0:
        return 3
    return 0 if ref[0] * u[0] + ref[1] * u[1] > 0 else 2


def _not_after(
    ref: tuple[Fraction, Fraction], u: tuple[Fraction, Fraction], d: tuple[Fraction, Fraction]
) -> bool:
    """Whether ``u`` comes no later than ``d`` counter-clockwise from ``ref``."""
    cu, cd = _angle_class(ref, u), _angle_class(ref, d)
    if cu != cd:
        return cu < cd
    return _cross(*u, *d) >= 0


class RayLeafStructure(DualWedges):
    """First-hit queries over a small set of disjoint segments.

    One secondary arrangement is built per distinct nonempty wedge face set,
    together with the map from its lines back to segment positions.

    Thread Safety:
        Immutable after construction.
    """

    def __init__(self, segments: Sequence[Segment]) -> None:
        super().__init__(segments)
        secondaries: dict[int, _Secondary] = {}
        for bits in self.face_sets:
            if bits and bits not in secondaries:
                wedge = self.positions(bits)
                arr = build_arrangement(self.segments[i].supporting_line() for i in wedge)
                back = {ln.key(): wedge[arr.members[j][0]] for j, ln in enumerate(arr.lines)}
                secondaries[bits] = (arr, back)
        self.secondaries: Mapping[int, _Secondary] = MappingProxyType(secondaries)

    def _scan(self, ray: Ray, positions: Sequence[int]) -> list[Candidate]:
        out = []
        for i in positions:
            t = ray_hit_parameter(ray, self.segments[i])
            if t is not None:
                out.append(Candidate(t, self.segments[i].id))
        return out

    def candidates(self, ray: Ray) -> list[Candidate]:
        """The first hit among the stored segments, as a list of at most one candidate
        (several only when a degenerate query fell back to scanning)."""
        f = self.wedge_face(ray.supporting_line())
        if f is None:
            return self._scan(ray, range(len(self.segments)))
        bits = self.face_sets[f]
        if not bits:
            return []
        arr, back = self.secondaries[bits]
        loc = arr.locate_all(ray.origin)
        if not loc.generic:
            return self._scan(ray, self.positions(bits))
        region = arr.face_region(loc.face)
        if not region.bounded:
            return self._exit_linear(ray, region, back, bits)
        verts = region.vertices_ccw()
        o = ray.origin
        us = [(v.x - o.x, v.y - o.y) for v in verts]
        d = (Fraction(ray.dx), Fraction(ray.dy))
        lo, hi = 0, len(us) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if _not_after(us[0], us[mid], d):
                lo = mid
            else:
                hi = mid - 1
        if _cross(*us[lo], *d) == 0:
            # through a vertex of the face
            return self._scan(ray, self.positions(bits))
        a, b = verts[lo], verts[(lo + 1) % len(verts)]
        return self._from_line(ray, Line.through(a, b), back, bits)

    def _exit_linear(
        self,
        ray: Ray,
        region: ConvexRegion,
        back: dict[tuple[int, int, int], int],
        bits: int,
    ) -> list[Candidate]:
        best: Fraction | None = None
        exits: list[Line] = []
        for h in region.halfplanes:
            dv = h.dot(ray.dx, ray.dy)
            if dv >= 0:
                continue
            t = -h.value(ray.origin) / dv
            if best is None or t < best:
                best, exits = t, [h.line]
            elif t == best:
                exits.append(h.line)
        if best is None:
            return []
        if len(exits) > 1:
            return self._scan(ray, self.positions(bits))
        return self._from_line(ray, exits[0], back, bits)

    def _from_line(
        self, ray: Ray, ln: Line, back: dict[tuple[int, int, int], int], bits: int
    ) -> list[Candidate]:
        pos = back.get(ln.key())
        if pos is None:
            raise InvariantViolation("face edge is not a stored supporting line", ln)
        t = ray_hit_parameter(ray, self.segments[pos])
        if t is None:
            return self._scan(ray, self.positions(bits))
        return [Candidate(t, self.segments[pos].id)]


class RayShootIndex:
    """Segment store with first-hit structures.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(self, store: SegmentStore[RayLeafStructure]) -> None:
        self.store = store

    @property
    def n(self) -> int:
        return self.store.n

    def structure_hash(self) -> str:
        return self.store.structure_hash()

    def candidates_with_stats(self, ray: Ray) -> tuple[list[Candidate], QueryStats]:
        """Every candidate reported by a visited structure, in the sheared frame."""
        sr = self.store.shear.apply_ray(ray)
        found: list[Candidate] = []
        best: list[Fraction] = []
        stats = QueryStats()

        def meets(cell: ConvexRegion) -> bool:
            iv = cell.clip_parametric(sr.origin, sr.dx, sr.dy, None)
            return iv is not None and (not best or iv[0] <= best[0])

        def ask(rs: RayLeafStructure) -> bool:
            for c in rs.candidates(sr):
                found.append(c)
                if not best or c.t < best[0]:
                    best[:] = [c.t]
            return False

        self.store.visit(meets, ask, stats)
        return found, stats

    def shoot_with_stats(self, ray: Ray) -> tuple[Hit | None, QueryStats]:
        found, stats = self.candidates_with_stats(ray)
        if not found:
            return None, stats
        c = min(found)
        sr = self.store.shear.apply_ray(ray)
        p = self.store.shear.invert_point(sr.at(c.t))
        dd = ray.dx * ray.dx + ray.dy * ray.dy
        t = ((p.x - ray.origin.x) * ray.dx + (p.y - ray.origin.y) * ray.dy) / dd
        return Hit(c.segment, p, t), stats

    def shoot(self, ray: Ray) -> Hit | None:
        return self.shoot_with_stats(ray)[0]

    def audit_candidates(self, ray: Ray) -> list[InvariantViolation]:
        """Every candidate must be hit by the ray at its reported parameter."""
        sr = self.store.shear.apply_ray(ray)
        out = []
        for c in self.candidates_with_stats(ray)[0]:
            t = ray_hit_parameter(sr, self.store.segments[c.segment])
            if t != c.t:
                out.append(InvariantViolation("candidate segment is not hit by the ray", c))
        return out


def _touch_at_endpoint(s: Segment, u: Segment) -> bool:
    """Whether ``s`` and ``u`` meet in exactly one common endpoint."""
    for e, a in ((s.p, s.q), (s.q, s.p)):
        for f, b in ((u.p, u.q), (u.q, u.p)):
            if e.key() != f.key():
                continue
            if a.key() == b.key():
                return False
            ax, ay, bx, by = a.x - e.x, a.y - e.y, b.x - e.x, b.y - e.y
            if ax * by - ay * bx != 0:
                return True
            # collinear: they overlap unless they leave e in opposite directions
            return ax * bx + ay * by < 0
    return False


def check_disjoint(segments: Sequence[Segment], *, allow_shared_endpoints: bool = False) -> None:
    """Raise on the first intersecting pair in input order.

    With ``allow_shared_endpoints`` two segments may meet in one common
    endpoint, as long as they share no other point.

    Raises:
        IntersectingSegmentsError: If two segments share a point that is not allowed
    """
    for i in range(len(segments)):
        for j in range(i + 1, len(segments)):
            s, u = segments[i], segments[j]
            if not segments_intersect(s, u):
                continue
            if allow_shared_endpoints and _touch_at_endpoint(s, u):
                continue
            raise IntersectingSegmentsError(f"Segments {s.id} and {u.id} intersect")


def build_rayshoot(
    segments: Sequence[Segment],
    cfg: SegQueryConfig | None = None,
    *,
    allow_shared_endpoints: bool = False,
) -> RayShootIndex:
    """Build the ray shooting index over pairwise disjoint segments.

    A ray through a shared endpoint hits both segments at the same parameter;
    the smaller segment id is reported.

    Raises:
        IntersectingSegmentsError: If two segments share a point that is not allowed
    """
    check_disjoint(segments, allow_shared_endpoints=allow_shared_endpoints)
    store = build_segment_store(segments, cfg, structure=RayLeafStructure)
    logger.info("Built ray shooting index: n=%d", store.n)
    return RayShootIndex(store)


def shoot(idx: RayShootIndex, ray: Ray) -> Hit | None:
    return idx.shoot(ray)
