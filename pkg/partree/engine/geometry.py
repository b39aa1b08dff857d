"""Exact planar primitives, predicates and the point/line duality.

All coordinates are ``fractions.Fraction`` values; no predicate ever rounds, so
every answer is reproducible bit for bit. Lines are stored with canonical
integer coefficients (gcd 1, first nonzero coefficient positive) so that two
value-equal lines compare and hash identically.

Convex regions are kept in two forms at once:

* H-representation: a tuple of closed halfplanes ``flag * (a*x + b*y + c) >= 0``.
* V-representation: a finite point set plus a finite set of recession
  directions, so that region = conv(points) + cone(rays). Unbounded cells
  (the plane, halfplanes, strips, wedges) are handled through the rays, which
  play the role of points at infinity.

Sign conventions:
    ``side(ln, p)`` is the sign of ``a*px + b*py + c``. For non-vertical lines
    ``above(ln, p)`` is the sign of ``py - ln.y_at(px)``. The duality maps
    point (a, b) to line y = a*x - b and non-vertical line y = m*x + c to
    point (m, -c); it preserves above/below in the form
    ``above(ln, p) == above(dualize_point(p), dualize_line(ln))``.

Thread Safety:
    Every object in this module is immutable after construction.
"""

from __future__ import annotations

import functools
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DegenerateTriangleError, ShearRequiredError

Scalar = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def as_scalar(value: int | str | Fraction) -> Fraction:
    """Coerce an int, a ``"num/den"`` string or a Fraction to a Scalar.

    Raises:
        TypeError: If value is a float or another unsupported type
        ValueError: If a string cannot be parsed as a rational
    """
    if isinstance(value, bool):
        raise TypeError("Scalar must be int, str or Fraction, got: bool")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Scalar must be int, str or Fraction, got: {type(value).__name__}")


def sign(value: Fraction | int) -> int:
    return (value > 0) - (value < 0)


def format_scalar(value: Fraction) -> str:
    """Render a Scalar as ``num`` or ``num/den``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ========== Primitives ==========


@dataclass(frozen=True, slots=True)
class Point:
    """A planar point with exact rational coordinates.

    Equality and hashing use the coordinates only; ``id`` is carried along
    for bookkeeping (dataset index, endpoint index, ...).
    """

    x: Fraction
    y: Fraction
    id: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.x, Fraction):
            object.__setattr__(self, "x", as_scalar(self.x))
        if not isinstance(self.y, Fraction):
            object.__setattr__(self, "y", as_scalar(self.y))

    def key(self) -> tuple[Fraction, Fraction]:
        return (self.x, self.y)

    def with_id(self, id: int) -> Point:
        return Point(self.x, self.y, id)

    def __repr__(self) -> str:
        return f"Point({format_scalar(self.x)}, {format_scalar(self.y)}, id={self.id})"


def _canonical_coeffs(a: Fraction, b: Fraction, c: Fraction) -> tuple[int, int, int]:
    den = math.lcm(a.denominator, b.denominator, c.denominator)
    ia, ib, ic = int(a * den), int(b * den), int(c * den)
    g = math.gcd(ia, ib, ic)
    ia, ib, ic = ia // g, ib // g, ic // g
    lead = ia if ia != 0 else ib
    if lead < 0:
        ia, ib, ic = -ia, -ib, -ic
    return ia, ib, ic


@dataclass(frozen=True, slots=True)
class Line:
    """The line ``a*x + b*y + c = 0`` with canonical integer coefficients.

    Build lines with :meth:`from_coeffs` or :meth:`through`; the raw
    constructor assumes the coefficients are already canonical.

    Raises:
        ValueError: If a and b are both zero
    """

    a: int
    b: int
    c: int
    id: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if self.a == 0 and self.b == 0:
            raise ValueError("Line must have (a, b) != (0, 0), got: (0, 0)")

    @classmethod
    def from_coeffs(
        cls,
        a: int | str | Fraction,
        b: int | str | Fraction,
        c: int | str | Fraction,
        id: int = -1,
    ) -> Line:
        fa, fb, fc = as_scalar(a), as_scalar(b), as_scalar(c)
        if fa == 0 and fb == 0:
            raise ValueError("Line must have (a, b) != (0, 0), got: (0, 0)")
        return cls(*_canonical_coeffs(fa, fb, fc), id=id)

    @classmethod
    def through(cls, p: Point, q: Point, id: int = -1) -> Line:
        """The line through two distinct points."""
        if p.key() == q.key():
            raise ValueError(f"Line.through needs two distinct points, got: {p!r} twice")
        a = q.y - p.y
        b = p.x - q.x
        c = -(a * p.x + b * p.y)
        return cls.from_coeffs(a, b, c, id=id)

    @classmethod
    def vertical(cls, x: Fraction, id: int = -1) -> Line:
        return cls.from_coeffs(ONE, ZERO, -x, id=id)

    def key(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def with_id(self, id: int) -> Line:
        return Line(self.a, self.b, self.c, id)

    @property
    def is_vertical(self) -> bool:
        return self.b == 0

    def value(self, p: Point) -> Fraction:
        return self.a * p.x + self.b * p.y + self.c

    def dot(self, dx: Fraction | int, dy: Fraction | int) -> Fraction | int:
        return self.a * dx + self.b * dy

    def y_at(self, x: Fraction) -> Fraction:
        if self.b == 0:
            raise ShearRequiredError("line evaluation")
        return Fraction(-(self.a * x + self.c)) / self.b

    def direction(self) -> tuple[int, int]:
        """A direction vector along the line."""
        return (-self.b, self.a)

    def __repr__(self) -> str:
        return f"Line({self.a}, {self.b}, {self.c}, id={self.id})"


@dataclass(frozen=True, slots=True)
class Segment:
    """A closed segment with ``p`` lexicographically before ``q``.

    Raises:
        ValueError: If p and q coincide
    """

    p: Point
    q: Point
    id: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if self.p.key() == self.q.key():
            raise ValueError(f"Segment endpoints must differ, got: {self.p!r} twice")
        if self.q.key() < self.p.key():
            p, q = self.q, self.p
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", q)

    def supporting_line(self) -> Line:
        return Line.through(self.p, self.q, id=self.id)

    def contains(self, r: Point) -> bool:
        if orient(self.p, self.q, r) != 0:
            return False
        return _in_box(self.p, self.q, r)


@dataclass(frozen=True, slots=True)
class Ray:
    """A ray ``origin + t * (dx, dy)`` for ``t >= 0``; the direction is primitive."""

    origin: Point
    dx: int
    dy: int

    def __post_init__(self) -> None:
        if not isinstance(self.dx, int) or not isinstance(self.dy, int):
            raise TypeError(
                f"Ray direction must be integers, got: ({self.dx!r}, {self.dy!r})"
            )
        if self.dx == 0 and self.dy == 0:
            raise ValueError("Ray direction must be nonzero, got: (0, 0)")
        g = math.gcd(self.dx, self.dy)
        if g != 1:
            object.__setattr__(self, "dx", self.dx // g)
            object.__setattr__(self, "dy", self.dy // g)

    @classmethod
    def from_direction(cls, origin: Point, dx: Fraction | int, dy: Fraction | int) -> Ray:
        """Scale a rational direction to a primitive integer vector."""
        fx, fy = as_scalar(dx), as_scalar(dy)
        den = math.lcm(fx.denominator, fy.denominator)
        return cls(origin, int(fx * den), int(fy * den))

    def at(self, t: Fraction) -> Point:
        return Point(self.origin.x + t * self.dx, self.origin.y + t * self.dy)

    def supporting_line(self) -> Line:
        o = self.origin
        return Line.through(o, Point(o.x + self.dx, o.y + self.dy))


# ========== Predicates ==========


def orient(p: Point, q: Point, r: Point) -> int:
    """Sign of the cross product (q - p) x (r - p)."""
    return sign((q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x))


def side(ln: Line, p: Point) -> int:
    """Sign of ``a*px + b*py + c``."""
    return sign(ln.value(p))


def above(ln: Line, p: Point) -> int:
    """+1 if p is strictly above the non-vertical line, -1 below, 0 on it."""
    if ln.b == 0:
        raise ShearRequiredError("line in an above/below test")
    return sign(ln.value(p)) * (1 if ln.b > 0 else -1)


def intersect_lines(l1: Line, l2: Line) -> Point | None:
    """Intersection point of two lines, or None when parallel or equal."""
    det = l1.a * l2.b - l2.a * l1.b
    if det == 0:
        return None
    x = Fraction(l1.b * l2.c - l2.b * l1.c, det)
    y = Fraction(l2.a * l1.c - l1.a * l2.c, det)
    return Point(x, y)


def _in_box(p: Point, q: Point, r: Point) -> bool:
    return min(p.x, q.x) <= r.x <= max(p.x, q.x) and min(p.y, q.y) <= r.y <= max(p.y, q.y)


def segments_intersect(s: Segment, t: Segment) -> bool:
    """Closed segment intersection, collinear overlap included."""
    o1 = orient(s.p, s.q, t.p)
    o2 = orient(s.p, s.q, t.q)
    o3 = orient(t.p, t.q, s.p)
    o4 = orient(t.p, t.q, s.q)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _in_box(s.p, s.q, t.p):
        return True
    if o2 == 0 and _in_box(s.p, s.q, t.q):
        return True
    if o3 == 0 and _in_box(t.p, t.q, s.p):
        return True
    if o4 == 0 and _in_box(t.p, t.q, s.q):
        return True
    return False


def line_meets_segment(ln: Line, s: Segment) -> bool:
    return side(ln, s.p) * side(ln, s.q) <= 0


def ray_hit_parameter(ray: Ray, s: Segment) -> Fraction | None:
    """Smallest t >= 0 with ``ray.at(t)`` on the closed segment, or None.

    A ray collinear with the segment hits it at the nearest point of the
    overlap (the origin itself when the origin lies on the segment).
    """
    ox, oy = ray.origin.x, ray.origin.y
    ex, ey = s.q.x - s.p.x, s.q.y - s.p.y
    wx, wy = s.p.x - ox, s.p.y - oy
    denom = ray.dx * ey - ray.dy * ex
    if denom != 0:
        t = (wx * ey - wy * ex) / denom
        u = (wx * ray.dy - wy * ray.dx) / denom
        if t >= 0 and 0 <= u <= 1:
            return t
        return None
    if wx * ray.dy - wy * ray.dx != 0:
        return None
    dd = ray.dx * ray.dx + ray.dy * ray.dy
    tp = (wx * ray.dx + wy * ray.dy) / dd
    tq = ((s.q.x - ox) * ray.dx + (s.q.y - oy) * ray.dy) / dd
    lo, hi = min(tp, tq), max(tp, tq)
    if hi < 0:
        return None
    return max(ZERO, lo)


# ========== Duality ==========


def dualize_point(p: Point) -> Line:
    """Point (a, b) to the line y = a*x - b."""
    return Line.from_coeffs(p.x, -1, -p.y, id=p.id)


def dualize_line(ln: Line) -> Point:
    """Non-vertical line y = m*x + c to the point (m, -c).

    Raises:
        ShearRequiredError: If the line is vertical
    """
    if ln.b == 0:
        raise ShearRequiredError()
    return Point(Fraction(-ln.a, ln.b), Fraction(ln.c, ln.b), id=ln.id)


# ========== Convex regions ==========


@dataclass(frozen=True, slots=True)
class HalfPlane:
    """The closed halfplane ``flag * (a*x + b*y + c) >= 0``."""

    line: Line
    flag: int

    def __post_init__(self) -> None:
        if self.flag not in (1, -1):
            raise ValueError(f"HalfPlane flag must be +1 or -1, got: {self.flag!r}")

    @classmethod
    def from_coeffs(
        cls, a: int | str | Fraction, b: int | str | Fraction, c: int | str | Fraction
    ) -> HalfPlane:
        """The halfplane ``a*x + b*y + c >= 0``, whatever sign canonicalization picks."""
        ln = Line.from_coeffs(a, b, c)
        fa, fb = as_scalar(a), as_scalar(b)
        lead, raw = (ln.a, fa) if ln.a != 0 else (ln.b, fb)
        return cls(ln, sign(lead) * sign(raw))

    def value(self, p: Point) -> Fraction:
        return self.flag * self.line.value(p)

    def dot(self, dx: Fraction | int, dy: Fraction | int) -> Fraction | int:
        return self.flag * self.line.dot(dx, dy)

    def key(self) -> tuple[int, int, int, int]:
        return (self.line.a, self.line.b, self.line.c, self.flag)


Direction = tuple[int, int]

INSIDE = 1
OUTSIDE = -1
PARTIAL = 0


def _primitive(dx: int, dy: int) -> Direction:
    g = math.gcd(dx, dy)
    return (dx // g, dy // g)


def _angle_half(dx: Fraction | int, dy: Fraction | int) -> int:
    return 0 if dy > 0 or (dy == 0 and dx > 0) else 1


def _ccw_compare(u: tuple[Fraction, Fraction], v: tuple[Fraction, Fraction]) -> int:
    hu, hv = _angle_half(*u), _angle_half(*v)
    if hu != hv:
        return hu - hv
    return -sign(u[0] * v[1] - u[1] * v[0])


class ConvexRegion:
    """A closed convex region given by halfplanes, with a derived V-representation.

    ``points`` contains the region's vertices (or, for regions without a
    vertex, one point on each boundary line; the origin for the plane).
    ``rays`` generates the recession cone. An empty ``points`` list means the
    region is empty.
    """

    __slots__ = ("halfplanes", "points", "rays", "id")

    def __init__(self, halfplanes: Iterable[HalfPlane] = (), id: int = -1) -> None:
        hs: dict[tuple[int, int, int, int], HalfPlane] = {}
        for h in halfplanes:
            hs.setdefault(h.key(), h)
        self.halfplanes: tuple[HalfPlane, ...] = tuple(hs[k] for k in sorted(hs))
        self.id = id
        self.points, self.rays = self._vrep()

    def _feasible(self, p: Point) -> bool:
        return all(h.value(p) >= 0 for h in self.halfplanes)

    def _vrep(self) -> tuple[tuple[Point, ...], tuple[Direction, ...]]:
        hs = self.halfplanes
        if not hs:
            return (Point(ZERO, ZERO),), ((1, 0), (-1, 0), (0, 1), (0, -1))
        seen: dict[tuple[Fraction, Fraction], Point] = {}
        for i in range(len(hs)):
            for j in range(i + 1, len(hs)):
                p = intersect_lines(hs[i].line, hs[j].line)
                if p is not None and p.key() not in seen and self._feasible(p):
                    seen[p.key()] = p
        if not seen:
            for h in hs:
                ln = h.line
                n2 = ln.a * ln.a + ln.b * ln.b
                p = Point(Fraction(-ln.a * ln.c, n2), Fraction(-ln.b * ln.c, n2))
                if p.key() not in seen and self._feasible(p):
                    seen[p.key()] = p
        rays: dict[Direction, None] = {}
        for h in hs:
            a, b = h.line.a, h.line.b
            for d in ((-b, a), (b, -a), (h.flag * a, h.flag * b)):
                d = _primitive(*d)
                if d not in rays and all(g.dot(*d) >= 0 for g in hs):
                    rays[d] = None
        points = tuple(seen[k] for k in sorted(seen))
        return points, tuple(sorted(rays))

    # --- basic properties ---

    @property
    def bounded(self) -> bool:
        return bool(self.points) and not self.rays

    def interior_witness(self) -> Point | None:
        """A point strictly inside the region, or None if the interior is empty."""
        if not self.points:
            return None
        n = len(self.points)
        x = sum((p.x for p in self.points), ZERO) / n
        y = sum((p.y for p in self.points), ZERO) / n
        x += sum(d[0] for d in self.rays)
        y += sum(d[1] for d in self.rays)
        w = Point(x, y)
        if all(h.value(w) > 0 for h in self.halfplanes):
            return w
        return None

    @property
    def has_interior(self) -> bool:
        return self.interior_witness() is not None

    def contains_point(self, p: Point) -> bool:
        return self._feasible(p)

    def contains_segment(self, s: Segment) -> bool:
        return self._feasible(s.p) and self._feasible(s.q)

    # --- line predicates ---

    def _signs(self, ln: Line) -> tuple[bool, bool, bool, bool]:
        """(some value > 0, some value < 0, some value >= 0, some value <= 0)."""
        pos = neg = nonneg = nonpos = False
        for p in self.points:
            v = ln.value(p)
            if v > 0:
                pos = nonneg = True
            elif v < 0:
                neg = nonpos = True
            else:
                nonneg = nonpos = True
        for d in self.rays:
            v = ln.dot(*d)
            if v > 0:
                pos = nonneg = True
            elif v < 0:
                neg = nonpos = True
        return pos, neg, nonneg, nonpos

    def crosses(self, ln: Line) -> bool:
        """True iff ``ln`` meets the interior without containing the region."""
        pos, neg, _, _ = self._signs(ln)
        return pos and neg

    def meets(self, ln: Line) -> bool:
        """True iff ``ln`` intersects the closed region."""
        _, _, nonneg, nonpos = self._signs(ln)
        return nonneg and nonpos

    def classify(self, h: HalfPlane) -> int:
        """INSIDE if the region lies in ``h``, OUTSIDE if it misses ``h``, else PARTIAL."""
        all_in = True
        all_out = True
        for p in self.points:
            v = h.value(p)
            if v < 0:
                all_in = False
            else:
                all_out = False
        for d in self.rays:
            v = h.dot(*d)
            if v < 0:
                all_in = False
            elif v > 0:
                all_out = False
        if all_in:
            return INSIDE
        if all_out:
            return OUTSIDE
        return PARTIAL

    # --- clipping ---

    def clip_parametric(
        self, origin: Point, dx: Fraction | int, dy: Fraction | int, t_max: Fraction | None
    ) -> tuple[Fraction, Fraction | None] | None:
        """Parameter interval of ``origin + t*(dx, dy)``, ``0 <= t <= t_max``, inside."""
        lo: Fraction = ZERO
        hi = t_max
        for h in self.halfplanes:
            v0 = h.value(origin)
            dv = h.dot(dx, dy)
            if dv == 0:
                if v0 < 0:
                    return None
                continue
            t = -v0 / dv
            if dv > 0:
                lo = max(lo, t)
            elif hi is None or t < hi:
                hi = t
        if hi is not None and lo > hi:
            return None
        return lo, hi

    def meets_segment(self, s: Segment) -> bool:
        return (
            self.clip_parametric(s.p, s.q.x - s.p.x, s.q.y - s.p.y, ONE) is not None
        )

    def meets_ray(self, ray: Ray) -> bool:
        return self.clip_parametric(ray.origin, ray.dx, ray.dy, None) is not None

    def edge_meets_segment(self, index: int, s: Segment) -> bool:
        """True iff ``s`` meets the boundary piece supported by halfplane ``index``."""
        h = self.halfplanes[index]
        vp, vq = h.line.value(s.p), h.line.value(s.q)
        if vp == 0 and vq == 0:
            return self.meets_segment(s)
        if sign(vp) * sign(vq) > 0:
            return False
        t = vp / (vp - vq)
        hit = Point(s.p.x + t * (s.q.x - s.p.x), s.p.y + t * (s.q.y - s.p.y))
        return self._feasible(hit)

    # --- splitting ---

    def with_halfplane(self, h: HalfPlane) -> ConvexRegion:
        return ConvexRegion((*self.halfplanes, h), id=self.id)

    def reduced(self) -> ConvexRegion:
        """Drop halfplanes that do not support an edge."""
        keep = []
        for h in self.halfplanes:
            on_points = sum(1 for p in self.points if h.value(p) == 0)
            on_rays = any(h.dot(*d) == 0 for d in self.rays)
            if on_points >= 2 or (on_points >= 1 and on_rays):
                keep.append(h)
        if len(keep) == len(self.halfplanes):
            return self
        return ConvexRegion(keep, id=self.id)

    def split(self, ln: Line) -> tuple[ConvexRegion | None, ConvexRegion | None]:
        """The two closed pieces on the non-negative and non-positive side of ``ln``."""
        out: list[ConvexRegion | None] = []
        for flag in (1, -1):
            piece = self.with_halfplane(HalfPlane(ln, flag))
            out.append(piece.reduced() if piece.has_interior else None)
        return out[0], out[1]

    def vertices_ccw(self) -> list[Point]:
        """Vertices in counterclockwise order (chain order for unbounded regions)."""
        pts = [p for p in self.points if self._is_vertex(p)]
        if len(pts) <= 1:
            return pts
        if not self.rays:
            cx = sum((p.x for p in pts), ZERO) / len(pts)
            cy = sum((p.y for p in pts), ZERO) / len(pts)
            return sorted(
                pts,
                key=functools.cmp_to_key(
                    lambda p, q: _ccw_compare((p.x - cx, p.y - cy), (q.x - cx, q.y - cy))
                ),
            )
        ux = sum(d[0] for d in self.rays)
        uy = sum(d[1] for d in self.rays)
        # the boundary chain is a graph over the axis orthogonal to the cone bisector
        return sorted(pts, key=lambda p: -uy * p.x + ux * p.y)

    def _is_vertex(self, p: Point) -> bool:
        lines = {h.line.key() for h in self.halfplanes if h.value(p) == 0}
        return len(lines) >= 2

    def decompose(self) -> list[ConvexRegion]:
        """Split into regions bounded by at most three halfplanes each.

        Bounded polygons are fan-triangulated from their lexicographically
        smallest vertex; unbounded ones split off the bounded hull of their
        vertex chain and keep a three-sided unbounded remainder.
        """
        region = self.reduced()
        if len(region.halfplanes) <= 3:
            return [region]
        chain = region.vertices_ccw()
        if not region.rays:
            return _fan(chain)
        pieces = _fan(chain) if len(chain) >= 3 else []
        first, last = chain[0], chain[-1]
        chord = Line.through(first, last)
        flag = -side(chord, chain[1])
        rest = region.with_halfplane(HalfPlane(chord, flag)).reduced()
        pieces.append(rest)
        return pieces

    def area(self) -> Fraction:
        if not self.bounded:
            raise ValueError("area is only defined for bounded regions")
        vs = self.vertices_ccw()
        total = ZERO
        for i, p in enumerate(vs):
            q = vs[(i + 1) % len(vs)]
            total += p.x * q.y - q.x * p.y
        return total / 2

    def canonical(self) -> list[list[int]]:
        return [list(h.key()) for h in self.halfplanes]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(id={self.id}, halfplanes={len(self.halfplanes)})"


def triangle_halfplanes(a: Point, b: Point, c: Point) -> list[HalfPlane]:
    """Inward halfplanes of a proper triangle."""
    hs = []
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        ln = Line.through(p, q)
        hs.append(HalfPlane(ln, side(ln, r)))
    return hs


def _fan(chain: Sequence[Point]) -> list[ConvexRegion]:
    """Fan triangulation of a convex polygon from its smallest vertex."""
    start = min(range(len(chain)), key=lambda i: chain[i].key())
    ring = list(chain[start:]) + list(chain[:start])
    return [
        ConvexRegion(triangle_halfplanes(ring[0], ring[i], ring[i + 1]))
        for i in range(1, len(ring) - 1)
    ]


class SimplexCell(ConvexRegion):
    """A cell with nonempty interior bounded by at most three halfplanes.

    Raises:
        ValueError: If there are more than three halfplanes or the interior is empty
    """

    __slots__ = ()

    def __init__(self, halfplanes: Iterable[HalfPlane] = (), id: int = -1) -> None:
        super().__init__(halfplanes, id=id)
        if len(self.halfplanes) > 3:
            raise ValueError(
                f"SimplexCell must have at most 3 halfplanes, got: {len(self.halfplanes)}"
            )
        if not self.has_interior:
            raise ValueError("SimplexCell must have a nonempty interior")

    @classmethod
    def plane(cls, id: int = 0) -> SimplexCell:
        return cls((), id=id)

    @classmethod
    def triangle(cls, a: Point, b: Point, c: Point, id: int = -1) -> SimplexCell:
        if orient(a, b, c) == 0:
            raise ValueError(f"SimplexCell.triangle needs a proper triangle, got: {a, b, c}")
        return cls(triangle_halfplanes(a, b, c), id=id)

    @classmethod
    def from_region(cls, region: ConvexRegion, id: int = -1) -> SimplexCell:
        return cls(region.reduced().halfplanes, id=id)

    @property
    def vertices(self) -> list[Point]:
        return self.vertices_ccw() if self.bounded else []

    def with_id(self, id: int) -> SimplexCell:
        return SimplexCell(self.halfplanes, id=id)


@dataclass(frozen=True, slots=True)
class Triangle:
    """A closed triangle; ``constraints()`` orders its sides canonically.

    Raises:
        DegenerateTriangleError: If the corners are collinear
    """

    a: Point
    b: Point
    c: Point
    id: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if orient(self.a, self.b, self.c) == 0:
            raise DegenerateTriangleError(f"Triangle {self.id} has zero area")

    def constraints(self) -> tuple[HalfPlane, HalfPlane, HalfPlane]:
        hs = sorted(triangle_halfplanes(self.a, self.b, self.c), key=lambda h: h.line.key())
        return (hs[0], hs[1], hs[2])

    def contains(self, q: Point) -> bool:
        o1 = orient(self.a, self.b, q)
        o2 = orient(self.b, self.c, q)
        o3 = orient(self.c, self.a, q)
        return (o1 >= 0 and o2 >= 0 and o3 >= 0) or (o1 <= 0 and o2 <= 0 and o3 <= 0)


def crosses(ln: Line, cell: ConvexRegion) -> bool:
    """True iff the line meets the cell's interior and does not contain the cell."""
    return cell.crosses(ln)


# ========== Shear ==========


@dataclass(frozen=True)
class ShearTransform:
    """The map (x, y) -> (x + theta*y, y)."""

    theta: Fraction = ZERO

    def __post_init__(self) -> None:
        if not isinstance(self.theta, Fraction):
            object.__setattr__(self, "theta", as_scalar(self.theta))

    def apply_point(self, p: Point) -> Point:
        return Point(p.x + self.theta * p.y, p.y, p.id)

    def invert_point(self, p: Point) -> Point:
        return Point(p.x - self.theta * p.y, p.y, p.id)

    def apply_line(self, ln: Line) -> Line:
        return Line.from_coeffs(ln.a, ln.b - ln.a * self.theta, ln.c, id=ln.id)

    def apply_halfplane(self, h: HalfPlane) -> HalfPlane:
        # the map only rescales coefficients by a positive factor, so flags carry over
        return HalfPlane(self.apply_line(h.line), h.flag)

    def apply_segment(self, s: Segment) -> Segment:
        return Segment(self.apply_point(s.p), self.apply_point(s.q), s.id)

    def apply_ray(self, ray: Ray) -> Ray:
        return Ray.from_direction(
            self.apply_point(ray.origin), ray.dx + self.theta * ray.dy, ray.dy
        )

    def validates(self, points: Iterable[Point], lines: Iterable[Line]) -> bool:
        for ln in lines:
            if ln.b - ln.a * self.theta == 0:
                return False
        locations = {p.key() for p in points}
        xs = {x + self.theta * y for x, y in locations}
        return len(xs) == len(locations)


def shear_candidates() -> Iterable[Fraction]:
    """0, 1, 1/2, 1/3, ..."""
    yield ZERO
    k = 1
    while True:
        yield Fraction(1, k)
        k += 1


def choose_shear(points: Iterable[Point], lines: Iterable[Line] = ()) -> ShearTransform:
    """First shear in the fixed enumeration that validates the input.

    Only finitely many candidates can fail (each vertical line or coincident
    x-coordinate pair rules out at most one theta), so the search terminates.
    """
    pts = list(points)
    lns = list(lines)
    for theta in shear_candidates():
        shear = ShearTransform(theta)
        if shear.validates(pts, lns):
            return shear
    raise AssertionError("unreachable")
