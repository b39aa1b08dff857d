"""Deterministic dataset and query generation.

All randomness comes from :class:`SplitMix64`, a fixed 64-bit mixing
recurrence, so a ``(family, n, seed)`` triple always yields the same bytes.
Coordinates are quarter-integers on the grid ``[0, 256)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from fractions import Fraction

from .geometry import Point, Ray, Segment, Triangle, orient, segments_intersect
from .persistence import Dataset, Query

logger = logging.getLogger("partree.datagen")

FAMILIES = ("uniform", "clustered", "grid", "collinear")
GRID = 1024
DENOMINATOR = 4

_MASK = (1 << 64) - 1


class SplitMix64:
    """The SplitMix64 generator; ``below`` reduces by modulo."""

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError(f"bound must be positive, got: {bound}")
        return self.next() % bound

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)


def _q(v: int) -> Fraction:
    return Fraction(v, DENOMINATOR)


def _family_sampler(family: str, n: int, rng: SplitMix64) -> Callable[[], tuple[int, int]]:
    if family == "uniform":
        return lambda: (rng.below(GRID), rng.below(GRID))
    if family == "clustered":
        centers = [
            (rng.between(64, GRID - 65), rng.between(64, GRID - 65))
            for _ in range(max(1, n // 16))
        ]

        def clustered() -> tuple[int, int]:
            cx, cy = centers[rng.below(len(centers))]
            return cx + rng.between(-48, 48), cy + rng.between(-48, 48)

        return clustered
    if family == "grid":
        side = 1
        while side * side < n:
            side += 1
        step = max(1, GRID // (side + 1))
        return lambda: (step * rng.between(1, side), step * rng.between(1, side))
    if family == "collinear":
        # two slanted lines, one horizontal and one vertical
        def collinear() -> tuple[int, int]:
            k = rng.below(4)
            t = rng.below(GRID // 2)
            if k == 0:
                return t + 64, t + 32
            if k == 1:
                return 2 * t, GRID - 1 - t
            if k == 2:
                return rng.below(GRID), 512
            return 300, rng.below(GRID)

        return collinear
    raise ValueError(f"family must be one of {FAMILIES}, got: {family!r}")


def generate_points(family: str, n: int, seed: int) -> list[Point]:
    """``n`` distinct points of the family; ids 0..n-1 in generation order.

    Raises:
        ValueError: If the family is unknown or cannot supply n distinct points
    """
    rng = SplitMix64(seed)
    sample = _family_sampler(family, n, rng)
    seen: set[tuple[int, int]] = set()
    out: list[Point] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 64 * n + 1024:
            raise ValueError(f"family {family!r} cannot supply {n} distinct points")
        xy = sample()
        if xy in seen:
            continue
        seen.add(xy)
        out.append(Point(_q(xy[0]), _q(xy[1]), id=len(out)))
    return out


def generate_segments(family: str, n: int, seed: int, *, disjoint: bool = True) -> list[Segment]:
    """Short segments anchored at family points; rejection keeps them pairwise disjoint.

    Raises:
        ValueError: If the family is unknown or n segments cannot be placed
    """
    rng = SplitMix64(seed ^ 0x5E6)
    sample = _family_sampler(family, n, rng)
    reach = max(8, GRID // (2 * max(1, math.isqrt(n))))
    out: list[Segment] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 256 * n + 1024:
            raise ValueError(f"cannot place {n} disjoint segments for family {family!r}")
        x, y = sample()
        dx, dy = rng.between(-reach, reach), rng.between(-reach, reach)
        if dx == 0 and dy == 0:
            continue
        s = Segment(Point(_q(x), _q(y)), Point(_q(x + dx), _q(y + dy)), id=len(out))
        if disjoint and any(segments_intersect(s, t) for t in out):
            continue
        out.append(s)
    return out


def generate_triangles(family: str, n: int, seed: int) -> list[Triangle]:
    """Triangles with one corner at a family point and two nearby corners."""
    rng = SplitMix64(seed ^ 0x7A1)
    sample = _family_sampler(family, n, rng)
    out: list[Triangle] = []
    while len(out) < n:
        x, y = sample()
        a = Point(_q(x), _q(y))
        b = Point(_q(x + rng.between(-256, 256)), _q(y + rng.between(-256, 256)))
        c = Point(_q(x + rng.between(-256, 256)), _q(y + rng.between(-256, 256)))
        if orient(a, b, c) == 0:
            continue
        out.append(Triangle(a, b, c, id=len(out)))
    return out


def generate_dataset(family: str, n: int, seed: int, kinds: str = "PST") -> Dataset:
    """Points, disjoint segments and triangles of one family, as selected by ``kinds``."""
    ds = Dataset()
    if "P" in kinds:
        ds.points = generate_points(family, n, seed)
    if "S" in kinds:
        ds.segments = generate_segments(family, n, seed)
    if "T" in kinds:
        ds.triangles = generate_triangles(family, n, seed)
    logger.info(
        "Generated %s dataset: %d points, %d segments, %d triangles",
        family,
        len(ds.points),
        len(ds.segments),
        len(ds.triangles),
    )
    return ds


def generate_queries(kind: str, count: int, seed: int) -> list[Query]:
    """``count`` queries of one record kind (``T H Q L G R``) over the grid.

    Raises:
        ValueError: If kind is not a query record tag
    """
    rng = SplitMix64(seed ^ 0x0B5)
    out: list[Query] = []

    def coord() -> Fraction:
        return _q(rng.between(-64, GRID + 64))

    while len(out) < count:
        qid = len(out)
        if kind == "T":
            a, b, c = (Point(coord(), coord()) for _ in range(3))
            if orient(a, b, c) == 0:
                continue
            out.append(Query(qid, "T", (a.x, a.y, b.x, b.y, c.x, c.y)))
        elif kind == "H":
            a, b = rng.between(-8, 8), rng.between(-8, 8)
            if a == 0 and b == 0:
                continue
            c = -(a * coord() + b * coord())
            out.append(Query(qid, "H", (Fraction(a), Fraction(b), c, Fraction(1))))
        elif kind == "Q":
            out.append(Query(qid, "Q", (coord(), coord())))
        elif kind == "L":
            a, b = rng.between(-8, 8), rng.between(-8, 8)
            if a == 0 and b == 0:
                continue
            out.append(Query(qid, "L", (Fraction(a), Fraction(b), -(a * coord() + b * coord()))))
        elif kind == "G":
            p, q = Point(coord(), coord()), Point(coord(), coord())
            if p.key() == q.key():
                continue
            out.append(Query(qid, "G", (p.x, p.y, q.x, q.y)))
        elif kind == "R":
            dx, dy = rng.between(-16, 16), rng.between(-16, 16)
            if dx == 0 and dy == 0:
                continue
            ray = Ray.from_direction(Point(coord(), coord()), dx, dy)
            out.append(
                Query(qid, "R", (ray.origin.x, ray.origin.y, Fraction(ray.dx), Fraction(ray.dy)))
            )
        else:
            raise ValueError(f"kind must be one of T H Q L G R, got: {kind!r}")
    return out
