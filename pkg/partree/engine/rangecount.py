"""Triangle range counting on a two-stage partition tree.

The points are sheared once so that no two share an x-coordinate. A stage-1
tree with ``r`` leaves is built over all points; every stage-1 leaf holding
more than ``t_leaf`` points gets its own stage-2 tree, rooted at the leaf's
cell and fine enough that each final leaf holds at most ``t_leaf`` points.
Each final leaf carries a :class:`LeafCountStructure`.

A query region is an intersection of closed halfplanes (a triangle, a wedge,
a halfplane, or the hull of a degenerate triangle). The descent adds the
stored count of every cell inside the region, skips cells outside it, and
recurses into crossed cells; crossed final leaves are answered in the dual.

Leaf structure:
    Each leaf point ``p`` becomes the dual line ``p*``. A query constraint
    "on or above line l" holds for ``p`` iff ``p*`` passes below or through
    the dual point ``l*``. Locating ``l*`` in the arrangement of the leaf's
    dual lines gives the set of satisfying points as a face mask; a second
    and third constraint are located in arrangements built over that subset,
    nested three levels deep.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType

from .arrangement import Arrangement, build_arrangement
from .geometry import (
    INSIDE,
    OUTSIDE,
    HalfPlane,
    Line,
    Point,
    ShearTransform,
    SimplexCell,
    above,
    choose_shear,
    dualize_line,
    dualize_point,
    orient,
    sign,
    triangle_halfplanes,
)
from .refine import RefineConfig
from .tree import PartitionTree, QueryStats, TreeCell, build_tree, collapse_duplicates

logger = logging.getLogger("partree.rangecount")


@dataclass(frozen=True)
class RangeCountConfig:
    """Stage parameters; ``None`` picks the size-dependent default."""

    r: int | None = None
    r1: int | None = None
    t_leaf: int = 8
    refine: RefineConfig = field(default_factory=RefineConfig)

    def __post_init__(self) -> None:
        if self.t_leaf < 2:
            raise ValueError(f"t_leaf must be >= 2, got: {self.t_leaf}")
        if self.r is not None and self.r < 1:
            raise ValueError(f"r must be >= 1, got: {self.r}")
        if self.r1 is not None and self.r1 < 1:
            raise ValueError(f"r1 must be >= 1, got: {self.r1}")


# ========== Leaf structure ==========


@dataclass(frozen=True)
class DualConstraint:
    """Keep points on or above (``side=+1``) or below (``-1``) the primal line of ``point``."""

    point: Point
    side: int


def constraint_from_halfplane(h: HalfPlane) -> DualConstraint | None:
    """The dual form of ``h``, or None when its line is vertical."""
    if h.line.is_vertical:
        return None
    return DualConstraint(dualize_line(h.line), sign(h.flag * h.line.b))


class _DualLevel:
    __slots__ = ("arrangement", "below", "above")

    def __init__(self, arrangement: Arrangement, below: list[int], above: list[int]) -> None:
        self.arrangement = arrangement
        self.below = below
        self.above = above


class LeafCountStructure:
    """Nested dual arrangements over at most ``t_leaf`` points.

    Every level a query can reach is built up front: the top arrangement
    over all dual lines, then one arrangement per nonempty face subset, down
    to ``depth`` levels. Levels are keyed by the subset mask alone since the
    arrangement of a subset does not depend on how it was reached.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(self, points: Sequence[Point], depth: int = 3) -> None:
        groups: dict[tuple[int, int, int], list[int]] = {}
        for p in points:
            groups.setdefault(dualize_point(p).key(), []).append(p.id)
        keys = sorted(groups)
        self.lines: tuple[Line, ...] = tuple(Line(*k, id=i) for i, k in enumerate(keys))
        self.point_ids: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(groups[k])) for k in keys
        )
        self.depth = depth
        self.size = len(points)
        full = (1 << len(self.lines)) - 1
        self.root = self._build_level(full)
        levels = {full: self.root}
        frontier = [full]
        for _ in range(depth - 1):
            reached: set[int] = set()
            for mask in frontier:
                level = levels[mask]
                reached.update(m for m in (*level.below, *level.above) if m)
            frontier = sorted(reached)
            for mask in frontier:
                if mask not in levels:
                    levels[mask] = self._build_level(mask)
        self.levels: Mapping[int, _DualLevel] = MappingProxyType(levels)

    def _build_level(self, mask: int) -> _DualLevel:
        members = [i for i in range(len(self.lines)) if (mask >> i) & 1]
        arr = build_arrangement([self.lines[i] for i in members])

        def to_global(local: int) -> int:
            out = 0
            for j in range(len(arr.lines)):
                if (local >> j) & 1:
                    out |= 1 << members[arr.members[j][0]]
            return out

        below = [to_global(m) for m in arr.face_masks]
        return _DualLevel(arr, below, [mask & ~b for b in below])

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def weight(self, mask: int) -> int:
        total = 0
        while mask:
            low = mask & -mask
            total += len(self.point_ids[low.bit_length() - 1])
            mask ^= low
        return total

    def ids(self, mask: int) -> list[int]:
        out: list[int] = []
        while mask:
            low = mask & -mask
            out.extend(self.point_ids[low.bit_length() - 1])
            mask ^= low
        return sorted(out)

    def _scan(self, mask: int, constraints: Sequence[DualConstraint]) -> int:
        total = 0
        for i in range(len(self.lines)):
            if (mask >> i) & 1 and all(
                c.side * above(self.lines[i], c.point) >= 0 for c in constraints
            ):
                total += len(self.point_ids[i])
        return total

    def count(self, constraints: Sequence[DualConstraint]) -> int:
        """Number of leaf points satisfying every constraint.

        Raises:
            ValueError: If more constraints are given than the nesting depth
        """
        if len(constraints) > self.depth:
            raise ValueError(
                f"LeafCountStructure answers at most {self.depth} constraints, "
                f"got: {len(constraints)}"
            )
        mask = (1 << len(self.lines)) - 1
        level = self.root
        for i, c in enumerate(constraints):
            if i > 0:
                level = self.levels[mask]
            loc = level.arrangement.locate_all(c.point)
            if not loc.generic:
                # lines through the dual point satisfy the closed constraint
                sub = 0
                for f in loc.faces:
                    sub |= level.below[f] if c.side > 0 else level.above[f]
                return self._scan(sub, constraints[i + 1 :])
            mask = level.below[loc.face] if c.side > 0 else level.above[loc.face]
            if not mask:
                return 0
        return self.weight(mask)


def leaf_count(ls: LeafCountStructure, constraints: Sequence[DualConstraint]) -> int:
    return ls.count(constraints)


# ========== Index ==========


@dataclass(frozen=True)
class _Node:
    cell: SimplexCell
    points: tuple[int, ...]
    children: tuple[_Node, ...] = ()
    leaf: LeafCountStructure | None = field(default=None, compare=False)


def query_halfplanes(a: Point, b: Point, c: Point) -> tuple[HalfPlane, ...]:
    """Closed halfplanes whose intersection is the (possibly degenerate) triangle abc."""
    if orient(a, b, c) != 0:
        return tuple(triangle_halfplanes(a, b, c))
    pts = sorted({a.key(), b.key(), c.key()})
    lo, hi = Point(*pts[0]), Point(*pts[-1])
    if lo.key() == hi.key():
        return (
            HalfPlane.from_coeffs(1, 0, -lo.x),
            HalfPlane.from_coeffs(-1, 0, lo.x),
            HalfPlane.from_coeffs(0, 1, -lo.y),
            HalfPlane.from_coeffs(0, -1, lo.y),
        )
    ln = Line.through(lo, hi)
    dx, dy = hi.x - lo.x, hi.y - lo.y
    return (
        HalfPlane(ln, 1),
        HalfPlane(ln, -1),
        HalfPlane.from_coeffs(dx, dy, -(dx * lo.x + dy * lo.y)),
        HalfPlane.from_coeffs(-dx, -dy, dx * hi.x + dy * hi.y),
    )


class RangeCountIndex:
    """Two-stage partition tree with dual leaf structures.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(
        self,
        shear: ShearTransform,
        points: dict[int, Point],
        stage1: PartitionTree,
        stage2: dict[int, PartitionTree],
        root: _Node,
        t_leaf: int,
    ) -> None:
        self.shear = shear
        self.points = points
        self.stage1 = stage1
        self.stage2 = stage2
        self.root = root
        self.t_leaf = t_leaf

    @property
    def n(self) -> int:
        return len(self.points)

    def final_leaves(self) -> list[_Node]:
        out: list[_Node] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.children:
                stack.extend(node.children)
            else:
                out.append(node)
        return out

    def count_with_stats(self, halfplanes: Sequence[HalfPlane]) -> tuple[int, QueryStats]:
        """Count points in the intersection of ``halfplanes`` (original coordinates)."""
        hs = tuple(self.shear.apply_halfplane(h) for h in halfplanes)
        stats = QueryStats()
        duals = [constraint_from_halfplane(h) for h in hs]
        nested: list[DualConstraint] | None = None
        if len(hs) <= 3 and all(d is not None for d in duals):
            nested = [d for d in duals if d is not None]
        total = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            stats.visited += 1
            classes = [node.cell.classify(h) for h in hs]
            if OUTSIDE in classes:
                continue
            if all(c == INSIDE for c in classes):
                total += len(node.points)
                continue
            stats.crossed += 1
            if node.children:
                stack.extend(reversed(node.children))
                continue
            stats.leaf_visits += 1
            if nested is not None and node.leaf is not None:
                total += node.leaf.count(nested)
            else:
                total += sum(
                    1
                    for pid in node.points
                    if all(h.value(self.points[pid]) >= 0 for h in hs)
                )
        return total, stats

    def count(self, halfplanes: Sequence[HalfPlane]) -> int:
        return self.count_with_stats(halfplanes)[0]

    def is_empty(self, halfplanes: Sequence[HalfPlane]) -> bool:
        return self.count(halfplanes) == 0

    def structure_hash(self) -> str:
        payload = {
            "theta": str(self.shear.theta),
            "stage1": self.stage1.to_dict(),
            "stage2": {str(k): t.to_dict() for k, t in sorted(self.stage2.items())},
            "t_leaf": self.t_leaf,
        }
        raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(raw).hexdigest()


def count_in_triangle(idx: RangeCountIndex, a: Point, b: Point, c: Point) -> int:
    """Points in the closed triangle abc; degenerate triangles count their hull."""
    return idx.count(query_halfplanes(a, b, c))


def count_halfplane(idx: RangeCountIndex, h: HalfPlane) -> int:
    return idx.count((h,))


def _tree_nodes(
    tree: PartitionTree,
    level: int,
    index: int,
    make_leaf: Callable[[TreeCell], _Node],
    expand: Callable[[Sequence[int]], tuple[int, ...]],
) -> _Node:
    tc = tree.levels[level][index]
    if tc.is_leaf:
        return make_leaf(tc)
    children = tuple(
        _tree_nodes(tree, level + 1, ci, make_leaf, expand) for ci in tc.children
    )
    return _Node(tc.cell, expand(tc.points), children)


def _stage2_r(n1: int, cfg: RangeCountConfig) -> int:
    r1 = cfg.r1 if cfg.r1 is not None else max(2, n1 // 8)
    return min(max(r1, math.ceil(Fraction(2 * n1, cfg.t_leaf))), n1)


def build_rangecount(
    points: Sequence[Point], cfg: RangeCountConfig | None = None
) -> RangeCountIndex:
    """Build the two-stage range counting index.

    Coincident points are allowed; the trees are built over one
    representative per location and every node counts the full multiset.

    Raises:
        ValueError: If no points are given or point ids repeat
    """
    cfg = cfg or RangeCountConfig()
    n = len(points)
    if n == 0:
        raise ValueError("build_rangecount needs at least one point")
    shear = choose_shear(points)
    sheared = [shear.apply_point(p) for p in points]
    by_id = {p.id: p for p in sheared}
    if len(by_id) != n:
        raise ValueError("build_rangecount needs distinct point ids")
    reps, members = collapse_duplicates(sheared)
    rep_by_id = {p.id: p for p in reps}

    def expand(ids: Sequence[int]) -> tuple[int, ...]:
        return tuple(sorted(pid for rid in ids for pid in members[rid]))

    m = len(reps)
    r = min(max(cfg.r if cfg.r is not None else max(4, m // 64), 1), m)
    stage1 = build_tree(reps, r, cfg.refine, theta=shear.theta)
    stage2: dict[int, PartitionTree] = {}

    def final_leaf(tc: TreeCell) -> _Node:
        ids = expand(tc.points)
        return _Node(tc.cell, ids, (), LeafCountStructure([by_id[pid] for pid in ids]))

    def stage1_leaf(tc: TreeCell) -> _Node:
        if tc.count <= cfg.t_leaf:
            return final_leaf(tc)
        pts = [rep_by_id[rid] for rid in tc.points]
        r2 = _stage2_r(len(pts), cfg)
        sub = build_tree(pts, r2, cfg.refine, theta=shear.theta, root=tc.cell)
        stage2[tc.cell.id] = sub
        # the stage-2 root is this leaf's cell; its children hang off the leaf
        inner = tuple(
            _tree_nodes(sub, 1, ci, final_leaf, expand) for ci in sub.root.children
        )
        return _Node(tc.cell, expand(tc.points), inner)

    root = _tree_nodes(stage1, 0, 0, stage1_leaf, expand)
    idx = RangeCountIndex(shear, by_id, stage1, stage2, root, cfg.t_leaf)
    logger.info(
        "Built range counting index: n=%d r=%d stage-2 trees=%d final leaves=%d",
        n,
        r,
        len(stage2),
        len(idx.final_leaves()),
    )
    return idx
