"""Triangle stabbing: count or report the triangles containing a query point.

Every triangle is the intersection of three closed halfplanes, ordered by
their canonical lines. A query point ``q`` satisfies the constraint on line
``l`` iff the dual point ``l*`` lies on the matching side of the dual line
``q*``, so the triangles are handled one constraint at a time:

* the level-``k`` structure splits its triangles by the side of their k-th
  constraint and builds a partition tree over the dual points of the k-th
  constraint lines of each group;
* a query descends each tree with the halfplane bounded by ``q*``; a cell on
  the satisfying side hands its triangles to the level-``k-1`` structure
  stored at that node, a crossed cell recurses;
* level 0 adds counts (or ids), and tree leaves answer by locating ``q`` in
  the arrangement of the constraint lines ``1..k`` of their triangles.

Only a subsequence of tree levels is used. Level ``j_i`` is chosen so that
the cells of the i-th used level number about ``r**(1 - (1 - eps)**i)``,
which keeps the number of levels doubly logarithmic in ``r``.

Thread Safety:
    Immutable after construction; queries may run concurrently.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .arrangement import Arrangement, annotate_counts, build_arrangement
from .errors import ReportingDisabledError
from .geometry import (
    INSIDE,
    OUTSIDE,
    HalfPlane,
    Point,
    ShearTransform,
    SimplexCell,
    Triangle,
    choose_shear,
    dualize_line,
    dualize_point,
    sign,
)
from .refine import RefineConfig
from .tree import PartitionTree, QueryStats, build_tree, collapse_duplicates

logger = logging.getLogger("partree.stabbing")

_EXPONENT_DENOMINATOR = 4096


@dataclass(frozen=True)
class StabbingConfig:
    """Parameters of the stabbing index.

    Attributes:
        r: Leaf-cell target of every group tree; None sizes it from ``t_leaf``
        eps: Level schedule parameter in (0, 1)
        t_leaf: Largest group answered by a leaf arrangement without a tree
        reporting: Keep per-face id lists so :func:`stab_report` works
    """

    r: int | None = None
    eps: Fraction = Fraction(1, 2)
    t_leaf: int = 8
    reporting: bool = False
    refine: RefineConfig = field(default_factory=RefineConfig)

    def __post_init__(self) -> None:
        if not isinstance(self.eps, Fraction):
            object.__setattr__(self, "eps", Fraction(self.eps))
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must be in (0, 1), got: {self.eps}")
        if self.t_leaf < 1:
            raise ValueError(f"t_leaf must be >= 1, got: {self.t_leaf}")
        if self.r is not None and self.r < 1:
            raise ValueError(f"r must be >= 1, got: {self.r}")


# ========== Level schedule ==========


def _exponent_steps(eps: Fraction) -> list[Fraction]:
    """``(1 - eps)**i`` for i = 0, 1, ... until it stops shrinking.

    Once the exact power needs a denominator above 4096 it is rounded up to
    that denominator, which only moves a level earlier.
    """
    out = [Fraction(1)]
    delta = Fraction(1)
    while True:
        delta *= 1 - eps
        if delta.denominator > _EXPONENT_DENOMINATOR:
            delta = Fraction(math.ceil(delta * _EXPONENT_DENOMINATOR), _EXPONENT_DENOMINATOR)
        if delta >= out[-1] or delta == 0:
            return out
        out.append(delta)


def schedule_level(r: int, b: int, b_prime: int, delta: Fraction) -> int:
    """``ceil(log_b(r**(1 - delta) / b')) + 1`` in exact integer arithmetic."""
    num = delta.denominator - delta.numerator
    den = delta.denominator
    # smallest m with (b' * b**m)**den >= r**num
    target = r**num
    m = 0
    while (b_prime * b**m) ** den < target:
        m += 1
    return m + 1


def level_schedule(r: int, b: int, b_prime: int, eps: Fraction, j_max: int) -> tuple[int, ...]:
    """Tree levels ``j_0 < j_1 < ... < j_l`` used by one constraint level.

    Each ``j_i`` comes from :func:`schedule_level` clamped to ``[1, j_max]``;
    the schedule ends at the first level holding more than ``r/b`` nominal
    cells, or at ``j_max``.
    """
    out: list[int] = []
    for delta in _exponent_steps(eps):
        j = min(max(schedule_level(r, b, b_prime, delta), 1), j_max)
        if not out or j > out[-1]:
            out.append(j)
        if j == j_max or b * b_prime * b ** (j - 1) > r:
            break
    return tuple(out)


# ========== Structures ==========


@dataclass(frozen=True)
class _Item:
    id: int
    constraints: tuple[HalfPlane, HalfPlane, HalfPlane]

    def satisfies(self, q: Point, k: int) -> bool:
        return all(h.value(q) >= 0 for h in self.constraints[:k])


class _StabLeaf:
    """Arrangement of the first ``k`` constraint lines with per-face containment."""

    __slots__ = ("items", "k", "arrangement")

    def __init__(self, items: Sequence[_Item], k: int, reporting: bool) -> None:
        self.items = tuple(items)
        self.k = k
        lines = [h.line for it in self.items for h in it.constraints[:k]]
        arr = build_arrangement(lines)
        self.arrangement: Arrangement = annotate_counts(
            arr, self.items, lambda it, p: it.satisfies(p, k), with_ids=reporting
        )

    def count(self, q: Point) -> int:
        loc = self.arrangement.locate_all(q)
        if loc.generic:
            assert self.arrangement.face_counts is not None
            return self.arrangement.face_counts[loc.face]
        return sum(1 for it in self.items if it.satisfies(q, self.k))

    def report(self, q: Point) -> list[int]:
        loc = self.arrangement.locate_all(q)
        if loc.generic and self.arrangement.face_items is not None:
            return [self.items[i].id for i in self.arrangement.face_items[loc.face]]
        return [it.id for it in self.items if it.satisfies(q, self.k)]


class _StabNode:
    __slots__ = ("cell", "ids", "children", "next", "leaf", "level")

    def __init__(
        self,
        cell: SimplexCell,
        ids: tuple[int, ...],
        level: int,
        children: tuple[_StabNode, ...] = (),
        next: _Level | None = None,
        leaf: _StabLeaf | None = None,
    ) -> None:
        self.cell = cell
        self.ids = ids
        self.level = level
        self.children = children
        self.next = next
        self.leaf = leaf


@dataclass
class _Group:
    side: int
    root: _StabNode
    tree: PartitionTree | None
    used_levels: tuple[int, ...]
    sites: tuple[Point, ...] = ()


@dataclass
class _Level:
    k: int
    groups: list[_Group]


@dataclass
class _BuildStats:
    trees: int = 0
    nodes: int = 0
    stored_ids: int = 0
    leaves: int = 0
    schedules: set[tuple[int, ...]] = field(default_factory=set)


@dataclass(frozen=True)
class StabbingStats:
    """Size figures of a built index; ``space_ratio`` is stored ids per triangle."""

    n: int
    trees: int
    nodes: int
    leaves: int
    stored_ids: int
    schedules: tuple[tuple[int, ...], ...]

    @property
    def space_ratio(self) -> Fraction:
        return Fraction(self.stored_ids, max(self.n, 1))


class _Builder:
    def __init__(self, cfg: StabbingConfig, theta: Fraction) -> None:
        self.cfg = cfg
        self.theta = theta
        self.stats = _BuildStats()

    def level(self, items: Sequence[_Item], k: int) -> _Level:
        groups: list[_Group] = []
        for side in (1, -1):
            members = [it for it in items if self._side(it, k) == side]
            if members:
                groups.append(self._group(members, k, side))
        return _Level(k, groups)

    @staticmethod
    def _side(item: _Item, k: int) -> int:
        h = item.constraints[k - 1]
        return sign(h.flag * h.line.b)

    def _node(
        self,
        cell: SimplexCell,
        items: Sequence[_Item],
        k: int,
        tree_level: int,
        children: tuple[_StabNode, ...] = (),
        leaf: bool = False,
    ) -> _StabNode:
        ids = tuple(sorted(it.id for it in items))
        self.stats.nodes += 1
        self.stats.stored_ids += len(ids)
        if leaf:
            self.stats.leaves += 1
            return _StabNode(
                cell, ids, tree_level, leaf=_StabLeaf(items, k, self.cfg.reporting)
            )
        nxt = self.level(items, k - 1) if k > 1 and tree_level > 0 else None
        return _StabNode(cell, ids, tree_level, children, next=nxt)

    def _group(self, items: Sequence[_Item], k: int, side: int) -> _Group:
        sites = [dualize_line(it.constraints[k - 1].line).with_id(it.id) for it in items]
        reps, members = collapse_duplicates(sites)
        by_id = {it.id: it for it in items}
        plane = SimplexCell.plane(id=0)
        if len(items) <= self.cfg.t_leaf or len(reps) == 1:
            return _Group(side, self._node(plane, items, k, 0, leaf=True), None, ())
        n_g = len(reps)
        if self.cfg.r is not None:
            r = min(self.cfg.r, n_g)
        else:
            r = min(n_g, max(1, math.ceil(Fraction(2 * n_g, self.cfg.t_leaf))))
        tree = build_tree(reps, r, self.cfg.refine, theta=self.theta)
        self.stats.trees += 1
        j_max = len(tree.levels) - 1
        used = level_schedule(r, tree.b, tree.b_prime, self.cfg.eps, j_max)
        self.stats.schedules.add(used)
        if used[-1] != j_max:
            used = used + (j_max,)

        def items_of(rep_ids: Sequence[int]) -> list[_Item]:
            return [by_id[i] for rid in rep_ids for i in members[rid]]

        def descendants(level: int, index: int, target: int) -> list[int]:
            frontier = [index]
            for lv in range(level, target):
                frontier = [c for ci in frontier for c in tree.levels[lv][ci].children]
            return frontier

        def make(pos: int, index: int) -> _StabNode:
            tree_level = used[pos]
            tc = tree.levels[tree_level][index]
            its = items_of(tc.points)
            if pos == len(used) - 1:
                return self._node(tc.cell, its, k, tree_level, leaf=True)
            kids = tuple(
                make(pos + 1, ci) for ci in descendants(tree_level, index, used[pos + 1])
            )
            return self._node(tc.cell, its, k, tree_level, kids)

        first = tuple(make(0, ci) for ci in descendants(0, 0, used[0]))
        root = self._node(tree.root.cell, list(items), k, 0, first)
        return _Group(side, root, tree, used, tuple(reps))


class StabbingIndex:
    """Multi-level triangle stabbing structure.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(
        self,
        shear: ShearTransform,
        triangles: dict[int, Triangle],
        top: _Level | None,
        reporting: bool,
        stats: StabbingStats,
    ) -> None:
        self.shear = shear
        self.triangles = triangles
        self.top = top
        self.reporting = reporting
        self.stats = stats

    @property
    def n(self) -> int:
        return len(self.triangles)

    def _walk(self, q: Point, out: list[int] | None, stats: QueryStats) -> int:
        if self.top is None:
            return 0
        q_star = dualize_point(q)
        total = 0
        stack: list[tuple[_StabNode, int, HalfPlane]] = []

        def push_level(level: _Level) -> None:
            for g in level.groups:
                h = HalfPlane(q_star, sign(q_star.b) * g.side)
                stack.append((g.root, level.k, h))

        push_level(self.top)
        while stack:
            node, k, h = stack.pop()
            stats.visited += 1
            cls = node.cell.classify(h)
            if cls == OUTSIDE:
                continue
            if node.leaf is not None:
                stats.leaf_visits += 1
                if out is None:
                    total += node.leaf.count(q)
                else:
                    found = node.leaf.report(q)
                    out.extend(found)
                    total += len(found)
                continue
            if cls == INSIDE and node.level > 0:
                if node.next is None:
                    total += len(node.ids)
                    if out is not None:
                        out.extend(node.ids)
                else:
                    push_level(node.next)
                continue
            stats.crossed += 1
            for child in node.children:
                stack.append((child, k, h))
        return total

    def trees(self) -> list[tuple[PartitionTree, tuple[Point, ...]]]:
        """Every group tree with the dual sites it was built over."""
        out: list[tuple[PartitionTree, tuple[Point, ...]]] = []
        levels = [self.top] if self.top is not None else []
        while levels:
            level = levels.pop()
            for g in level.groups:
                if g.tree is not None:
                    out.append((g.tree, g.sites))
                stack = [g.root]
                while stack:
                    node = stack.pop()
                    stack.extend(node.children)
                    if node.next is not None:
                        levels.append(node.next)
        return out

    def _describe(self, level: _Level) -> dict[str, Any]:
        def node_dict(node: _StabNode) -> dict[str, Any]:
            out: dict[str, Any] = {"level": node.level, "ids": list(node.ids)}
            if node.children:
                out["children"] = [node_dict(c) for c in node.children]
            if node.next is not None:
                out["next"] = self._describe(node.next)
            return out

        return {
            "k": level.k,
            "groups": [
                {
                    "side": g.side,
                    "used": list(g.used_levels),
                    "tree": g.tree.structure_hash() if g.tree is not None else None,
                    "root": node_dict(g.root),
                }
                for g in level.groups
            ],
        }

    def structure_hash(self) -> str:
        payload = {
            "theta": str(self.shear.theta),
            "top": self._describe(self.top) if self.top is not None else None,
        }
        raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(raw).hexdigest()

    def count_with_stats(self, q: Point) -> tuple[int, QueryStats]:
        stats = QueryStats()
        return self._walk(self.shear.apply_point(q), None, stats), stats

    def count(self, q: Point) -> int:
        return self.count_with_stats(q)[0]

    def report(self, q: Point) -> list[int]:
        """Sorted ids of the triangles containing ``q``.

        Raises:
            ReportingDisabledError: If the index was built without reporting
        """
        if not self.reporting:
            raise ReportingDisabledError("stab_report needs an index built with reporting=True")
        out: list[int] = []
        self._walk(self.shear.apply_point(q), out, QueryStats())
        return sorted(out)


def build_stabbing(
    triangles: Sequence[Triangle], cfg: StabbingConfig | None = None
) -> StabbingIndex:
    """Build the stabbing index.

    Raises:
        DegenerateTriangleError: Raised by :class:`Triangle` for zero-area input
        ValueError: If triangle ids repeat
    """
    cfg = cfg or StabbingConfig()
    by_id = {t.id: t for t in triangles}
    if len(by_id) != len(triangles):
        raise ValueError("build_stabbing needs distinct triangle ids")
    corners = [p for t in triangles for p in (t.a, t.b, t.c)]
    lines = [h.line for t in triangles for h in t.constraints()]
    shear = choose_shear(corners, lines)
    items = []
    for t in triangles:
        st = Triangle(
            shear.apply_point(t.a), shear.apply_point(t.b), shear.apply_point(t.c), id=t.id
        )
        items.append(_Item(t.id, st.constraints()))
    builder = _Builder(cfg, shear.theta)
    top = builder.level(items, 3) if items else None
    s = builder.stats
    stats = StabbingStats(
        n=len(items),
        trees=s.trees,
        nodes=s.nodes,
        leaves=s.leaves,
        stored_ids=s.stored_ids,
        schedules=tuple(sorted(s.schedules)),
    )
    logger.info(
        "Built stabbing index: n=%d trees=%d nodes=%d stored ids=%d",
        stats.n,
        stats.trees,
        stats.nodes,
        stats.stored_ids,
    )
    return StabbingIndex(shear, by_id, top, cfg.reporting, stats)


def stab_count(idx: StabbingIndex, q: Point) -> int:
    return idx.count(q)


def stab_report(idx: StabbingIndex, q: Point) -> list[int]:
    return idx.report(q)
