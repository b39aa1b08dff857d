"""Hierarchical partition trees.

A :class:`PartitionTree` is a sequence of levels ``levels[0..k+1]``. Level 0
is one root cell holding every point (the whole plane unless the caller clips
the tree to a cell); each later level refines the previous one and is produced by one
:func:`~partree.engine.refine.refine` round over the test set (all lines through two points).

For ``r`` with ``b**k <= r < b**(k+1)`` and ``b' = ceil(r / b**k)`` the rounds
are ``t = 1`` with branching ``b'``, then ``t = b' * b**(i-1)`` with branching
``b`` for ``i = 1..k``. Level ``i >= 1`` then has about ``b' * b**(i-1)``
cells of at most ``ceil(2n / (b' * b**(i-1)))`` points each.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import InvariantViolation
from .geometry import (
    ZERO,
    HalfPlane,
    Line,
    Point,
    SimplexCell,
    format_scalar,
)
from .refine import CellSeed, CuttingRecord, RefineConfig, arrangement_vertices, refine

logger = logging.getLogger("partree.tree")

TREE_FORMAT = "partree-tree v1"


@dataclass(frozen=True)
class TreeCell:
    """One cell of a level, with its points and links."""

    cell: SimplexCell
    points: tuple[int, ...]
    parent: int = -1
    children: tuple[int, ...] = ()

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class RoundRecord:
    """Diagnostics of one refinement round."""

    t: int
    branching: int
    cells: int
    max_crossing: int
    trace: tuple[str, ...] = ()
    cuttings: tuple[CuttingRecord, ...] = ()


@dataclass(frozen=True)
class PartitionTree:
    """Levels of nested cells over a point set.

    Attributes:
        levels: ``levels[i]`` is the cell list of level i; level 0 is the root
        n: Number of points
        r: Target number of leaf cells
        b: Branching factor of later rounds
        b_prime: Branching factor of the first round
        k: ``floor(log_b r)``
        theta: Shear applied to the points before building
        rounds: Per-round diagnostics (not serialized)
    """

    levels: tuple[tuple[TreeCell, ...], ...]
    n: int
    r: int
    b: int
    b_prime: int
    k: int
    theta: Fraction = ZERO
    rounds: tuple[RoundRecord, ...] = field(default=(), compare=False)

    @property
    def leaves(self) -> tuple[TreeCell, ...]:
        return self.levels[-1]

    @property
    def root(self) -> TreeCell:
        return self.levels[0][0]

    def nominal_cells(self, level: int) -> int:
        """``b' * b**(level-1)`` for level >= 1, 1 for the root."""
        if level == 0:
            return 1
        return self.b_prime * self.b ** (level - 1)

    def point_budget(self, level: int) -> int:
        return math.ceil(Fraction(2 * self.n, self.nominal_cells(level)))

    # ========== Serialization ==========

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": TREE_FORMAT,
            "n": self.n,
            "r": self.r,
            "b": self.b,
            "b_prime": self.b_prime,
            "k": self.k,
            "theta": format_scalar(self.theta),
            "levels": [
                [
                    {
                        "halfplanes": tc.cell.canonical(),
                        "points": list(tc.points),
                        "parent": tc.parent,
                    }
                    for tc in level
                ]
                for level in self.levels
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PartitionTree:
        """Rebuild a tree from :meth:`to_dict` output.

        Raises:
            ValueError: If the format tag is wrong or a cell is malformed
        """
        if data.get("format") != TREE_FORMAT:
            raise ValueError(
                f"Tree format must be {TREE_FORMAT!r}, got: {data.get('format')!r}"
            )
        raw_levels = data["levels"]
        levels: list[list[TreeCell]] = []
        for raw in raw_levels:
            cells = []
            for ci, entry in enumerate(raw):
                hs = [
                    HalfPlane(Line.from_coeffs(a, b, c), int(flag))
                    for a, b, c, flag in entry["halfplanes"]
                ]
                cell = SimplexCell(hs, id=ci)
                cells.append(TreeCell(cell, tuple(entry["points"]), int(entry["parent"])))
            levels.append(cells)
        return cls(
            levels=_link(levels),
            n=int(data["n"]),
            r=int(data["r"]),
            b=int(data["b"]),
            b_prime=int(data["b_prime"]),
            k=int(data["k"]),
            theta=Fraction(data["theta"]),
        )

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    def structure_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _link(levels: Sequence[Sequence[TreeCell]]) -> tuple[tuple[TreeCell, ...], ...]:
    out: list[tuple[TreeCell, ...]] = []
    for li, level in enumerate(levels):
        children: list[list[int]] = [[] for _ in level]
        if li + 1 < len(levels):
            for ci, child in enumerate(levels[li + 1]):
                if 0 <= child.parent < len(level):
                    children[child.parent].append(ci)
        out.append(
            tuple(
                TreeCell(tc.cell, tc.points, tc.parent, tuple(children[ci]))
                for ci, tc in enumerate(level)
            )
        )
    return tuple(out)


# ========== Construction ==========


def build_test_set(points: Sequence[Point]) -> tuple[Line, ...]:
    """Distinct lines through pairs of distinct points, in canonical order.

    Raises:
        ValueError: If fewer than two points are given
    """
    if len(points) < 2:
        raise ValueError(f"build_test_set needs at least 2 points, got: {len(points)}")
    locs = sorted({p.key() for p in points})
    keys: set[tuple[int, int, int]] = set()
    for i in range(len(locs)):
        for j in range(i + 1, len(locs)):
            keys.add(Line.through(Point(*locs[i]), Point(*locs[j])).key())
    return tuple(Line(*k, id=i) for i, k in enumerate(sorted(keys)))


def cap_test_set(lines: Sequence[Line], cap: int) -> tuple[Line, ...]:
    """Every ``len/cap``-th line (by canonical order) when there are more than ``cap``."""
    if cap <= 0 or len(lines) <= cap:
        return tuple(lines)
    m = len(lines)
    picked = [lines[(i * m) // cap] for i in range(cap)]
    return tuple(ln.with_id(i) for i, ln in enumerate(picked))


def tree_shape(r: int, b: int) -> tuple[int, int]:
    """``(k, b')`` with ``b**k <= r < b**(k+1)`` and ``b' = ceil(r / b**k)``."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got: {r}")
    k = 0
    while b ** (k + 1) <= r:
        k += 1
    return k, -(-r // b**k)


def build_tree(
    points: Sequence[Point],
    r: int,
    cfg: RefineConfig,
    *,
    theta: Fraction = ZERO,
    r0: int = 1,
    root: SimplexCell | None = None,
    audit: bool = False,
    trace: bool = False,
) -> PartitionTree:
    """Build the partition tree of ``points`` with about ``r`` leaf cells.

    ``points`` are taken as given; ``theta`` only records the shear the caller
    already applied. ``root`` clips the tree to a cell that must hold every
    point (the whole plane by default).

    Raises:
        ValueError: If r is outside ``[r0, n]``, point ids repeat or ``root``
            misses a point
    """
    n = len(points)
    if not r0 <= r <= n:
        raise ValueError(f"r must be in [{r0}, {n}], got: {r}")
    if len({p.id for p in points}) != n:
        raise ValueError("build_tree needs distinct point ids")
    b = cfg.b
    k, b_prime = tree_shape(r, b)
    lines = cap_test_set(build_test_set(points), cfg.max_test_lines) if n >= 2 else ()
    vertices = arrangement_vertices(lines)
    ids = tuple(sorted(p.id for p in points))
    top = SimplexCell.plane(id=0) if root is None else root.with_id(0)
    if root is not None and not all(top.contains_point(p) for p in points):
        raise ValueError("build_tree root must contain every point")
    levels: list[list[TreeCell]] = [[TreeCell(top, ids)]]
    seeds = [CellSeed(top, ids)]
    schedule = [(1, b_prime)] + [(b_prime * b ** (i - 1), b) for i in range(1, k + 1)]
    rounds: list[RoundRecord] = []
    for t, branching in schedule:
        res = refine(
            points,
            lines,
            seeds,
            cfg,
            t=t,
            branching=branching,
            vertices=vertices,
            audit=audit,
            trace=trace,
        )
        level = zip(res.subcells, res.points, res.parents)
        levels.append([TreeCell(sc, pts, parent) for sc, pts, parent in level])
        rounds.append(
            RoundRecord(
                t, branching, res.subcell_count, res.max_crossing, res.trace, res.cuttings
            )
        )
        seeds = list(res.seeds)
    tree = PartitionTree(
        levels=_link(levels),
        n=n,
        r=r,
        b=b,
        b_prime=b_prime,
        k=k,
        theta=theta,
        rounds=tuple(rounds),
    )
    logger.info(
        "Built partition tree: n=%d r=%d k=%d b'=%d levels=%s",
        n,
        r,
        k,
        b_prime,
        [len(level) for level in tree.levels],
    )
    return tree


# ========== Audits ==========


def _inside(child: SimplexCell, parent: SimplexCell) -> bool:
    return all(h.value(p) >= 0 for h in parent.halfplanes for p in child.points) and all(
        h.dot(*d) >= 0 for h in parent.halfplanes for d in child.rays
    )


def audit_tree(
    tree: PartitionTree,
    points: Sequence[Point],
    *,
    c1: int = 1,
    c2: int = 1,
    plane_root: bool = True,
) -> list[InvariantViolation]:
    """Every violated structural property of ``tree`` with a witness.

    ``points`` must be in the tree's (sheared) coordinates. ``c1`` caps the
    level size relative to its nominal cell count and ``c2`` the number of
    children relative to the branching factor; the defaults are the exact
    bounds refinement guarantees. Trees clipped to a cell pass
    ``plane_root=False``.
    """
    found: list[InvariantViolation] = []
    by_id = {p.id: p for p in points}
    root_level = tree.levels[0]
    if len(root_level) != 1:
        found.append(InvariantViolation("level 0 must be a single cell", len(root_level)))
    elif plane_root and root_level[0].cell.halfplanes:
        found.append(InvariantViolation("level 0 must be the whole plane"))
    elif set(root_level[0].points) != set(by_id):
        found.append(InvariantViolation("the root must hold every point"))
    elif not all(root_level[0].cell.contains_point(p) for p in points):
        found.append(InvariantViolation("point outside the root cell"))
    for li in range(1, len(tree.levels)):
        level = tree.levels[li]
        nominal = tree.nominal_cells(li)
        if len(level) > c1 * nominal:
            found.append(
                InvariantViolation("level size above its cap", (li, len(level), c1 * nominal))
            )
        budget = tree.point_budget(li)
        seen: dict[int, int] = {}
        for ci, tc in enumerate(level):
            if not 1 <= tc.count <= budget:
                found.append(
                    InvariantViolation("cell point count out of range", (li, ci, tc.count))
                )
            for pid in tc.points:
                if pid in seen:
                    found.append(
                        InvariantViolation("point assigned twice on a level", (li, pid))
                    )
                seen[pid] = ci
                p = by_id.get(pid)
                if p is None or not tc.cell.contains_point(p):
                    found.append(InvariantViolation("point outside its cell", (li, ci, pid)))
            parent_level = tree.levels[li - 1]
            if not 0 <= tc.parent < len(parent_level):
                found.append(InvariantViolation("dangling parent link", (li, ci)))
                continue
            parent = parent_level[tc.parent]
            if not set(tc.points) <= set(parent.points):
                found.append(
                    InvariantViolation("child points not a subset of the parent", (li, ci))
                )
            if not _inside(tc.cell, parent.cell):
                found.append(InvariantViolation("child cell leaves its parent", (li, ci)))
        if set(seen) != set(by_id):
            found.append(InvariantViolation("level does not cover every point", li))
    for li in range(len(tree.levels) - 1):
        cap = c2 * (tree.b_prime if li == 0 else tree.b)
        for ci, tc in enumerate(tree.levels[li]):
            if len(tc.children) > cap:
                found.append(
                    InvariantViolation("too many children", (li, ci, len(tc.children)))
                )
    return found


@dataclass(frozen=True)
class CrossingProfile:
    """Crossing counts of query lines per level (levels 1..k+1)."""

    per_level_max: tuple[int, ...]
    per_line: tuple[tuple[int, ...], ...]


def crossing_profile(tree: PartitionTree, lines: Iterable[Line]) -> CrossingProfile:
    """How many cells of each level every query line crosses."""
    rows = []
    for ln in lines:
        rows.append(
            tuple(
                sum(1 for tc in tree.levels[li] if tc.cell.crosses(ln))
                for li in range(1, len(tree.levels))
            )
        )
    depth = len(tree.levels) - 1
    maxima = tuple(max((row[i] for row in rows), default=0) for i in range(depth))
    return CrossingProfile(maxima, tuple(rows))


@dataclass
class QueryStats:
    """Work done by one query descent."""

    visited: int = 0
    crossed: int = 0
    leaf_visits: int = 0

    def merge(self, other: QueryStats) -> None:
        self.visited += other.visited
        self.crossed += other.crossed
        self.leaf_visits += other.leaf_visits


def collapse_duplicates(points: Sequence[Point]) -> tuple[list[Point], dict[int, tuple[int, ...]]]:
    """One representative per location (the smallest id) and the ids it stands for.

    Trees are built over representatives; coincident points cannot be split
    by any cut.
    """
    groups: dict[tuple[Fraction, Fraction], list[Point]] = {}
    for p in points:
        groups.setdefault(p.key(), []).append(p)
    reps: list[Point] = []
    members: dict[int, tuple[int, ...]] = {}
    for key in sorted(groups):
        group = sorted(groups[key], key=lambda p: p.id)
        reps.append(group[0])
        members[group[0].id] = tuple(p.id for p in group)
    return reps, members
