"""Segments stored on a partition tree: line detection and segment intersection.

The tree is built over the endpoints of all segments. Each segment is stored
exactly once, by a walk from the root: while the child cell owning the
segment's first endpoint contains the whole segment, descend into it;
otherwise store the segment at the first edge of that child which it meets.
Segments that reach a leaf are stored at the leaf.

A query object (line or segment) meeting a stored segment ``s`` also meets
every cell that contains ``s``, so the query visits exactly the cells it
meets, asks the edge structures of their children, and asks the leaf
structures of the leaves it reaches.

Edge and leaf structures are :class:`WedgeLeafStructure` instances. A line
``l`` meets segment ``pq`` iff the dual point ``l*`` lies in the closed
double wedge between the dual lines ``p*`` and ``q*``; locating ``l*`` in the
arrangement of all dual endpoint lines yields the segments whose wedge holds
the face (``A_F``). For a query segment, a second arrangement over the
supporting lines of ``A_F`` tells which of them separate its endpoints.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Generic, Protocol, TypeVar

from .arrangement import Arrangement, build_arrangement
from .errors import InvariantViolation
from .geometry import (
    ConvexRegion,
    Line,
    Point,
    Segment,
    ShearTransform,
    SimplexCell,
    choose_shear,
    dualize_line,
    dualize_point,
    line_meets_segment,
    segments_intersect,
)
from .refine import RefineConfig
from .tree import PartitionTree, QueryStats, build_tree, collapse_duplicates

logger = logging.getLogger("partree.segquery")


@dataclass(frozen=True)
class SegQueryConfig:
    """``r`` is the leaf-cell target; None picks ``max(4, 4n // b**3)``."""

    r: int | None = None
    refine: RefineConfig = field(default_factory=RefineConfig)

    def __post_init__(self) -> None:
        if self.r is not None and self.r < 1:
            raise ValueError(f"r must be >= 1, got: {self.r}")


def default_r(n: int, b: int) -> int:
    """``max(4, 4n // b**3)`` clamped to ``[4, 2n]``."""
    return min(max(4, 4 * n // b**3), max(4, 2 * n))


# ========== Dual wedge structures ==========


class DualWedges:
    """Arrangement of the dual lines of segment endpoints with per-face wedge sets.

    Bit ``i`` of ``face_sets[f]`` is set iff segment ``i`` (position in
    ``segments``) has one endpoint dual strictly above face ``f`` and the
    other strictly below it.
    """

    def __init__(self, segments: Sequence[Segment]) -> None:
        self.segments = tuple(segments)
        duals = [dualize_point(p) for s in self.segments for p in (s.p, s.q)]
        self.arrangement: Arrangement = build_arrangement(duals)
        index = {ln.key(): i for i, ln in enumerate(self.arrangement.lines)}
        self._ends = [
            (index[duals[2 * i].key()], index[duals[2 * i + 1].key()])
            for i in range(len(self.segments))
        ]
        sets = []
        for mask in self.arrangement.face_masks:
            bits = 0
            for i, (a, b) in enumerate(self._ends):
                if ((mask >> a) & 1) != ((mask >> b) & 1):
                    bits |= 1 << i
            sets.append(bits)
        self.face_sets: tuple[int, ...] = tuple(sets)

    @property
    def size(self) -> int:
        return len(self.segments)

    def positions(self, bits: int) -> list[int]:
        out = []
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def wedge_face(self, ln: Line) -> int | None:
        """Face holding ``ln*``; None when ``ln`` is vertical or passes an endpoint."""
        if ln.is_vertical:
            return None
        loc = self.arrangement.locate_all(dualize_line(ln))
        if not loc.generic:
            return None
        return loc.face


class WedgeLeafStructure(DualWedges):
    """Line detection and segment intersection over a small segment set.

    Besides the dual wedges it keeps the arrangement of the supporting lines
    of all its segments, built once. A query segment meets a wedge segment
    iff that segment's supporting line separates the query's endpoints.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(self, segments: Sequence[Segment]) -> None:
        super().__init__(segments)
        self.marked: tuple[bool, ...] = tuple(bits != 0 for bits in self.face_sets)
        self.supports: Arrangement = build_arrangement(
            s.supporting_line() for s in self.segments
        )

    def detect_line(self, ln: Line) -> bool:
        f = self.wedge_face(ln)
        if f is None:
            return any(line_meets_segment(ln, s) for s in self.segments)
        return self.marked[f]

    def line_hits(self, ln: Line) -> list[int]:
        f = self.wedge_face(ln)
        if f is None:
            return sorted(s.id for s in self.segments if line_meets_segment(ln, s))
        return sorted(self.segments[i].id for i in self.positions(self.face_sets[f]))

    def segment_hits(self, sq: Segment) -> list[int]:
        """Ids of the stored segments meeting the closed segment ``sq``."""
        f = self.wedge_face(sq.supporting_line())
        if f is None:
            return sorted(s.id for s in self.segments if segments_intersect(s, sq))
        bits = self.face_sets[f]
        if not bits:
            return []
        wedge = self.positions(bits)
        la, lb = self.supports.locate_all(sq.p), self.supports.locate_all(sq.q)
        if not (la.generic and lb.generic):
            return sorted(
                self.segments[i].id for i in wedge if segments_intersect(self.segments[i], sq)
            )
        between = self.supports.face_masks[la.face] ^ self.supports.face_masks[lb.face]
        separating = set(self.supports.items_of_mask(between))
        return sorted(self.segments[i].id for i in wedge if i in separating)


# ========== Store ==========


class SegmentStructure(Protocol):
    @property
    def size(self) -> int: ...


S = TypeVar("S", bound=SegmentStructure)


@dataclass(frozen=True)
class Placement:
    """Where a segment ended up: node path from the root and edge (None at a leaf)."""

    segment: int
    path: tuple[int, ...]
    edge: int | None


class SegNode(Generic[S]):
    __slots__ = ("cell", "level", "index", "children", "edges", "edge_ids", "leaf", "leaf_ids")

    def __init__(self, cell: SimplexCell, level: int, index: int) -> None:
        self.cell = cell
        self.level = level
        self.index = index
        self.children: list[SegNode[S]] = []
        self.edges: dict[int, S] = {}
        self.edge_ids: dict[int, tuple[int, ...]] = {}
        self.leaf: S | None = None
        self.leaf_ids: tuple[int, ...] = ()


class SegmentStore(Generic[S]):
    """Partition tree over segment endpoints with exactly-once segment storage.

    Thread Safety:
        Immutable after construction; queries may run concurrently.
    """

    def __init__(
        self,
        shear: ShearTransform,
        segments: dict[int, Segment],
        tree: PartitionTree,
        root: SegNode[S],
        placements: dict[int, Placement],
    ) -> None:
        self.shear = shear
        self.segments = segments
        self.tree = tree
        self.root = root
        self.placements = placements

    @property
    def n(self) -> int:
        return len(self.segments)

    def structure_hash(self) -> str:
        payload = {
            "theta": str(self.shear.theta),
            "tree": self.tree.structure_hash(),
            "placements": [
                [p.segment, list(p.path), p.edge]
                for _, p in sorted(self.placements.items())
            ],
        }
        raw = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(raw).hexdigest()

    def nodes(self) -> list[SegNode[S]]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(node.children)
        return out

    def visit(
        self,
        meets: Callable[[ConvexRegion], bool],
        ask: Callable[[S], bool],
        stats: QueryStats | None = None,
    ) -> None:
        """Call ``ask`` on every structure the query may hit; stop when it returns True."""
        stats = stats if stats is not None else QueryStats()
        stack = [self.root]
        while stack:
            node = stack.pop()
            stats.visited += 1
            if not meets(node.cell):
                continue
            if node.leaf is not None:
                stats.leaf_visits += 1
                if ask(node.leaf):
                    return
            if node.children:
                stats.crossed += 1
            for child in node.children:
                for e in sorted(child.edges):
                    if ask(child.edges[e]):
                        return
            stack.extend(reversed(node.children))


def _walk(
    tree: PartitionTree, owner: list[dict[int, int]], rep_of: dict[int, int], pos: int, s: Segment
) -> tuple[tuple[int, ...], int | None]:
    level, index = 0, 0
    path = [0]
    rep = rep_of[2 * pos]
    while True:
        tc = tree.levels[level][index]
        if tc.is_leaf:
            return tuple(path), None
        child = owner[level + 1][rep]
        cell = tree.levels[level + 1][child].cell
        path.append(child)
        if cell.contains_segment(s):
            level, index = level + 1, child
            continue
        for e in range(len(cell.halfplanes)):
            if cell.edge_meets_segment(e, s):
                return tuple(path), e
        raise InvariantViolation("segment leaves a cell without meeting its boundary", s.id)


def build_segment_store(
    segments: Sequence[Segment],
    cfg: SegQueryConfig | None = None,
    *,
    structure: Callable[[Sequence[Segment]], S],
    shear: ShearTransform | None = None,
) -> SegmentStore[S]:
    """Build the store with ``structure`` for every edge list and leaf list.

    Raises:
        ValueError: If segment ids repeat or no segments are given
    """
    cfg = cfg or SegQueryConfig()
    if not segments:
        raise ValueError("build_segment_store needs at least one segment")
    by_id = {s.id: s for s in segments}
    if len(by_id) != len(segments):
        raise ValueError("build_segment_store needs distinct segment ids")
    if shear is None:
        ends = [p for s in segments for p in (s.p, s.q)]
        shear = choose_shear(ends, [s.supporting_line() for s in segments])
    sheared = [shear.apply_segment(s) for s in segments]
    ends = [p.with_id(2 * i + k) for i, s in enumerate(sheared) for k, p in enumerate((s.p, s.q))]
    reps, members = collapse_duplicates(ends)
    rep_of = {pid: rid for rid, ids in members.items() for pid in ids}
    n = len(sheared)
    r = cfg.r if cfg.r is not None else default_r(n, cfg.refine.b)
    r = max(1, min(r, len(reps)))
    tree = build_tree(reps, r, cfg.refine, theta=shear.theta)
    owner: list[dict[int, int]] = [
        {pid: ci for ci, tc in enumerate(level) for pid in tc.points} for level in tree.levels
    ]

    placements: dict[int, Placement] = {}
    at_edge: dict[tuple[int, int, int], list[Segment]] = {}
    at_leaf: dict[tuple[int, int], list[Segment]] = {}
    for pos, s in enumerate(sheared):
        path, edge = _walk(tree, owner, rep_of, pos, s)
        placements[s.id] = Placement(s.id, path, edge)
        key = (len(path) - 1, path[-1])
        if edge is None:
            at_leaf.setdefault(key, []).append(s)
        else:
            at_edge.setdefault((*key, edge), []).append(s)

    nodes: list[list[SegNode[S]]] = [
        [SegNode(tc.cell, li, ci) for ci, tc in enumerate(level)]
        for li, level in enumerate(tree.levels)
    ]
    for li, level in enumerate(tree.levels):
        for ci, tc in enumerate(level):
            nodes[li][ci].children = [nodes[li + 1][k] for k in tc.children]
    for (li, ci, e), group in sorted(at_edge.items()):
        nodes[li][ci].edges[e] = structure(group)
        nodes[li][ci].edge_ids[e] = tuple(sorted(s.id for s in group))
    for (li, ci), group in sorted(at_leaf.items()):
        nodes[li][ci].leaf = structure(group)
        nodes[li][ci].leaf_ids = tuple(sorted(s.id for s in group))

    store: SegmentStore[S] = SegmentStore(
        shear, {s.id: s for s in sheared}, tree, nodes[0][0], placements
    )
    logger.info(
        "Built segment store: n=%d r=%d edge lists=%d leaf lists=%d",
        n,
        r,
        len(at_edge),
        len(at_leaf),
    )
    return store


def build_wedge_store(
    segments: Sequence[Segment], cfg: SegQueryConfig | None = None
) -> SegmentStore[WedgeLeafStructure]:
    return build_segment_store(segments, cfg, structure=WedgeLeafStructure)


# ========== Queries ==========


def detect_line_with_stats(
    store: SegmentStore[WedgeLeafStructure], ln: Line
) -> tuple[bool, QueryStats]:
    """Whether ``ln`` meets any stored segment, with descent statistics."""
    ln = store.shear.apply_line(ln)
    found = False
    stats = QueryStats()

    def ask(ws: WedgeLeafStructure) -> bool:
        nonlocal found
        found = ws.detect_line(ln)
        return found

    store.visit(lambda cell: cell.meets(ln), ask, stats)
    return found, stats


def detect_line(store: SegmentStore[WedgeLeafStructure], ln: Line) -> bool:
    return detect_line_with_stats(store, ln)[0]


def report_line(store: SegmentStore[WedgeLeafStructure], ln: Line) -> list[int]:
    ln = store.shear.apply_line(ln)
    out: list[int] = []

    def ask(ws: WedgeLeafStructure) -> bool:
        out.extend(ws.line_hits(ln))
        return False

    store.visit(lambda cell: cell.meets(ln), ask)
    return sorted(out)


def report_intersecting_with_stats(
    store: SegmentStore[WedgeLeafStructure], sq: Segment
) -> tuple[list[int], QueryStats]:
    sq = store.shear.apply_segment(sq)
    out: list[int] = []
    stats = QueryStats()

    def ask(ws: WedgeLeafStructure) -> bool:
        out.extend(ws.segment_hits(sq))
        return False

    store.visit(lambda cell: cell.meets_segment(sq), ask, stats)
    return sorted(out), stats


def report_intersecting(store: SegmentStore[WedgeLeafStructure], sq: Segment) -> list[int]:
    """Sorted ids of the stored segments meeting the closed segment ``sq``."""
    return report_intersecting_with_stats(store, sq)[0]


def count_intersecting(store: SegmentStore[WedgeLeafStructure], sq: Segment) -> int:
    return len(report_intersecting_with_stats(store, sq)[0])


def detect_segment(store: SegmentStore[WedgeLeafStructure], sq: Segment) -> bool:
    sq = store.shear.apply_segment(sq)
    found = False

    def ask(ws: WedgeLeafStructure) -> bool:
        nonlocal found
        found = bool(ws.segment_hits(sq))
        return found

    store.visit(lambda cell: cell.meets_segment(sq), ask)
    return found


# ========== Audit ==========


def audit_storage(store: SegmentStore[S]) -> list[InvariantViolation]:
    """Exactly-once storage, edge lists meet their edge, leaf lists lie in their leaf."""
    found: list[InvariantViolation] = []
    seen: dict[int, int] = {}
    for node in store.nodes():
        for e, ids in sorted(node.edge_ids.items()):
            for sid in ids:
                seen[sid] = seen.get(sid, 0) + 1
                if not node.cell.edge_meets_segment(e, store.segments[sid]):
                    found.append(
                        InvariantViolation("edge list holds a segment missing the edge", sid)
                    )
        for sid in node.leaf_ids:
            seen[sid] = seen.get(sid, 0) + 1
            if not node.cell.contains_segment(store.segments[sid]):
                found.append(
                    InvariantViolation("leaf list holds a segment outside the leaf", sid)
                )
    for sid in sorted(store.segments):
        if seen.get(sid, 0) != 1:
            found.append(
                InvariantViolation("segment not stored exactly once", (sid, seen.get(sid, 0)))
            )
    if set(store.placements) != set(store.segments):
        found.append(InvariantViolation("walk transcript does not cover the segments", None))
    return found
