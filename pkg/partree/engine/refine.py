"""Partition refinement driven by multiplicative weights.

Given ``t`` interior-disjoint cells covering a point set, :func:`refine`
processes the cells one at a time and splits each into a few subcells holding
at most ``ceil(2n/(b*t))`` points, while keeping the number of subcells any
line of the test set crosses small.

Each test line ``h`` carries a crossing counter ``lam(h)`` and the exponent
``I(h) = ceil(lam(h) * log2(1 + 1/b))``; its weight is ``2**I(h)``. Every
vertex ``v`` of the test-set arrangement carries the exponent of the summed
counters of the lines through it. Per unprocessed cell the engine keeps

* ``W``: the summed weight of the lines crossing the cell, and
* ``N``: the summed weight of the vertices assigned to the cell,

and their most significant bit indices ``I_E`` and ``I_F`` (``None`` for an
empty sum). These drive the choice of the next cell and of the cutting
parameter ``r_i``. All weights are Python ints, so every comparison is exact.

Processing one cell:
    1. A weighted ``1/(4 r_i)``-cutting of the crossing lines with at most
       ``max(b/4, 2)`` cells (never more than ``b/2``). While the cutting is
       larger, or its cells would need more than ``b`` point-budget pieces
       between them, ``r_i`` is halved and the cutting retried.
    2. Each cutting cell holding ``p`` points is cut into exactly
       ``ceil(p/cap)`` simplices. Every cut is one line splitting a simplex in
       two; the vertical cut is tried first, then cuts through the corners and
       cuts parallel to the heaviest crossing lines, and the one crossed by
       the least line weight on both sides is kept.
    3. Every line crossing the parent has its counter increased by the number
       of subcells it crosses; weights of the remaining cells are updated
       incrementally.

The cutting adds at most ``max(b/4, 2) - 1`` subcells per parent on top of
``ceil(p/cap)``, so a round yields at most ``b*t`` subcells.
"""

from __future__ import annotations

import functools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .cutting import Cutting, WeightedLineSet, cut_weighted_bounded
from .errors import InvariantViolation, PreconditionError
from .geometry import (
    ConvexRegion,
    HalfPlane,
    Line,
    Point,
    SimplexCell,
    intersect_lines,
    orient,
    side,
)

logger = logging.getLogger("partree.refine")


@dataclass(frozen=True)
class RefineConfig:
    """Parameters of the refinement engine.

    Attributes:
        b: Branching factor, a power of two >= 4
        beta: Rational in (0, 1) used by the cell selection rule
        c_cut: Positive rational scaling the cutting parameter
        max_test_lines: Cap on the test set size (0 keeps every line)

    Raises:
        ValueError: If any parameter is out of range
    """

    b: int = 8
    beta: Fraction = Fraction(1, 10)
    c_cut: Fraction = Fraction(1, 4)
    max_test_lines: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", Fraction(self.beta))
        object.__setattr__(self, "c_cut", Fraction(self.c_cut))
        if self.b < 4 or self.b & (self.b - 1):
            raise ValueError(f"RefineConfig b must be a power of two >= 4, got: {self.b}")
        if not 0 < self.beta < 1:
            raise ValueError(f"RefineConfig beta must be in (0, 1), got: {self.beta}")
        if self.c_cut <= 0:
            raise ValueError(f"RefineConfig c_cut must be positive, got: {self.c_cut}")
        if self.max_test_lines < 0:
            raise ValueError(
                f"RefineConfig max_test_lines must be >= 0, got: {self.max_test_lines}"
            )

    @property
    def log2_b(self) -> int:
        """``ceil(log2 b)``."""
        return (self.b - 1).bit_length()


@functools.lru_cache(maxsize=4096)
def weight_exponent(lam: int, b: int) -> int:
    """``ceil(lam * log2(1 + 1/b))``: the least k with ``2**k * b**lam >= (b+1)**lam``."""
    if lam <= 0:
        return 0
    num = (b + 1) ** lam
    den = b**lam
    k = max(num.bit_length() - den.bit_length() - 1, 0)
    while (den << k) < num:
        k += 1
    return k


def msb(value: int) -> int | None:
    return value.bit_length() - 1 if value > 0 else None


@dataclass(frozen=True)
class ArrangementVertex:
    """A vertex of the test-set arrangement and the lines through it."""

    point: Point
    lines: tuple[int, ...]


def arrangement_vertices(lines: Sequence[Line]) -> tuple[ArrangementVertex, ...]:
    """Distinct pairwise intersections of ``lines``, grouped by location."""
    through: dict[tuple[Fraction, Fraction], set[int]] = {}
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            p = intersect_lines(lines[i], lines[j])
            if p is not None:
                s = through.setdefault(p.key(), set())
                s.add(i)
                s.add(j)
    return tuple(
        ArrangementVertex(Point(x, y), tuple(sorted(through[(x, y)])))
        for x, y in sorted(through)
    )


@dataclass(frozen=True)
class CellSeed:
    """A cell handed to :func:`refine` with its points.

    ``lines`` and ``vertices`` optionally restrict which test lines and
    vertices are considered for the cell (a parent's crossing lines and
    vertices are a superset of any child's).
    """

    cell: SimplexCell
    points: tuple[int, ...]
    lines: tuple[int, ...] | None = None
    vertices: tuple[int, ...] | None = None


@dataclass(slots=True)
class RefineCellState:
    """Mutable per-cell bookkeeping of one refinement run."""

    id: int
    cell: SimplexCell
    points: tuple[int, ...]
    crossing: list[int] = field(default_factory=list)
    vertices: list[int] = field(default_factory=list)
    W: int = 0
    N: int = 0
    processed: bool = False

    @property
    def I_E(self) -> int | None:  # noqa: N802
        return msb(self.W)

    @property
    def I_F(self) -> int | None:  # noqa: N802
        return msb(self.N)


@dataclass(frozen=True)
class CuttingRecord:
    """A cutting computed while processing ``cell_id``, kept for audits."""

    cell_id: int
    lines: WeightedLineSet
    r: Fraction
    cutting: Cutting


@dataclass(frozen=True)
class RefineResult:
    """Subcells produced by :func:`refine`.

    Attributes:
        subcells: Subcells grouped by parent id, ids 0..len-1
        points: Point ids of each subcell
        parents: Parent cell id of each subcell
        seeds: Seeds for refining the subcells further
        order: Cell ids in processing order
        lam: Final crossing counter per test line
        trace: One line per processed cell when tracing was requested
        cuttings: Every cutting computed, when auditing was requested
    """

    subcells: tuple[SimplexCell, ...]
    points: tuple[tuple[int, ...], ...]
    parents: tuple[int, ...]
    seeds: tuple[CellSeed, ...]
    order: tuple[int, ...]
    lam: tuple[int, ...]
    trace: tuple[str, ...] = ()
    cuttings: tuple[CuttingRecord, ...] = ()

    @property
    def max_crossing(self) -> int:
        return max(self.lam, default=0)

    @property
    def subcell_count(self) -> int:
        return len(self.subcells)


# ========== Selection rules ==========


def _first_class(state: RefineCellState, beta: Fraction, log2_b: int) -> bool:
    i_f, i_e = state.I_F, state.I_E
    if i_f is None:
        return False
    if i_e is None:
        return True
    return (1 - beta) / (1 + beta) * log2_b + i_f >= 2 * i_e


def split_classes(
    states: Sequence[RefineCellState], cfg: RefineConfig, log2_b: int | None = None
) -> tuple[list[RefineCellState], list[RefineCellState]]:
    """Partition unprocessed cells into the vertex-heavy and the line-heavy class."""
    j = cfg.log2_b if log2_b is None else log2_b
    first = [s for s in states if _first_class(s, cfg.beta, j)]
    second = [s for s in states if not _first_class(s, cfg.beta, j)]
    return first, second


def select_cell(
    states: Sequence[RefineCellState], i: int, cfg: RefineConfig, log2_b: int | None = None
) -> int:
    """Id of the next cell to process among the ``i`` unprocessed ``states``."""
    if not states:
        raise ValueError("select_cell needs at least one unprocessed cell")
    first, second = split_classes(states, cfg, log2_b)
    if first and (2 * len(first) >= i or not second):
        return min(first, key=lambda s: (s.I_F, s.id)).id
    return min(
        second, key=lambda s: (s.I_E is not None, s.I_E if s.I_E is not None else 0, s.id)
    ).id


def ri_branch(state: RefineCellState, cfg: RefineConfig, log2_b: int | None = None) -> int:
    j = cfg.log2_b if log2_b is None else log2_b
    i_e, i_f = state.I_E, state.I_F
    if i_e is None:
        return 2
    if i_f is None:
        return 1
    lhs = i_e - Fraction(i_f, 2)
    rhs = (1 / (1 + cfg.beta) - Fraction(1, 2)) * j
    return 1 if lhs > rhs else 2


def compute_ri(state: RefineCellState, cfg: RefineConfig, log2_b: int | None = None) -> Fraction:
    """The cutting parameter for ``state``, a power-of-two lower bound clamped to >= 1."""
    j = cfg.log2_b if log2_b is None else log2_b
    branch = ri_branch(state, cfg, j)
    i_e, i_f = state.I_E, state.I_F
    if branch == 1:
        exponent = math.floor(Fraction(j) / (1 + cfg.beta))
    elif i_e is None:
        return Fraction(1)
    else:
        exponent = math.floor(i_e - Fraction(i_f or 0, 2) + Fraction(j, 2))
    return max(cfg.c_cut * Fraction(2) ** exponent, Fraction(1))


# ========== Point-budget cuts ==========


def _fan_order(v: Point, pts: Sequence[Point]) -> list[Point]:
    def cmp(p: Point, q: Point) -> int:
        o = orient(v, p, q)
        if o:
            return -o
        dp = (p.x - v.x) ** 2 + (p.y - v.y) ** 2
        dq = (q.x - v.x) ** 2 + (q.y - v.y) ** 2
        if dp != dq:
            return -1 if dp < dq else 1
        return (p.id > q.id) - (p.id < q.id)

    at_v = sorted((p for p in pts if p.key() == v.key()), key=lambda p: p.id)
    rest = [p for p in pts if p.key() != v.key()]
    return at_v + sorted(rest, key=functools.cmp_to_key(cmp))


@dataclass(frozen=True)
class _Chord:
    """A cut of a cell into two simplices and the points going to each."""

    line: Line
    low: ConvexRegion
    high: ConvexRegion
    low_pts: list[Point]
    high_pts: list[Point]


def _simplex_piece(region: ConvexRegion) -> ConvexRegion | None:
    if not region.has_interior:
        return None
    region = region.reduced()
    return region if len(region.halfplanes) <= 3 else None


def _chord(
    cell: ConvexRegion, ln: Line, low_pts: list[Point], high_pts: list[Point]
) -> _Chord | None:
    flag = 0
    for p in low_pts:
        flag = side(ln, p)
        if flag:
            break
    else:
        for p in high_pts:
            flag = -side(ln, p)
            if flag:
                break
    if not flag:
        return None
    low = _simplex_piece(cell.with_halfplane(HalfPlane(ln, flag)))
    high = _simplex_piece(cell.with_halfplane(HalfPlane(ln, -flag)))
    if low is None or high is None:
        return None
    if not all(low.contains_point(p) for p in low_pts):
        return None
    if not all(high.contains_point(p) for p in high_pts):
        return None
    return _Chord(ln, low, high, low_pts, high_pts)


def _directional_cut(
    cell: ConvexRegion, pts: Sequence[Point], take: int, a: int, b: int
) -> _Chord | None:
    """Cut along ``a*x + b*y = c`` with the ``take`` smallest projections below."""
    ordered = sorted(pts, key=lambda p: (a * p.x + b * p.y, a * p.y - b * p.x, p.id))
    lo = a * ordered[take - 1].x + b * ordered[take - 1].y
    hi = a * ordered[take].x + b * ordered[take].y
    ln = Line.from_coeffs(a, b, -(lo + hi) / 2)
    return _chord(cell, ln, ordered[:take], ordered[take:])


def _vertex_cut(
    cell: ConvexRegion, v: Point, pts: Sequence[Point], take: int
) -> _Chord | None:
    """Cut through the corner ``v`` with the first ``take`` points by angle on one side."""
    ordered = _fan_order(v, pts)
    p, q = ordered[take - 1], ordered[take]
    if q.key() == v.key():
        return None
    through = q
    if p.key() != v.key() and orient(v, p, q) != 0:
        through = Point((p.x + q.x) / 2, (p.y + q.y) / 2)
    return _chord(cell, Line.through(v, through), ordered[:take], ordered[take:])


def _candidates(
    cell: ConvexRegion,
    pts: Sequence[Point],
    take: int,
    lines: Sequence[Line],
    weights: Sequence[int],
) -> list[_Chord]:
    """Valid one-simplex cuts, vertical first, then corners, then parallel directions."""
    out: list[_Chord | None] = [_directional_cut(cell, pts, take, 1, 0)]
    for v in sorted(cell.vertices_ccw(), key=lambda p: p.key()):
        out.append(_vertex_cut(cell, v, pts, take))
    heavy = sorted(range(len(lines)), key=lambda i: (-weights[i], i))[:3]
    normals: dict[tuple[int, int], None] = {(1, 0): None}
    for ln in [lines[i] for i in heavy] + [h.line for h in cell.halfplanes]:
        unit = Line.from_coeffs(ln.a, ln.b, 0)
        normal = (unit.a, unit.b)
        if normal not in normals:
            normals[normal] = None
            out.append(_directional_cut(cell, pts, take, *normal))
    return [c for c in out if c is not None]


def _bisect(
    cell: ConvexRegion, pts: Sequence[Point], cap: int, depth: int = 0
) -> list[tuple[ConvexRegion, list[Point]]]:
    if len(pts) <= cap:
        return [(cell, list(pts))]
    if depth > 64:
        raise InvariantViolation("point-budget subdivision did not converge", cell)
    ordered = sorted(pts, key=lambda p: (p.x, p.y, p.id))
    half = len(ordered) // 2
    left_pts, right_pts = ordered[:half], ordered[half:]
    for x in (left_pts[-1].x, right_pts[0].x):
        ln = Line.vertical(x)
        left = cell.with_halfplane(HalfPlane(ln, -1))
        right = cell.with_halfplane(HalfPlane(ln, 1))
        if left.has_interior and right.has_interior:
            break
    else:
        raise InvariantViolation("cannot bisect an over-full cell", cell)
    out: list[tuple[ConvexRegion, list[Point]]] = []
    for region, group in ((left, left_pts), (right, right_pts)):
        for piece, members in _assign_pieces(region.reduced(), group):
            out.extend(_bisect(piece, members, cap, depth + 1))
    return out


def _assign_pieces(
    region: ConvexRegion, pts: Sequence[Point]
) -> list[tuple[ConvexRegion, list[Point]]]:
    pieces = [p for p in region.decompose() if p.has_interior]
    groups: list[list[Point]] = [[] for _ in pieces]
    for p in pts:
        for k, piece in enumerate(pieces):
            if piece.contains_point(p):
                groups[k].append(p)
                break
        else:
            raise InvariantViolation("point lost while triangulating a cell", p)
    return [(piece, g) for piece, g in zip(pieces, groups) if g]


def _split(
    cell: ConvexRegion,
    pts: list[Point],
    cap: int,
    lines: Sequence[Line],
    weights: Sequence[int],
    out: list[tuple[ConvexRegion, list[Point]]],
) -> None:
    if len(pts) <= cap:
        out.append((cell, pts))
        return
    pieces = -(-len(pts) // cap)
    take = cap * ((pieces + 1) // 2)
    best: tuple[int, _Chord] | None = None
    for chord in _candidates(cell, pts, take, lines, weights):
        score = sum(
            w
            for ln, w in zip(lines, weights)
            if chord.low.crosses(ln) and chord.high.crosses(ln)
        )
        if best is None or score < best[0]:
            best = (score, chord)
    if best is None:
        logger.warning("No one-simplex cut for %d points; bisecting vertically", len(pts))
        out.extend(_bisect(cell, pts, cap))
        return
    chord = best[1]
    for piece, group in ((chord.low, chord.low_pts), (chord.high, chord.high_pts)):
        keep = [i for i, ln in enumerate(lines) if piece.crosses(ln)]
        _split(piece, group, cap, [lines[i] for i in keep], [weights[i] for i in keep], out)


def split_to_budget(
    cell: ConvexRegion,
    pts: Sequence[Point],
    cap: int,
    lines: Sequence[Line] = (),
    weights: Sequence[int] | None = None,
) -> list[tuple[SimplexCell, list[Point]]]:
    """Cut ``cell`` into exactly ``ceil(len(pts)/cap)`` pieces of at most ``cap`` points.

    Every cut is a line splitting one simplex into two, with ``cap`` times
    half the remaining piece count on one side. Candidates are the vertical
    cut, cuts through each corner, and cuts parallel to the three heaviest
    of ``lines`` and to the cell's own boundary. The one crossed by the least
    weight of ``lines`` on both sides wins, earlier candidates on ties.
    A vertical bisection remains as the last resort.
    """
    weights = [1] * len(lines) if weights is None else weights
    if len(weights) != len(lines):
        raise ValueError(
            f"split_to_budget needs one weight per line, got: {len(weights)} for {len(lines)}"
        )
    if cap < 1:
        raise ValueError(f"split_to_budget cap must be >= 1, got: {cap}")
    pieces: list[tuple[ConvexRegion, list[Point]]] = []
    if pts:
        _split(cell, list(pts), cap, lines, weights, pieces)
    out: list[tuple[SimplexCell, list[Point]]] = []
    for region, members in pieces:
        for piece, group in _assign_pieces(region, members):
            out.append((SimplexCell.from_region(piece), group))
    return out


# ========== Engine ==========


class _RefineRun:
    """One refinement run; owns all mutable state."""

    def __init__(
        self,
        points: Mapping[int, Point],
        lines: Sequence[Line],
        vertices: Sequence[ArrangementVertex],
        seeds: Sequence[CellSeed],
        cfg: RefineConfig,
        t: int,
        b: int,
        audit: bool,
        trace: bool,
    ) -> None:
        self.points = points
        self.lines = lines
        self.vertices = vertices
        self.cfg = cfg
        self.t = t
        self.b = b
        self.log2_b = (b - 1).bit_length()
        self.audit = audit
        self.want_trace = trace
        self.cap = max(1, math.ceil(Fraction(2 * len(points), b * t)))
        self.cut_cap = max(1, min(max(b // 4, 2), b // 2))
        self.lam = [0] * len(lines)
        self.line_exp = [0] * len(lines)
        self.vertex_lam = [0] * len(vertices)
        self.vertex_exp = [0] * len(vertices)
        self.owner = [-1] * len(vertices)
        self.line_vertices: list[list[int]] = [[] for _ in lines]
        for vi, tv in enumerate(vertices):
            for h in tv.lines:
                self.line_vertices[h].append(vi)
        self.line_cells: list[set[int]] = [set() for _ in lines]
        self.trace: list[str] = []
        self.cuttings: list[CuttingRecord] = []
        self.states: list[RefineCellState] = []
        for k, seed in enumerate(seeds):
            cand = range(len(lines)) if seed.lines is None else seed.lines
            crossing = [h for h in cand if seed.cell.crosses(lines[h])]
            state = RefineCellState(k, seed.cell, seed.points, crossing, W=len(crossing))
            for h in crossing:
                self.line_cells[h].add(k)
            self.states.append(state)
        for k, seed in enumerate(seeds):
            cand_v = range(len(vertices)) if seed.vertices is None else seed.vertices
            state = self.states[k]
            for vi in cand_v:
                if self.owner[vi] == -1 and seed.cell.contains_point(vertices[vi].point):
                    self.owner[vi] = k
                    state.vertices.append(vi)
            state.N = len(state.vertices)

    def run(self) -> RefineResult:
        order: list[int] = []
        produced: dict[int, list[tuple[SimplexCell, list[Point]]]] = {}
        for i in range(len(self.states), 0, -1):
            pending = [s for s in self.states if not s.processed]
            first, _ = split_classes(pending, self.cfg, self.log2_b)
            k = select_cell(pending, i, self.cfg, self.log2_b)
            state = self.states[k]
            branch = ri_branch(state, self.cfg, self.log2_b)
            r_i = compute_ri(state, self.cfg, self.log2_b)
            subcells, r_used = self.process_cell(state, r_i)
            produced[k] = subcells
            order.append(k)
            line = f"{i}, {k}, {len(first)}, {branch}, {r_used}, {len(subcells)}"
            logger.debug("refine step %s", line)
            if self.want_trace:
                self.trace.append(line)
            if self.audit:
                self._audit()
        return self._result(order, produced)

    def process_cell(
        self, state: RefineCellState, r_i: Fraction
    ) -> tuple[list[tuple[SimplexCell, list[Point]]], Fraction]:
        """Cut the selected cell, split it to the point budget, then reweight its lines."""
        subcells, r_used = self._subdivide(state, r_i)
        self._reweight(state, [sc for sc, _ in subcells])
        return subcells, r_used

    def _subdivide(
        self, state: RefineCellState, r_i: Fraction
    ) -> tuple[list[tuple[SimplexCell, list[Point]]], Fraction]:
        r = r_i
        pts = [self.points[pid] for pid in state.points]
        cells: list[SimplexCell] = [state.cell]
        groups = [pts]
        if self.cut_cap >= 2 and state.crossing:
            wl = WeightedLineSet(
                tuple(self.lines[h] for h in state.crossing),
                tuple(self.line_exp[h] for h in state.crossing),
            )
            while True:
                cut = cut_weighted_bounded(wl, state.cell, 4 * r, self.cut_cap)
                if cut is not None:
                    groups = self._group(cut.cells, pts)
                    if sum(-(-len(g) // self.cap) for g in groups) <= self.b:
                        break
                r /= 2
            cells = list(cut.cells)
            if self.audit:
                self.cuttings.append(CuttingRecord(state.id, wl, 4 * r, cut))
        out: list[tuple[SimplexCell, list[Point]]] = []
        for c, g in zip(cells, groups):
            if not g:
                continue
            cross = [h for h in state.crossing if c.crosses(self.lines[h])]
            out.extend(
                split_to_budget(
                    c,
                    g,
                    self.cap,
                    [self.lines[h] for h in cross],
                    [1 << self.line_exp[h] for h in cross],
                )
            )
        return out, r

    @staticmethod
    def _group(cells: Sequence[SimplexCell], pts: Sequence[Point]) -> list[list[Point]]:
        groups: list[list[Point]] = [[] for _ in cells]
        for p in pts:
            for j, c in enumerate(cells):
                if c.contains_point(p):
                    groups[j].append(p)
                    break
            else:
                raise InvariantViolation("point outside every cutting cell", p.id)
        return groups

    def _reweight(self, state: RefineCellState, subcells: Sequence[SimplexCell]) -> None:
        state.processed = True
        for h in state.crossing:
            self.line_cells[h].discard(state.id)
        for h in state.crossing:
            c = sum(1 for sc in subcells if sc.crosses(self.lines[h]))
            if c == 0:
                continue
            self.lam[h] += c
            old = self.line_exp[h]
            new = weight_exponent(self.lam[h], self.b)
            if new != old:
                self.line_exp[h] = new
                delta = (1 << new) - (1 << old)
                for k in self.line_cells[h]:
                    self.states[k].W += delta
            for vi in self.line_vertices[h]:
                self.vertex_lam[vi] += c
                old_v = self.vertex_exp[vi]
                new_v = weight_exponent(self.vertex_lam[vi], self.b)
                if new_v == old_v:
                    continue
                self.vertex_exp[vi] = new_v
                k = self.owner[vi]
                if k >= 0 and not self.states[k].processed:
                    self.states[k].N += (1 << new_v) - (1 << old_v)

    def _audit(self) -> None:
        for h, lam in enumerate(self.lam):
            if self.line_exp[h] != weight_exponent(lam, self.b):
                raise InvariantViolation("line exponent differs from its counter", h)
        for state in self.states:
            if state.processed:
                continue
            w = sum(1 << weight_exponent(self.lam[h], self.b) for h in state.crossing)
            if w != state.W:
                raise InvariantViolation(
                    "incremental W' differs from recomputation", (state.id, state.W, w)
                )
            n = 0
            for vi in state.vertices:
                total = sum(self.lam[h] for h in self.vertices[vi].lines)
                n += 1 << weight_exponent(total, self.b)
            if n != state.N:
                raise InvariantViolation(
                    "incremental N' differs from recomputation", (state.id, state.N, n)
                )

    def _result(
        self, order: list[int], produced: dict[int, list[tuple[SimplexCell, list[Point]]]]
    ) -> RefineResult:
        subcells: list[SimplexCell] = []
        points: list[tuple[int, ...]] = []
        parents: list[int] = []
        seeds: list[CellSeed] = []
        for k in range(len(self.states)):
            state = self.states[k]
            vhint = tuple(state.vertices)
            for sc, members in produced[k]:
                sid = len(subcells)
                ids = tuple(sorted(p.id for p in members))
                cell = sc.with_id(sid)
                subcells.append(cell)
                points.append(ids)
                parents.append(k)
                seeds.append(CellSeed(cell, ids, tuple(state.crossing), vhint))
        return RefineResult(
            subcells=tuple(subcells),
            points=tuple(points),
            parents=tuple(parents),
            seeds=tuple(seeds),
            order=tuple(order),
            lam=tuple(self.lam),
            trace=tuple(self.trace),
            cuttings=tuple(self.cuttings),
        )


def _check_preconditions(
    points: Mapping[int, Point], seeds: Sequence[CellSeed], t: int
) -> None:
    n = len(points)
    budget = math.ceil(Fraction(2 * n, t))
    seen: dict[int, int] = {}
    for k, seed in enumerate(seeds):
        if len(seed.points) > budget:
            raise PreconditionError(
                f"Cell {k} holds {len(seed.points)} points, more than the budget {budget}"
            )
        for pid in seed.points:
            if pid not in points:
                raise PreconditionError(f"Cell {k} references unknown point {pid}")
            if pid in seen:
                raise PreconditionError(
                    f"Point {pid} is assigned to both cell {seen[pid]} and cell {k}"
                )
            seen[pid] = k
    missing = sorted(set(points) - set(seen))
    if missing:
        raise PreconditionError(f"Points {missing[:5]} are assigned to no cell")


def refine(
    points: Sequence[Point],
    lines: Sequence[Line],
    cells: Sequence[CellSeed] | Sequence[tuple[SimplexCell, Sequence[int]]],
    cfg: RefineConfig,
    *,
    t: int | None = None,
    branching: int | None = None,
    vertices: Sequence[ArrangementVertex] | None = None,
    audit: bool = False,
    trace: bool = False,
) -> RefineResult:
    """Refine ``cells`` into subcells of at most ``ceil(2n/(b*t))`` points each.

    Args:
        points: The full point set; ids must be unique
        lines: Test lines whose crossings are balanced
        cells: Interior-disjoint cells covering the points
        cfg: Engine parameters
        t: Nominal cell count (defaults to ``len(cells)``)
        branching: Override of ``cfg.b`` for this run (any int >= 1)
        vertices: Precomputed :func:`arrangement_vertices` of ``lines``
        audit: Recompute all weights after every step and keep every cutting
        trace: Collect one trace line per processed cell

    Raises:
        PreconditionError: If a cell is over budget or the cells do not
            partition the points
    """
    seeds = [c if isinstance(c, CellSeed) else CellSeed(c[0], tuple(c[1])) for c in cells]
    if not seeds:
        raise PreconditionError("refine needs at least one cell")
    by_id: dict[int, Point] = {}
    for p in points:
        if p.id in by_id:
            raise PreconditionError(f"Point id {p.id} occurs twice")
        by_id[p.id] = p
    t_nominal = len(seeds) if t is None else t
    if t_nominal < len(seeds):
        raise PreconditionError(f"t must be >= the number of cells, got: {t_nominal}")
    _check_preconditions(by_id, seeds, t_nominal)
    b = cfg.b if branching is None else branching
    if b < 1:
        raise ValueError(f"branching must be >= 1, got: {b}")
    verts = arrangement_vertices(lines) if vertices is None else vertices
    run = _RefineRun(by_id, lines, verts, seeds, cfg, t_nominal, b, audit, trace)
    result = run.run()
    logger.info(
        "Refined %d cells into %d subcells (max crossing %d)",
        len(seeds),
        result.subcell_count,
        result.max_crossing,
    )
    return result
