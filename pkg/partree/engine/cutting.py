"""Cuttings: subdivide a simplex so that every cell is crossed by few lines.

A ``(1/r)``-cutting of a weighted line set inside a simplex cell is a
collection of simplex cells covering it, with pairwise disjoint interiors,
such that the lines crossing any one cell weigh at most ``1/r`` of the total.

The construction is a deterministic greedy subdivision. While some cell is
over budget it is split by the crossing line that minimises the heavier of
the two children (ties to the smallest line index), and each side is
decomposed back into simplices. The splitting line crosses neither child, so
crossing weights strictly decrease and the loop terminates. Nothing here
bounds the number of cells; callers that need a bound pass ``max_cells`` to
the internal builder and fall back when it is exceeded.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from .geometry import ConvexRegion, Line, SimplexCell

logger = logging.getLogger("partree.cutting")


@dataclass(frozen=True)
class Cutting:
    """Cells of a cutting together with the lines crossing each cell.

    Attributes:
        parent: The subdivided cell
        cells: The simplex cells, ids 0..len-1
        crossing: Per cell, indices into the input line sequence
        weights: Weight of each input line
        r: The cutting parameter actually used
    """

    parent: ConvexRegion
    cells: tuple[SimplexCell, ...]
    crossing: tuple[tuple[int, ...], ...]
    weights: tuple[int, ...]
    r: Fraction

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    def cell_weight(self, index: int) -> int:
        return sum(self.weights[i] for i in self.crossing[index])

    def __len__(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class WeightedLineSet:
    """Lines with doubling exponents; line ``h`` weighs ``2**exponents[h]``."""

    lines: tuple[Line, ...]
    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.lines) != len(self.exponents):
            raise ValueError(
                f"WeightedLineSet needs one exponent per line, got: "
                f"{len(self.exponents)} for {len(self.lines)} lines"
            )
        if any(e < 0 for e in self.exponents):
            raise ValueError("WeightedLineSet exponents must be >= 0")

    @property
    def total(self) -> int:
        return sum(1 << e for e in self.exponents)


def normalize_multiset(w: WeightedLineSet) -> tuple[int, ...]:
    """Integer multiplicities approximating the weights with a small total.

    With ``q = floor(log2 W)`` and ``p = floor(log2 m)`` line ``h`` gets
    multiplicity ``2**(p + 1 + I(h) - q)`` when that exponent is non-negative
    and 1 otherwise, which keeps the multiset size below ``5m``.
    """
    m = len(w.lines)
    if m == 0:
        return ()
    q = w.total.bit_length() - 1
    p = m.bit_length() - 1
    out = []
    for e in w.exponents:
        k = p + 1 + e - q
        out.append(1 << k if k >= 0 else 1)
    return tuple(out)


def _as_cells(region: ConvexRegion) -> list[ConvexRegion]:
    return [piece for piece in region.decompose() if piece.has_interior]


def _build(
    lines: Sequence[Line],
    weights: Sequence[int],
    parent: ConvexRegion,
    r: Fraction,
    max_cells: int | None = None,
) -> Cutting | None:
    total = sum(weights)
    root = [i for i, ln in enumerate(lines) if weights[i] > 0 and parent.crosses(ln)]
    done: list[tuple[ConvexRegion, list[int]]] = []
    queue: deque[tuple[ConvexRegion, list[int]]] = deque([(parent, root)])

    def weight(ids: Sequence[int]) -> int:
        return sum(weights[i] for i in ids)

    while queue:
        region, cross = queue.popleft()
        if weight(cross) * r <= total:
            done.append((region, cross))
            continue
        best: tuple[int, int] | None = None
        best_split: tuple[ConvexRegion, list[int], ConvexRegion, list[int]] | None = None
        for i in cross:
            pos, neg = region.split(lines[i])
            if pos is None or neg is None:
                continue
            rest = [j for j in cross if j != i]
            cp = [j for j in rest if pos.crosses(lines[j])]
            cn = [j for j in rest if neg.crosses(lines[j])]
            score = (max(weight(cp), weight(cn)), i)
            if best is None or score < best:
                best = score
                best_split = (pos, cp, neg, cn)
        if best_split is None:
            done.append((region, cross))
            continue
        pos, cp, neg, cn = best_split
        for side, side_cross in ((pos, cp), (neg, cn)):
            pieces = _as_cells(side)
            for piece in pieces:
                piece_cross = side_cross
                if len(pieces) > 1:
                    piece_cross = [j for j in side_cross if piece.crosses(lines[j])]
                queue.append((piece, piece_cross))
        if max_cells is not None and len(done) + len(queue) > max_cells:
            return None

    cells = tuple(SimplexCell.from_region(reg, id=k) for k, (reg, _) in enumerate(done))
    crossing = tuple(tuple(cross) for _, cross in done)
    logger.debug("Cutting with r=%s: %d cells", r, len(cells))
    return Cutting(parent, cells, crossing, tuple(weights), r)


def _trivial(
    lines: Sequence[Line], weights: Sequence[int], parent: ConvexRegion, r: Fraction
) -> Cutting:
    cell = SimplexCell.from_region(parent, id=0)
    cross = tuple(i for i, ln in enumerate(lines) if weights[i] > 0 and parent.crosses(ln))
    return Cutting(parent, (cell,), (cross,), tuple(weights), r)


def cut_unweighted(
    lines: Sequence[Line], parent: ConvexRegion, r: Fraction | int
) -> Cutting:
    """A ``(1/r)``-cutting of ``lines`` (each weighing 1) inside ``parent``."""
    r = Fraction(r)
    weights = [1] * len(lines)
    if r <= 1 or not lines:
        return _trivial(lines, weights, parent, r)
    out = _build(lines, weights, parent, r)
    assert out is not None
    return out


def cut_weighted_bounded(
    w: WeightedLineSet, parent: ConvexRegion, r: Fraction | int, max_cells: int | None
) -> Cutting | None:
    """Like :func:`cut_weighted` but gives up once more than ``max_cells`` cells appear."""
    r = Fraction(r)
    weights = [1 << e for e in w.exponents]
    if r <= 1 or not w.lines:
        return _trivial(w.lines, weights, parent, r)
    if max_cells is not None and max_cells < 2:
        return None
    return _build(w.lines, weights, parent, r, max_cells=max_cells)


def cut_weighted(w: WeightedLineSet, parent: ConvexRegion, r: Fraction | int) -> Cutting:
    """A ``(1/r)``-cutting of a weighted line set.

    Crossing weights are budgeted against ``W/r`` directly, so lines of equal
    weight give exactly the cells of :func:`cut_unweighted`.
    """
    out = cut_weighted_bounded(w, parent, r, None)
    assert out is not None
    return out


def cut_multiset(w: WeightedLineSet, parent: ConvexRegion, r: Fraction | int) -> Cutting:
    """A ``(1/r)``-cutting built from the small multiset of :func:`normalize_multiset`.

    The multiplicities are cut unweighted with parameter ``5r``. Every
    multiplicity is at least ``w(h) * 2**(p+1) / W`` and the multiset holds
    at most ``5m`` copies, so the result is a ``(1/r)``-cutting for the true
    weights as well. The returned :class:`Cutting` carries the multiplicities.
    """
    r = Fraction(r)
    mult = normalize_multiset(w)
    if r <= 1 or not w.lines:
        return _trivial(w.lines, mult, parent, r)
    out = _build(w.lines, mult, parent, 5 * r)
    assert out is not None
    return out
