"""Text formats for datasets, query batches, results and serialized trees.

Datasets and query batches are line oriented. The first line is a format
header; blank lines and further ``#`` lines are ignored. Every other line is
one record, a tag followed by rationals written as ``num`` or ``num/den``::

    # partree-dataset v1
    P 3 1/2
    S 0 0 4 1
    T 0 0 4 0 0 4

    # partree-queries v1
    T 0 0 8 0 0 8        triangle range
    H 1 -1 0 1           halfplane side*(a*x + b*y + c) >= 0
    Q 1 1                stabbing point
    L 1 -1 0             line a*x + b*y + c = 0
    G 0 0 3 3            query segment
    R 0 0 1 2            ray origin and direction

Dataset records are numbered per record kind; queries across the whole batch.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import DatasetFormatError
from .geometry import (
    HalfPlane,
    Line,
    Point,
    Ray,
    Segment,
    Triangle,
    as_scalar,
    format_scalar,
)
from .rangecount import query_halfplanes
from .tree import PartitionTree

DATASET_HEADER = "# partree-dataset v1"
QUERIES_HEADER = "# partree-queries v1"
RESULTS_HEADER = "# partree-results v1"
STATS_FORMAT = "partree-stats v1"

_DATASET_ARITY = {"P": 2, "S": 4, "T": 6}
_QUERY_ARITY = {"T": 6, "H": 4, "Q": 2, "L": 3, "G": 4, "R": 4}


def _validate_path(path: str | Path, base_dir: Path | None = None) -> Path:
    """Resolve ``path``, rejecting null bytes and escapes from ``base_dir``.

    Raises:
        ValueError: If the path is invalid or leaves base_dir
    """
    raw = str(path)
    if "\x00" in raw:
        raise ValueError(f"Invalid path (contains null bytes): {raw!r}")
    resolved = Path(raw).resolve()
    if base_dir is not None:
        try:
            resolved.relative_to(base_dir.resolve())
        except ValueError:
            raise ValueError(f"Path {raw!r} is outside allowed directory {base_dir}") from None
    return resolved


# ========== Datasets ==========


@dataclass
class Dataset:
    points: list[Point] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    triangles: list[Triangle] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.points) + len(self.segments) + len(self.triangles)


def _records(
    text: str, header: str, arity: dict[str, int]
) -> Iterable[tuple[int, str, list[Fraction]]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != header:
        found = lines[0].strip() if lines else ""
        raise DatasetFormatError(f"expected header {header!r}, got: {found!r}", 1)
    for no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, *fields = line.split()
        if tag not in arity:
            raise DatasetFormatError(f"unknown record tag {tag!r}", no)
        if len(fields) != arity[tag]:
            raise DatasetFormatError(
                f"record {tag} needs {arity[tag]} values, got: {len(fields)}", no
            )
        try:
            values = [as_scalar(f) for f in fields]
        except (ValueError, ZeroDivisionError) as exc:
            raise DatasetFormatError(f"bad rational in {line!r}: {exc}", no) from None
        yield no, tag, values


def parse_dataset(text: str) -> Dataset:
    """Parse dataset text.

    Raises:
        DatasetFormatError: On a bad header, tag, arity, value or a degenerate record
    """
    ds = Dataset()
    for no, tag, v in _records(text, DATASET_HEADER, _DATASET_ARITY):
        try:
            if tag == "P":
                ds.points.append(Point(v[0], v[1], id=len(ds.points)))
            elif tag == "S":
                ds.segments.append(
                    Segment(Point(v[0], v[1]), Point(v[2], v[3]), id=len(ds.segments))
                )
            else:
                ds.triangles.append(
                    Triangle(
                        Point(v[0], v[1]),
                        Point(v[2], v[3]),
                        Point(v[4], v[5]),
                        id=len(ds.triangles),
                    )
                )
        except ValueError as exc:
            raise DatasetFormatError(str(exc), no) from None
    return ds


def _pt(p: Point) -> str:
    return f"{format_scalar(p.x)} {format_scalar(p.y)}"


def format_dataset(ds: Dataset) -> str:
    out = [DATASET_HEADER]
    out.extend(f"P {_pt(p)}" for p in ds.points)
    out.extend(f"S {_pt(s.p)} {_pt(s.q)}" for s in ds.segments)
    out.extend(f"T {_pt(t.a)} {_pt(t.b)} {_pt(t.c)}" for t in ds.triangles)
    return "\n".join(out) + "\n"


def load_dataset(path: str | Path) -> Dataset:
    return parse_dataset(_validate_path(path).read_text(encoding="utf-8"))


def save_dataset(ds: Dataset, path: str | Path) -> Path:
    target = _validate_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_dataset(ds), encoding="utf-8")
    return target


# ========== Queries ==========


@dataclass(frozen=True)
class Query:
    """One query record; ``values`` are the record's rationals in file order."""

    id: int
    kind: str
    values: tuple[Fraction, ...]

    def _points(self) -> list[Point]:
        v = self.values
        return [Point(v[i], v[i + 1]) for i in range(0, len(v) - 1, 2)]

    def triangle_corners(self) -> tuple[Point, Point, Point]:
        a, b, c = self._points()
        return a, b, c

    def halfplanes(self) -> tuple[HalfPlane, ...]:
        """The region of a ``T`` or ``H`` query as closed halfplanes."""
        if self.kind == "H":
            a, b, c, s = self.values
            if s not in (1, -1):
                raise ValueError(f"halfplane side must be 1 or -1, got: {format_scalar(s)}")
            return (HalfPlane.from_coeffs(s * a, s * b, s * c),)
        return query_halfplanes(*self.triangle_corners())

    def point(self) -> Point:
        return Point(self.values[0], self.values[1])

    def line(self) -> Line:
        a, b, c = self.values
        return Line.from_coeffs(a, b, c)

    def segment(self) -> Segment:
        p, q = self._points()
        return Segment(p, q, id=self.id)

    def ray(self) -> Ray:
        ox, oy, dx, dy = self.values
        return Ray.from_direction(Point(ox, oy), dx, dy)

    def to_record(self) -> str:
        return " ".join([self.kind, *(format_scalar(v) for v in self.values)])


def parse_queries(text: str) -> list[Query]:
    """Parse a query batch; ids count all queries in file order.

    Raises:
        DatasetFormatError: On a bad header, tag, arity or value
    """
    out = []
    for no, tag, v in _records(text, QUERIES_HEADER, _QUERY_ARITY):
        q = Query(len(out), tag, tuple(v))
        try:
            _check_query(q)
        except ValueError as exc:
            raise DatasetFormatError(str(exc), no) from None
        out.append(q)
    return out


def _check_query(q: Query) -> None:
    if q.kind == "H":
        q.halfplanes()
    elif q.kind == "L":
        q.line()
    elif q.kind == "G":
        q.segment()
    elif q.kind == "R":
        q.ray()


def format_queries(queries: Sequence[Query]) -> str:
    return "\n".join([QUERIES_HEADER, *(q.to_record() for q in queries)]) + "\n"


def load_queries(path: str | Path) -> list[Query]:
    return parse_queries(_validate_path(path).read_text(encoding="utf-8"))


# ========== Results and stats ==========


def format_results(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text with the versioned header line, then the column row, then ``rows``."""
    buf = io.StringIO()
    buf.write(RESULTS_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(data: str | bytes) -> str:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    return hashlib.sha256(raw).hexdigest()


def stats_document(kind: str, stats: dict[str, Any]) -> dict[str, Any]:
    return {"format": STATS_FORMAT, "structure": kind, **stats}


def write_text(path: str | Path, text: str) -> Path:
    target = _validate_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return target


# ========== Trees ==========


def save_tree(tree: PartitionTree, path: str | Path) -> Path:
    return write_text(path, json.dumps(tree.to_dict(), indent=2, sort_keys=True) + "\n")


def load_tree(path: str | Path) -> PartitionTree:
    """Load a tree written by :func:`save_tree`.

    Raises:
        DatasetFormatError: If the file is not valid JSON or not a tree
    """
    target = _validate_path(path)
    try:
        data = json.loads(target.read_text(encoding="utf-8"))
        return PartitionTree.from_dict(data)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"cannot load tree from {target}: {exc}") from None
