"""Partree client: the public API over the engine.

A :class:`Workspace` owns one dataset and builds each query structure the
first time it is needed. All structures are immutable once built, so query
batches can fan out over threads.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, TypeVar

from partree.engine.cutting import normalize_multiset
from partree.engine.datagen import generate_dataset, generate_queries
from partree.engine.errors import InvariantViolation
from partree.engine.geometry import Point, Segment, ShearTransform, format_scalar
from partree.engine.oracle import (
    OracleReport,
    brute_count_region,
    brute_count_triangle,
    brute_detect,
    brute_first_hit,
    brute_line_hits,
    brute_seg_intersect,
    brute_stab,
    verify_cutting,
)
from partree.engine.persistence import Dataset, Query, load_dataset
from partree.engine.rangecount import RangeCountIndex, build_rangecount
from partree.engine.rayshoot import RayShootIndex, build_rayshoot
from partree.engine.segquery import (
    SegmentStore,
    WedgeLeafStructure,
    audit_storage,
    build_wedge_store,
    detect_line_with_stats,
    report_intersecting_with_stats,
    report_line,
)
from partree.engine.stabbing import StabbingIndex, build_stabbing
from partree.engine.tree import (
    PartitionTree,
    audit_tree,
    build_test_set,
    build_tree,
    cap_test_set,
    collapse_duplicates,
    crossing_profile,
)
from partree.models import BuildStats, LevelStats, QueryResult, RunConfig, ValidationResult

logger = logging.getLogger("partree.client")

STRUCTURES = ("rangecount", "stabbing", "segquery", "rayshoot")

# query record tag -> structure answering it
QUERY_STRUCTURE = {
    "T": "rangecount",
    "H": "rangecount",
    "Q": "stabbing",
    "L": "segquery",
    "G": "segquery",
    "R": "rayshoot",
}

RANDOM_PROBES = 32

# crossing checks against the full test set stop here
FULL_TEST_SET_MAX = 128

T = TypeVar("T")


def _ids(ids: Sequence[int]) -> str:
    return " ".join(str(i) for i in ids)


def _point_text(p: Point) -> str:
    return f"{format_scalar(p.x)} {format_scalar(p.y)}"


def _endpoint_sites(segments: Iterable[Segment]) -> list[Point]:
    """Endpoint representatives as the segment store numbers them (already sheared)."""
    ends = [p.with_id(2 * i + k) for i, s in enumerate(segments) for k, p in enumerate((s.p, s.q))]
    return collapse_duplicates(ends)[0]


def _level_stats(
    tree: PartitionTree, sites: Sequence[Point], cfg: RunConfig, *, full_test_set: bool = False
) -> list[LevelStats]:
    """Cells, fullest cell and query-line crossings per level below the root.

    Test lines are capped like the build unless ``full_test_set`` is set.
    """
    cap = 0 if full_test_set else cfg.max_test_lines
    test = cap_test_set(build_test_set(sites), cap) if len(sites) >= 2 else ()
    shear = ShearTransform(tree.theta)
    rand = [shear.apply_line(q.line()) for q in generate_queries("L", RANDOM_PROBES, cfg.seed)]
    test_max = crossing_profile(tree, test).per_level_max
    rand_max = crossing_profile(tree, rand).per_level_max
    return [
        LevelStats(
            level=li,
            cells=len(tree.levels[li]),
            max_points=max((tc.count for tc in tree.levels[li]), default=0),
            test_crossing_max=test_max[li - 1],
            random_crossing_max=rand_max[li - 1],
        )
        for li in range(1, len(tree.levels))
    ]


def _record_audit(
    report: OracleReport, label: str, violations: Sequence[InvariantViolation]
) -> None:
    if not violations:
        report.record(f"{label}: audit", True)
    for v in violations:
        report.record(f"{label}: {v.invariant}", False, v.witness)


class Workspace:
    """Dataset plus lazily built query structures.

    Constructor patterns:
        - ``Workspace()`` generates the dataset described by the default ``RunConfig``
        - ``Workspace(config=cfg)`` generates the dataset described by ``cfg``
        - ``Workspace("points.txt", cfg)`` loads a dataset file
        - ``Workspace(dataset, cfg)`` wraps an in-memory ``Dataset``

    Example:
        ```python
        with Workspace(config=RunConfig(n=32, seed=3)) as ws:
            q = Query(0, "T", (0, 0, 128, 0, 0, 128))
            ws.answer(q).answer
        ```

    Thread Safety:
        Structure builds are serialized by an internal RLock; built structures
        are immutable, so ``answer`` and ``run_queries`` may run concurrently.
    """

    def __init__(
        self,
        dataset: Dataset | str | Path | None = None,
        config: RunConfig | None = None,
    ) -> None:
        self.config = config or RunConfig()
        if dataset is None:
            dataset = generate_dataset(self.config.family, self.config.n, self.config.seed)
        elif isinstance(dataset, (str, Path)):
            dataset = load_dataset(dataset)
        self._dataset = dataset
        self._lock = threading.RLock()
        self._built: dict[str, Any] = {}
        self._build_ms: dict[str, float] = {}

    @property
    def dataset(self) -> Dataset:
        return self._dataset

    def close(self) -> None:
        """Drop every built structure."""
        with self._lock:
            self._built.clear()
            self._build_ms.clear()

    def __enter__(self) -> Workspace:
        return self

    def __exit__(self, *args: object) -> None:
        self.close()

    # --- Structures ---

    def available(self) -> list[str]:
        """Structures whose input the dataset supplies."""
        out = []
        if self._dataset.points:
            out.append("rangecount")
        if self._dataset.triangles:
            out.append("stabbing")
        if self._dataset.segments:
            out.extend(["segquery", "rayshoot"])
        return out

    def _get(self, name: str, build: Callable[[], T]) -> T:
        with self._lock:
            hit = self._built.get(name)
            if hit is None:
                if name not in self.available():
                    raise ValueError(f"dataset has no input for {name}")
                start = time.perf_counter()
                hit = build()
                self._build_ms[name] = (time.perf_counter() - start) * 1000
                self._built[name] = hit
            return hit  # type: ignore[no-any-return]

    def rangecount(self) -> RangeCountIndex:
        return self._get(
            "rangecount",
            lambda: build_rangecount(self._dataset.points, self.config.rangecount_config()),
        )

    def stabbing(self) -> StabbingIndex:
        return self._get(
            "stabbing",
            lambda: build_stabbing(self._dataset.triangles, self.config.stabbing_config()),
        )

    def segquery(self) -> SegmentStore[WedgeLeafStructure]:
        return self._get(
            "segquery",
            lambda: build_wedge_store(self._dataset.segments, self.config.segquery_config()),
        )

    def rayshoot(self) -> RayShootIndex:
        return self._get(
            "rayshoot",
            lambda: build_rayshoot(
                self._dataset.segments,
                self.config.segquery_config(),
                allow_shared_endpoints=self.config.allow_shared_endpoints,
            ),
        )

    def structure(self, name: str) -> Any:
        """The built structure called ``name`` (one of :data:`STRUCTURES`).

        Raises:
            ValueError: If the name is unknown or the dataset has no input for it
        """
        builders: dict[str, Callable[[], Any]] = {
            "rangecount": self.rangecount,
            "stabbing": self.stabbing,
            "segquery": self.segquery,
            "rayshoot": self.rayshoot,
        }
        if name not in builders:
            raise ValueError(f"structure must be one of {STRUCTURES}, got: {name!r}")
        return builders[name]()

    def structure_hash(self, name: str) -> str:
        return str(self.structure(name).structure_hash())

    def _top_tree(self, name: str) -> tuple[PartitionTree, list[Point]] | None:
        """The outermost partition tree of a structure with the sites it holds."""
        if name == "rangecount":
            idx = self.rangecount()
            sheared = [idx.shear.apply_point(p) for p in self._dataset.points]
            return idx.stage1, collapse_duplicates(sheared)[0]
        if name == "segquery":
            store = self.segquery()
            return store.tree, _endpoint_sites(store.segments.values())
        if name == "rayshoot":
            store_r = self.rayshoot().store
            return store_r.tree, _endpoint_sites(store_r.segments.values())
        return None

    def build_stats(self, name: str) -> BuildStats:
        """Size and crossing figures of one structure, building it if needed."""
        built = self.structure(name)
        extra: dict[str, Any] = {}
        levels: list[LevelStats] = []
        top = self._top_tree(name)
        if top is not None:
            levels = _level_stats(top[0], top[1], self.config)
        if isinstance(built, RangeCountIndex):
            extra = {
                "stage2_trees": len(built.stage2),
                "final_leaves": len(built.final_leaves()),
                "t_leaf": built.t_leaf,
            }
        elif isinstance(built, StabbingIndex):
            s = built.stats
            extra = {
                "trees": s.trees,
                "nodes": s.nodes,
                "leaves": s.leaves,
                "stored_ids": s.stored_ids,
                "space_ratio": format_scalar(s.space_ratio),
                "schedules": [list(sc) for sc in s.schedules],
            }
        else:
            store = built.store if isinstance(built, RayShootIndex) else built
            nodes = store.nodes()
            extra = {
                "edge_lists": sum(len(node.edges) for node in nodes),
                "leaf_lists": sum(1 for node in nodes if node.leaf is not None),
            }
        return BuildStats(
            structure=name,
            n=built.n,
            structure_hash=self.structure_hash(name),
            levels=levels,
            wall_ms=round(self._build_ms.get(name, 0.0), 3),
            extra=extra,
        )

    def build(self, names: Sequence[str] | None = None) -> list[BuildStats]:
        """Build ``names`` (default: every available structure) and summarize them."""
        return [self.build_stats(name) for name in (names or self.available())]

    def top_tree(self) -> PartitionTree | None:
        """The tree written by ``partree build``: range counting first, then segments."""
        for name in ("rangecount", "segquery"):
            if name in self.available():
                top = self._top_tree(name)
                assert top is not None
                return top[0]
        return None

    # --- Queries ---

    def answer(self, q: Query) -> QueryResult:
        """Answer one query record with the structure serving its kind.

        ``Q`` ids are reported only when the config enables reporting.

        Raises:
            ValueError: If the kind is unknown or the dataset lacks its input
        """
        name = QUERY_STRUCTURE.get(q.kind)
        if name is None:
            raise ValueError(f"query kind must be one of {sorted(QUERY_STRUCTURE)}, got: {q.kind}")
        detail = ""
        if q.kind in ("T", "H"):
            answer, stats = self.rangecount().count_with_stats(q.halfplanes())
        elif q.kind == "Q":
            idx = self.stabbing()
            answer, stats = idx.count_with_stats(q.point())
            if idx.reporting:
                detail = _ids(idx.report(q.point()))
        elif q.kind == "L":
            store = self.segquery()
            found, stats = detect_line_with_stats(store, q.line())
            answer = int(found)
            if self.config.reporting:
                detail = _ids(report_line(store, q.line()))
        elif q.kind == "G":
            ids, stats = report_intersecting_with_stats(self.segquery(), q.segment())
            answer, detail = len(ids), _ids(ids)
        else:
            hit, stats = self.rayshoot().shoot_with_stats(q.ray())
            answer = -1 if hit is None else hit.segment
            detail = "" if hit is None else _point_text(hit.point)
        return QueryResult(
            id=q.id,
            kind=q.kind,
            answer=answer,
            detail=detail,
            visited_cells=stats.visited,
            leaf_visits=stats.leaf_visits,
        )

    def run_queries(
        self, queries: Sequence[Query], workers: int | None = None
    ) -> list[QueryResult]:
        """Answer a batch; results come back in input order.

        Structures are built up front so that worker threads only read.
        """
        for name in sorted({QUERY_STRUCTURE.get(q.kind, "") for q in queries} - {""}):
            self.structure(name)
        workers = workers or self.config.workers
        if workers <= 1 or len(queries) <= 1:
            return [self.answer(q) for q in queries]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.answer, queries))

    def expected(self, q: Query) -> tuple[int, str]:
        """Brute-force ``(answer, detail)`` for ``q``, in the format of :meth:`answer`."""
        ds = self._dataset
        if q.kind == "T":
            return brute_count_triangle(ds.points, *q.triangle_corners()), ""
        if q.kind == "H":
            return brute_count_region(ds.points, q.halfplanes()), ""
        if q.kind == "Q":
            ids = brute_stab(ds.triangles, q.point())
            return len(ids), (_ids(ids) if self.config.reporting else "")
        if q.kind == "L":
            found = int(brute_detect(ds.segments, q.line()))
            hits = brute_line_hits(ds.segments, q.line()) if self.config.reporting else []
            return found, _ids(hits)
        if q.kind == "G":
            ids = brute_seg_intersect(ds.segments, q.segment())
            return len(ids), _ids(ids)
        hit = brute_first_hit(ds.segments, q.ray())
        return (-1, "") if hit is None else (hit[0], _point_text(hit[1]))

    def default_queries(self, per_kind: int = 16) -> list[Query]:
        """Generated queries for every kind the dataset can answer, ids renumbered."""
        kinds = [k for k, name in QUERY_STRUCTURE.items() if name in self.available()]
        out: list[Query] = []
        for kind in kinds:
            for q in generate_queries(kind, per_kind, self.config.seed):
                out.append(Query(len(out), q.kind, q.values))
        return out

    # --- Verification ---

    def verify(self, queries: Sequence[Query] | None = None) -> ValidationResult:
        """Audit every built structure and compare query answers with brute force.

        Builds every available structure. Structural properties, cutting
        contracts and per-level crossing bounds are errors. Warnings name
        checks that were skipped because the input is too large for them.
        """
        report = OracleReport()
        warnings: list[str] = []
        for name in self.available():
            try:
                self._audit(name, report, warnings)
            except InvariantViolation as exc:
                report.record(f"{name}: {exc.invariant}", False, exc.witness)
        batch = list(queries) if queries is not None else self.default_queries()
        for q, got in zip(batch, self.run_queries(batch)):
            want = self.expected(q)
            report.expected[q.id] = want
            report.record(
                f"query {q.id} ({q.kind}) matches brute force",
                (got.answer, got.detail) == want,
                {"got": [got.answer, got.detail], "want": list(want)},
            )
            if q.kind == "R":
                for v in self.rayshoot().audit_candidates(q.ray()):
                    report.record(f"rayshoot: {v.invariant}", False, v.witness)
        errors = [
            f"{name}" if witness is None else f"{name} (witness: {witness})"
            for name, _, witness in report.failures
        ]
        result = ValidationResult(
            valid=report.ok, errors=errors, warnings=warnings, checks=len(report.checks)
        )
        logger.info(
            "Verified %d checks: %d errors, %d warnings",
            result.checks,
            len(result.errors),
            len(result.warnings),
        )
        return result

    def verify_tree(self, tree: PartitionTree) -> ValidationResult:
        """Audit a serialized tree against the dataset points it was built from."""
        shear = ShearTransform(tree.theta)
        if self._dataset.points:
            sites = collapse_duplicates([shear.apply_point(p) for p in self._dataset.points])[0]
        else:
            sites = _endpoint_sites(shear.apply_segment(s) for s in self._dataset.segments)
        violations = audit_tree(tree, sites)
        return ValidationResult(
            valid=not violations,
            errors=[str(v) for v in violations],
            checks=1,
        )

    def _audit(self, name: str, report: OracleReport, warnings: list[str]) -> None:
        trees: list[tuple[str, PartitionTree, Sequence[Point], bool]] = []
        top = self._top_tree(name)
        if top is not None:
            trees.append((name, top[0], top[1], True))
        if name == "rangecount":
            idx = self.rangecount()
            assert top is not None
            by_id = {p.id: p for p in top[1]}
            for leaf_id, sub in sorted(idx.stage2.items()):
                pts = [by_id[rid] for rid in idx.stage1.leaves[leaf_id].points]
                trees.append((f"rangecount stage-2 tree {leaf_id}", sub, pts, False))
        elif name == "stabbing":
            for k, (tree, sites) in enumerate(self.stabbing().trees()):
                trees.append((f"stabbing group tree {k}", tree, sites, True))
        else:
            store = self.segquery() if name == "segquery" else self.rayshoot().store
            _record_audit(report, f"{name}: storage", audit_storage(store))
        for label, tree, sites, plane_root in trees:
            _record_audit(report, label, audit_tree(tree, sites, plane_root=plane_root))
        if top is not None:
            self._audit_cuttings(name, top[0], top[1], report)
            self._check_crossings(name, top[0], top[1], report, warnings)

    def _audit_cuttings(
        self, name: str, tree: PartitionTree, sites: Sequence[Point], report: OracleReport
    ) -> None:
        """Rebuild ``tree`` in audit mode and check every cutting it computed."""
        audited = build_tree(
            sites, tree.r, self.config.to_refine_config(), theta=tree.theta, audit=True
        )
        if audited.canonical_bytes() != tree.canonical_bytes():
            report.record(f"{name}: audit rebuild differs from the built tree", False)
        for rnd in audited.rounds:
            for rec in rnd.cuttings:
                weights = [1 << e for e in rec.lines.exponents]
                check = verify_cutting(
                    rec.lines.lines, weights, rec.cutting.parent, rec.r, rec.cutting.cells
                )
                report.record(
                    f"{name}: cutting of cell {rec.cell_id} (t={rnd.t})",
                    check.passed,
                    None if check.passed else (check.witness_cell, check.reason),
                )
                size = sum(normalize_multiset(rec.lines))
                report.record(
                    f"{name}: multiset size of cell {rec.cell_id} (t={rnd.t})",
                    size <= 5 * len(rec.lines.lines),
                    None if size <= 5 * len(rec.lines.lines) else size,
                )

    def _check_crossings(
        self,
        name: str,
        tree: PartitionTree,
        sites: Sequence[Point],
        report: OracleReport,
        warnings: list[str],
    ) -> None:
        """Per-level crossing bound and the random-to-test crossing ratio.

        The ratio only holds against the full test set, so above
        ``FULL_TEST_SET_MAX`` sites it is skipped with a warning.
        """
        full = len(sites) <= FULL_TEST_SET_MAX
        if not full:
            warnings.append(
                f"{name}: {len(sites)} sites, random-to-test crossing ratio not checked"
            )
        log_term = math.log2(tree.n + 1) ** 3
        for ls in _level_stats(tree, sites, self.config, full_test_set=full):
            bound = 8 * (math.sqrt(tree.nominal_cells(ls.level)) + log_term)
            ok = ls.test_crossing_max <= bound
            report.record(
                f"{name}: level {ls.level} test crossing within {bound:.1f}",
                ok,
                None if ok else ls.test_crossing_max,
            )
            if not full:
                continue
            ok = ls.random_crossing_max <= 4 * max(ls.test_crossing_max, 1)
            report.record(
                f"{name}: level {ls.level} random crossing within 4x test crossing",
                ok,
                None if ok else (ls.random_crossing_max, ls.test_crossing_max),
            )
