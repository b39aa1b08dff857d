"""Thread safety tests for built structures and the Workspace.

Built structures are immutable, nested leaf levels included, so concurrent
queries must return exactly the sequential answers.
"""

import threading
from concurrent.futures import ThreadPoolExecutor

from partree import RunConfig, Workspace
from partree.engine.datagen import generate_points, generate_queries
from partree.engine.geometry import Point
from partree.engine.oracle import brute_count_region
from partree.engine.rangecount import LeafCountStructure, constraint_from_halfplane


class TestLeafStructureThreadSafety:
    """One eagerly built leaf structure shared by many threads."""

    def test_concurrent_queries(self):
        """Threads sharing one structure all see the oracle counts."""
        pts = generate_points("uniform", 12, 8)
        queries, expected = [], []
        for q in generate_queries("T", 20, 3):
            cs = [constraint_from_halfplane(h) for h in q.halfplanes()]
            if len(cs) <= 3 and all(c is not None for c in cs):
                queries.append(cs)
                expected.append(brute_count_region(pts, q.halfplanes()))
        shared = LeafCountStructure(pts)
        levels = dict(shared.levels)
        errors: list[Exception] = []
        results: dict[int, list[int]] = {}

        def run(tid: int):
            try:
                results[tid] = [shared.count(hs) for hs in queries]
            except Exception as e:
                errors.append(e)

        threads = [threading.Thread(target=run, args=(t,)) for t in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert not errors, f"Errors during concurrent count: {errors}"
        for tid in range(8):
            assert results[tid] == expected
        assert dict(shared.levels) == levels


class TestWorkspaceThreadSafety:
    """Concurrent use of one Workspace."""

    def test_concurrent_lazy_build(self):
        """Threads asking for the same structure get one shared instance."""
        ws = Workspace(config=RunConfig(n=16, seed=4, b=4, t_leaf=4))
        built: list[object] = []
        errors: list[Exception] = []

        def get():
            try:
                built.append(ws.rangecount())
            except Exception as e:
                errors.append(e)

        threads = [threading.Thread(target=get) for _ in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert not errors
        assert len(built) == 6
        assert all(b is built[0] for b in built)

    def test_pool_matches_sequential(self, workspace):
        """A thread pool over mixed query kinds agrees with one thread."""
        queries = workspace.default_queries(per_kind=5)
        sequential = [workspace.answer(q) for q in queries]
        with ThreadPoolExecutor(max_workers=6) as pool:
            concurrent = list(pool.map(workspace.answer, queries))
        assert concurrent == sequential

    def test_concurrent_stabbing_reports(self, workspace):
        """Reporting walks run in parallel without mixing their outputs."""
        idx = workspace.stabbing()
        query_points = [Point(x, y) for x in range(0, 256, 32) for y in range(0, 256, 32)]
        expected = [idx.report(p) for p in query_points]
        with ThreadPoolExecutor(max_workers=4) as pool:
            got = list(pool.map(idx.report, query_points))
        assert got == expected


class TestRayShootThreadSafety:
    """Secondary arrangements are built with the index and shared read-only."""

    def test_concurrent_shots(self, workspace):
        idx = workspace.rayshoot()
        rays = [q.ray() for q in generate_queries("R", 24, 12)]
        expected = [idx.shoot(r) for r in rays]
        with ThreadPoolExecutor(max_workers=4) as pool:
            got = list(pool.map(idx.shoot, rays))
        assert got == expected
