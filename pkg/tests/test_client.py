"""Tests for the Workspace client API."""

import dataclasses

import pytest

import partree.client as client_module
from partree import RunConfig, Workspace
from partree.client import QUERY_STRUCTURE, STRUCTURES
from partree.engine.datagen import generate_dataset
from partree.engine.persistence import Dataset, Query, parse_queries


class TestConstruction:
    """Workspace constructor patterns."""

    def test_generated(self, small_config):
        with Workspace(config=small_config) as ws:
            assert len(ws.dataset.points) == 16
            assert len(ws.dataset.segments) == 16
            assert len(ws.dataset.triangles) == 16
            assert ws.available() == list(STRUCTURES)

    def test_from_file(self, dataset_file, small_config):
        ws = Workspace(dataset_file, small_config)
        generated = generate_dataset(small_config.family, small_config.n, small_config.seed)
        assert ws.dataset.points == generated.points

    def test_points_only(self, small_config):
        ds = Dataset(points=generate_dataset("uniform", 8, 1, kinds="P").points)
        ws = Workspace(ds, small_config)
        assert ws.available() == ["rangecount"]
        with pytest.raises(ValueError, match="no input for stabbing"):
            ws.stabbing()

    def test_unknown_structure(self, workspace):
        with pytest.raises(ValueError, match="structure must be one of"):
            workspace.structure("kdtree")

    def test_close_drops_structures(self, small_config):
        ws = Workspace(config=small_config)
        first = ws.rangecount()
        assert ws.rangecount() is first
        ws.close()
        assert ws.rangecount() is not first


class TestBuild:
    """Build summaries."""

    def test_build_all(self, workspace):
        stats = workspace.build()
        assert [s.structure for s in stats] == list(STRUCTURES)
        for s in stats:
            assert s.n == 16
            assert len(s.structure_hash) == 64

    def test_rangecount_levels(self, workspace):
        stats = workspace.build_stats("rangecount")
        assert stats.levels
        assert stats.levels[0].level == 1
        assert all(ls.cells >= 1 for ls in stats.levels)
        assert "stage2_trees" in stats.extra

    def test_stabbing_extra(self, workspace):
        stats = workspace.build_stats("stabbing")
        assert stats.levels == []
        assert stats.extra["stored_ids"] > 0
        assert stats.extra["schedules"]

    def test_segment_extra(self, workspace):
        for name in ("segquery", "rayshoot"):
            extra = workspace.build_stats(name).extra
            assert extra["edge_lists"] + extra["leaf_lists"] >= 1

    def test_hashes_reproducible(self, small_config):
        with Workspace(config=small_config) as a, Workspace(config=small_config) as b:
            for name in STRUCTURES:
                assert a.structure_hash(name) == b.structure_hash(name)

    def test_top_tree(self, workspace):
        tree = workspace.top_tree()
        assert tree is not None
        assert tree.n == 16


class TestQueries:
    """Answers agree with the brute-force expectation for every kind."""

    def test_default_queries(self, workspace):
        queries = workspace.default_queries(per_kind=4)
        assert [q.id for q in queries] == list(range(len(queries)))
        assert {q.kind for q in queries} == set(QUERY_STRUCTURE)
        for q in queries:
            result = workspace.answer(q)
            assert (result.answer, result.detail) == workspace.expected(q)

    def test_kinds(self, workspace):
        queries = parse_queries(
            "# partree-queries v1\n"
            "T 0 0 200 0 0 200\n"
            "H 0 1 -100 1\n"
            "Q 100 100\n"
            "L 1 -1 0\n"
            "G 0 0 250 250\n"
            "R 0 0 1 1\n"
        )
        results = workspace.run_queries(queries)
        assert [r.kind for r in results] == ["T", "H", "Q", "L", "G", "R"]
        assert results[3].answer in (0, 1)
        for q, r in zip(queries, results):
            assert (r.answer, r.detail) == workspace.expected(q)
            assert r.visited_cells >= 1

    def test_ray_miss(self, workspace):
        r = workspace.answer(Query(0, "R", (-1000, -1000, -1, 0)))
        assert (r.answer, r.detail) == (-1, "")

    def test_counting_only_stabbing(self, small_config):
        cfg = small_config.model_copy(update={"reporting": False})
        with Workspace(config=cfg) as ws:
            r = ws.answer(Query(0, "Q", (100, 100)))
            assert r.detail == ""

    def test_unknown_kind(self, workspace):
        with pytest.raises(ValueError, match="query kind must be one of"):
            workspace.answer(Query(0, "Z", ()))

    def test_threaded_batch(self, workspace):
        queries = workspace.default_queries(per_kind=3)
        sequential = workspace.run_queries(queries, workers=1)
        threaded = workspace.run_queries(queries, workers=4)
        assert threaded == sequential

    def test_shared_endpoints_flag_reaches_rayshoot(self, small_config, monkeypatch):
        seen = []
        real = client_module.build_rayshoot

        def spy(segments, cfg, *, allow_shared_endpoints=False):
            seen.append(allow_shared_endpoints)
            return real(segments, cfg, allow_shared_endpoints=allow_shared_endpoints)

        monkeypatch.setattr(client_module, "build_rayshoot", spy)
        cfg = small_config.model_copy(update={"allow_shared_endpoints": True})
        with Workspace(config=cfg) as ws:
            ws.rayshoot()
        assert seen == [True]


class TestVerify:
    """Audits of built structures and serialized trees."""

    def test_verify_clean(self, workspace):
        queries = workspace.default_queries(per_kind=3)
        result = workspace.verify(queries)
        assert result.valid, result.errors
        assert result.checks > len(queries)

    def test_verify_with_cuttings(self):
        cfg = RunConfig(n=16, seed=2, b=8, max_test_lines=40, t_leaf=4, reporting=True)
        ds = generate_dataset("uniform", 16, 2, kinds="P")
        with Workspace(ds, cfg) as ws:
            result = ws.verify(ws.default_queries(per_kind=2))
            assert result.valid, result.errors

    def test_verify_uncapped_test_set(self):
        """Every check passes when the build keeps all point-pair test lines."""
        cfg = RunConfig(n=8, seed=6, b=4, max_test_lines=0, t_leaf=4, reporting=True)
        with Workspace(config=cfg) as ws:
            result = ws.verify(ws.default_queries(per_kind=2))
            assert result.valid, result.errors
            assert result.warnings == []

    def test_crossing_bound_violation_is_an_error(self, workspace, monkeypatch):
        real = client_module._level_stats

        def inflated(tree, sites, cfg, *, full_test_set=False):
            rows = real(tree, sites, cfg, full_test_set=full_test_set)
            return [row.model_copy(update={"test_crossing_max": 10**6}) for row in rows]

        monkeypatch.setattr(client_module, "_level_stats", inflated)
        result = workspace.verify(workspace.default_queries(per_kind=1))
        assert not result.valid
        assert any("test crossing within" in e for e in result.errors)

    def test_random_crossing_ratio_violation_is_an_error(self, workspace, monkeypatch):
        real = client_module._level_stats

        def skewed(tree, sites, cfg, *, full_test_set=False):
            rows = real(tree, sites, cfg, full_test_set=full_test_set)
            update = {"test_crossing_max": 1, "random_crossing_max": 5}
            return [row.model_copy(update=update) for row in rows]

        monkeypatch.setattr(client_module, "_level_stats", skewed)
        result = workspace.verify(workspace.default_queries(per_kind=1))
        assert not result.valid
        assert any("random crossing within 4x" in e for e in result.errors)

    def test_large_input_skips_ratio_with_warning(self, workspace, monkeypatch):
        monkeypatch.setattr(client_module, "FULL_TEST_SET_MAX", 4)
        result = workspace.verify(workspace.default_queries(per_kind=1))
        assert result.valid, result.errors
        assert any("ratio not checked" in w for w in result.warnings)

    def test_verify_tree(self, workspace):
        tree = workspace.top_tree()
        assert workspace.verify_tree(tree).valid

    def test_verify_broken_tree(self, workspace):
        tree = workspace.top_tree()
        broken = dataclasses.replace(tree, levels=(*tree.levels[:-1], tree.levels[-1][1:]))
        result = workspace.verify_tree(broken)
        assert not result.valid
        assert any("does not cover" in e for e in result.errors)
