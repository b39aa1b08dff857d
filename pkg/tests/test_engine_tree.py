"""Tests for partition tree construction, audits and serialization."""

import dataclasses
import json
from fractions import Fraction

import pytest

from partree.engine.datagen import generate_points
from partree.engine.geometry import Line, Point, SimplexCell, choose_shear
from partree.engine.refine import RefineConfig
from partree.engine.tree import (
    PartitionTree,
    audit_tree,
    build_test_set,
    build_tree,
    cap_test_set,
    collapse_duplicates,
    crossing_profile,
    tree_shape,
)


def sheared(points):
    shear = choose_shear(points)
    return [shear.apply_point(p) for p in points], shear.theta


class TestShape:
    """Tests for tree_shape."""

    @pytest.mark.parametrize(
        ("r", "b", "expected"),
        [(16, 4, (2, 1)), (10, 4, (1, 3)), (3, 4, (0, 3)), (1, 8, (0, 1)), (64, 8, (2, 1))],
    )
    def test_examples(self, r, b, expected):
        assert tree_shape(r, b) == expected

    def test_bounds(self):
        for r in range(1, 80):
            k, b_prime = tree_shape(r, 4)
            assert 4**k <= r < 4 ** (k + 1)
            assert (b_prime - 1) * 4**k < r <= b_prime * 4**k

    def test_rejects_zero(self):
        with pytest.raises(ValueError, match="r must be >= 1"):
            tree_shape(0, 4)


class TestTestSet:
    """Tests for the test line set."""

    def test_general_position(self):
        pts = [Point(0, 0), Point(1, 0), Point(0, 1), Point(3, 5)]
        lines = build_test_set(pts)
        assert len(lines) == 6
        assert [ln.id for ln in lines] == list(range(6))

    def test_collinear_points_share_a_line(self):
        pts = [Point(k, 2 * k, id=k) for k in range(5)]
        assert build_test_set(pts) == (Line.from_coeffs(2, -1, 0),)

    def test_duplicates_ignored(self):
        pts = [Point(0, 0, id=0), Point(0, 0, id=1), Point(1, 1, id=2)]
        assert len(build_test_set(pts)) == 1

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="at least 2 points"):
            build_test_set([Point(0, 0)])

    def test_cap(self, uniform_points):
        lines = build_test_set(uniform_points)
        capped = cap_test_set(lines, 10)
        assert len(capped) == 10
        assert [ln.id for ln in capped] == list(range(10))
        assert capped[0] == lines[0]
        assert all(ln in lines for ln in capped)

    def test_cap_keeps_short_sets(self):
        lines = build_test_set([Point(0, 0), Point(1, 0), Point(0, 1)])
        assert cap_test_set(lines, 10) == lines
        assert cap_test_set(lines, 0) == lines


class TestBuild:
    """Tests for build_tree on the standard point families."""

    def test_levels(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        assert (tree.k, tree.b_prime) == (2, 1)
        assert len(tree.levels) == tree.k + 2
        assert tree.root.count == 16
        assert len(tree.rounds) == tree.k + 1
        assert tree.root.children == tuple(range(len(tree.levels[1])))

    def test_audit_uniform(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg, audit=True)
        assert audit_tree(tree, uniform_points) == []

    def test_audit_grid(self, grid_points, refine_cfg):
        pts, theta = sheared(grid_points)
        assert theta == Fraction(1, 4)
        tree = build_tree(pts, 8, refine_cfg, theta=theta)
        assert audit_tree(tree, pts) == []
        assert tree.theta == theta

    def test_audit_collinear(self, collinear_points, refine_cfg):
        pts, theta = sheared(collinear_points)
        tree = build_tree(pts, 16, refine_cfg, theta=theta)
        assert audit_tree(tree, pts) == []

    def test_cutting_rounds(self, uniform_points):
        cfg = RefineConfig(b=8, max_test_lines=40)
        tree = build_tree(uniform_points, 16, cfg, audit=True, trace=True)
        assert (tree.k, tree.b_prime) == (1, 2)
        assert audit_tree(tree, uniform_points) == []
        assert any(rnd.cuttings for rnd in tree.rounds)
        for rnd, level in zip(tree.rounds, tree.levels[1:]):
            assert rnd.cells == len(level)
            assert len(rnd.trace) >= 1

    def test_single_leaf(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 1, refine_cfg)
        assert len(tree.levels) == 2
        assert audit_tree(tree, uniform_points) == []

    def test_deterministic(self, uniform_points, refine_cfg):
        one = build_tree(uniform_points, 16, refine_cfg)
        two = build_tree(list(reversed(uniform_points)), 16, refine_cfg)
        assert one.structure_hash() == two.structure_hash()

    @pytest.mark.parametrize("r", [0, 17])
    def test_r_out_of_range(self, uniform_points, refine_cfg, r):
        with pytest.raises(ValueError, match=r"r must be in \[1, 16\]"):
            build_tree(uniform_points, r, refine_cfg)

    def test_r_below_r0(self, uniform_points, refine_cfg):
        with pytest.raises(ValueError, match="r must be in"):
            build_tree(uniform_points, 2, refine_cfg, r0=4)

    def test_duplicate_ids(self, uniform_points, refine_cfg):
        pts = [*uniform_points[:-1], dataclasses.replace(uniform_points[-1], id=0)]
        with pytest.raises(ValueError, match="distinct point ids"):
            build_tree(pts, 4, refine_cfg)

    def test_budgets(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        assert tree.nominal_cells(0) == 1
        assert tree.nominal_cells(3) == 16
        assert tree.point_budget(3) == 2
        assert tree.point_budget(1) == 32

    def test_clipped_root(self, uniform_points, refine_cfg):
        tri = SimplexCell.triangle(Point(-1, -1), Point(600, -1), Point(-1, 600))
        tree = build_tree(uniform_points, 8, refine_cfg, root=tri)
        assert tree.root.cell.canonical() == tri.canonical()
        assert audit_tree(tree, uniform_points, plane_root=False) == []
        found = {v.invariant for v in audit_tree(tree, uniform_points)}
        assert found == {"level 0 must be the whole plane"}

    def test_root_must_hold_every_point(self, uniform_points, refine_cfg):
        small = SimplexCell.triangle(Point(0, 0), Point(1, 0), Point(0, 1))
        with pytest.raises(ValueError, match="root must contain every point"):
            build_tree(uniform_points, 8, refine_cfg, root=small)

    def test_full_test_set(self):
        """max_test_lines=0 refines against every point-pair line."""
        pts = generate_points("uniform", 12, 19)
        cfg = RefineConfig(b=4)
        assert cfg.max_test_lines == 0
        tree = build_tree(pts, 12, cfg, audit=True)
        assert audit_tree(tree, pts) == []
        lines = build_test_set(pts)
        profile = crossing_profile(tree, lines)
        assert len(profile.per_line) == len(lines)
        for row in profile.per_line:
            assert all(c <= len(level) for c, level in zip(row, tree.levels[1:]))

    def test_leaf_crossing_is_sublinear(self):
        pts = generate_points("uniform", 64, 23)
        cfg = RefineConfig(b=4, max_test_lines=96)
        tree = build_tree(pts, 32, cfg)
        assert audit_tree(tree, pts) == []
        others = generate_points("uniform", 400, 77)
        random_lines = [Line.through(others[i], others[i + 1]) for i in range(0, 400, 2)]
        test_lines = cap_test_set(build_test_set(pts), 96)
        leaves = len(tree.levels[-1])
        for lines in (test_lines, random_lines):
            assert crossing_profile(tree, lines).per_level_max[-1] < leaves


class TestAudit:
    """audit_tree reports broken trees."""

    def test_dropped_leaf(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        broken = dataclasses.replace(tree, levels=(*tree.levels[:-1], tree.levels[-1][1:]))
        found = {v.invariant for v in audit_tree(broken, uniform_points)}
        assert "level does not cover every point" in found

    def test_point_moved(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        shifted = [p.with_id((p.id + 1) % 16) for p in uniform_points]
        found = {v.invariant for v in audit_tree(tree, shifted)}
        assert "point outside its cell" in found

    def test_tight_level_cap(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        violations = audit_tree(tree, uniform_points, c1=0)
        assert any(v.invariant == "level size above its cap" for v in violations)

    def test_child_cap_is_exact(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        assert tree.b_prime == 1
        root = dataclasses.replace(tree.root, children=(0, 0))
        broken = dataclasses.replace(tree, levels=((root,), *tree.levels[1:]))
        found = {v.invariant for v in audit_tree(broken, uniform_points)}
        assert "too many children" in found
        loose = {v.invariant for v in audit_tree(broken, uniform_points, c2=2)}
        assert "too many children" not in loose

    def test_root_missing_a_point(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        extra = [*uniform_points, Point(7, 7, id=99)]
        found = {v.invariant for v in audit_tree(tree, extra)}
        assert "the root must hold every point" in found


class TestSerialization:
    """Tests for to_dict/from_dict and hashing."""

    def test_round_trip(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        data = json.loads(json.dumps(tree.to_dict()))
        assert data["format"] == "partree-tree v1"
        back = PartitionTree.from_dict(data)
        assert back.structure_hash() == tree.structure_hash()
        assert audit_tree(back, uniform_points) == []

    def test_wrong_format(self, uniform_points, refine_cfg):
        data = build_tree(uniform_points, 4, refine_cfg).to_dict()
        data["format"] = "something else"
        with pytest.raises(ValueError, match="Tree format"):
            PartitionTree.from_dict(data)

    def test_hash_changes_with_content(self, uniform_points, refine_cfg):
        a = build_tree(uniform_points, 16, refine_cfg)
        b = build_tree(uniform_points, 4, refine_cfg)
        assert a.structure_hash() != b.structure_hash()


class TestCrossingProfile:
    """Tests for crossing_profile."""

    def test_plane_level(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 16, refine_cfg)
        lines = build_test_set(uniform_points)[:5]
        profile = crossing_profile(tree, lines)
        assert len(profile.per_line) == 5
        assert len(profile.per_level_max) == len(tree.levels) - 1
        # b' = 1: level 1 is the whole plane
        assert profile.per_level_max[0] == 1
        for row in profile.per_line:
            assert all(c <= len(level) for c, level in zip(row, tree.levels[1:]))

    def test_no_lines(self, uniform_points, refine_cfg):
        tree = build_tree(uniform_points, 4, refine_cfg)
        profile = crossing_profile(tree, [])
        assert profile.per_line == ()
        assert set(profile.per_level_max) == {0}


class TestCollapseDuplicates:
    """Tests for collapse_duplicates."""

    def test_example(self):
        pts = [Point(1, 1, id=3), Point(0, 0, id=1), Point(1, 1, id=0), Point(1, 1, id=7)]
        reps, members = collapse_duplicates(pts)
        assert [p.id for p in reps] == [1, 0]
        assert members == {1: (1,), 0: (0, 3, 7)}

    def test_distinct_points_unchanged(self, uniform_points):
        reps, members = collapse_duplicates(uniform_points)
        assert sorted(p.id for p in reps) == [p.id for p in uniform_points]
        assert all(len(v) == 1 for v in members.values())
