"""Tests for the two-stage triangle range counting index."""

from fractions import Fraction

import pytest

from partree.engine.datagen import generate_points, generate_queries
from partree.engine.geometry import HalfPlane, Line, Point
from partree.engine.oracle import brute_count_region, brute_count_triangle
from partree.engine.rangecount import (
    DualConstraint,
    LeafCountStructure,
    RangeCountConfig,
    build_rangecount,
    constraint_from_halfplane,
    count_halfplane,
    count_in_triangle,
    leaf_count,
    query_halfplanes,
)
from partree.engine.refine import RefineConfig
from partree.engine.tree import audit_tree

FAMILIES = ["uniform", "clustered", "grid", "collinear"]


@pytest.fixture()
def rc_config():
    return RangeCountConfig(t_leaf=4, refine=RefineConfig(b=4, max_test_lines=48))


@pytest.fixture()
def index(rc_config):
    return build_rangecount(generate_points("uniform", 40, 11), rc_config)


class TestLeafStructure:
    """The nested dual arrangements agree with a direct scan."""

    @pytest.fixture()
    def leaf_points(self):
        return generate_points("uniform", 6, 21)

    def test_single_constraint(self, leaf_points):
        ls = LeafCountStructure(leaf_points)
        for q in generate_queries("H", 20, 3):
            (h,) = q.halfplanes()
            if h.line.is_vertical:
                continue
            c = constraint_from_halfplane(h)
            assert ls.count([c]) == brute_count_region(leaf_points, [h])
            assert leaf_count(ls, [c]) == ls.count([c])

    def test_three_constraints(self, leaf_points):
        ls = LeafCountStructure(leaf_points)
        for q in generate_queries("T", 20, 4):
            hs = q.halfplanes()
            cs = [constraint_from_halfplane(h) for h in hs]
            if any(c is None for c in cs):
                continue
            assert ls.count(cs) == brute_count_region(leaf_points, hs)
        assert ls.level_count > 1

    def test_levels_built_eagerly(self, leaf_points):
        """Queries read the levels built up front and never add to them."""
        ls = LeafCountStructure(leaf_points)
        before = dict(ls.levels)
        for q in generate_queries("T", 20, 5):
            cs = [constraint_from_halfplane(h) for h in q.halfplanes()]
            if all(c is not None for c in cs):
                ls.count(cs)
        assert dict(ls.levels) == before
        with pytest.raises(TypeError):
            ls.levels[0] = ls.root  # type: ignore[index]

    def test_depth_one_builds_only_the_top(self, leaf_points):
        assert LeafCountStructure(leaf_points, depth=1).level_count == 1

    def test_constraint_through_dual_vertex(self):
        pts = [Point(0, 0, id=0), Point(1, 1, id=1), Point(2, 0, id=2)]
        ls = LeafCountStructure(pts)
        # the line y = x passes through two of the points
        h = HalfPlane.from_coeffs(-1, 1, 0)
        assert ls.count([constraint_from_halfplane(h)]) == 2

    def test_coincident_points(self):
        pts = [Point(1, 1, id=0), Point(1, 1, id=1), Point(3, 0, id=2)]
        ls = LeafCountStructure(pts)
        assert len(ls.lines) == 2
        assert ls.ids((1 << len(ls.lines)) - 1) == [0, 1, 2]
        h = HalfPlane.from_coeffs(0, 1, Fraction(-1, 2))
        assert ls.count([constraint_from_halfplane(h)]) == 2

    def test_too_many_constraints(self, leaf_points):
        ls = LeafCountStructure(leaf_points, depth=1)
        c = DualConstraint(Point(0, 0), 1)
        with pytest.raises(ValueError, match="at most 1 constraints"):
            ls.count([c, c])

    def test_vertical_constraint_has_no_dual(self):
        assert constraint_from_halfplane(HalfPlane.from_coeffs(1, 0, 0)) is None


class TestQueryRegions:
    """Tests for query_halfplanes."""

    def test_proper_triangle(self):
        hs = query_halfplanes(Point(0, 0), Point(4, 0), Point(0, 4))
        assert len(hs) == 3
        assert all(h.value(Point(1, 1)) >= 0 for h in hs)

    def test_collinear_corners_give_hull(self):
        hs = query_halfplanes(Point(0, 0), Point(2, 2), Point(4, 4))
        assert all(h.value(Point(3, 3)) >= 0 for h in hs)
        assert not all(h.value(Point(5, 5)) >= 0 for h in hs)
        assert not all(h.value(Point(1, 0)) >= 0 for h in hs)

    def test_single_point(self):
        hs = query_halfplanes(Point(1, 2), Point(1, 2), Point(1, 2))
        assert all(h.value(Point(1, 2)) >= 0 for h in hs)
        assert not all(h.value(Point(1, 3)) >= 0 for h in hs)


class TestIndex:
    """Counts agree with the brute-force oracle."""

    def test_triangles(self, index):
        pts = list(generate_points("uniform", 40, 11))
        for q in generate_queries("T", 30, 7):
            a, b, c = q.triangle_corners()
            assert count_in_triangle(index, a, b, c) == brute_count_triangle(pts, a, b, c)

    def test_halfplanes(self, index):
        pts = list(generate_points("uniform", 40, 11))
        for q in generate_queries("H", 30, 8):
            (h,) = q.halfplanes()
            assert count_halfplane(index, h) == brute_count_region(pts, [h])

    @pytest.mark.parametrize("family", FAMILIES)
    def test_families(self, rc_config, family):
        pts = generate_points(family, 24, 13)
        idx = build_rangecount(pts, rc_config)
        for q in generate_queries("T", 15, 9):
            hs = q.halfplanes()
            assert idx.count(hs) == brute_count_region(pts, hs)

    def test_degenerate_triangles(self, index):
        pts = list(generate_points("uniform", 40, 11))
        p, q = pts[0], pts[1]
        mid = Point((p.x + q.x) / 2, (p.y + q.y) / 2)
        assert count_in_triangle(index, p, mid, q) == brute_count_triangle(pts, p, mid, q)
        assert count_in_triangle(index, p, p, p) == 1

    def test_vertical_halfplane(self, index):
        pts = list(generate_points("uniform", 40, 11))
        h = HalfPlane.from_coeffs(1, 0, -100)
        assert count_halfplane(index, h) == brute_count_region(pts, [h])

    def test_whole_plane_and_empty_region(self, index):
        assert index.count(()) == 40
        far = HalfPlane(Line.from_coeffs(0, 1, 10_000), -1)
        assert index.is_empty((far,))

    def test_duplicate_locations(self, rc_config):
        base = generate_points("uniform", 10, 17)
        pts = base + [p.with_id(p.id + 10) for p in base[:5]]
        idx = build_rangecount(pts, rc_config)
        for q in generate_queries("T", 15, 10):
            hs = q.halfplanes()
            assert idx.count(hs) == brute_count_region(pts, hs)
        assert idx.count(()) == 15

    def test_stage_two_trees(self, index):
        assert index.stage2
        assert all(len(leaf.points) <= index.t_leaf for leaf in index.final_leaves())
        ids = sorted(pid for leaf in index.final_leaves() for pid in leaf.points)
        assert ids == list(range(40))

    def test_stage_two_roots_are_stage_one_leaves(self, index):
        """Each stage-2 tree is clipped to the stage-1 leaf it refines."""
        leaves = {tc.cell.id: tc for tc in index.stage1.leaves}
        for cid, sub in index.stage2.items():
            leaf = leaves[cid]
            assert sub.root.cell.canonical() == leaf.cell.canonical()
            assert set(sub.root.points) == set(leaf.points)
            pts = [index.points[pid] for pid in leaf.points]
            assert audit_tree(sub, pts, plane_root=False) == []

    def test_stats(self, index):
        total, stats = index.count_with_stats(
            query_halfplanes(Point(0, 0), Point(200, 0), Point(0, 200))
        )
        assert stats.visited >= stats.crossed >= stats.leaf_visits
        assert total == index.count(query_halfplanes(Point(0, 0), Point(200, 0), Point(0, 200)))

    def test_deterministic(self, rc_config):
        pts = generate_points("uniform", 40, 11)
        one = build_rangecount(pts, rc_config)
        two = build_rangecount(list(reversed(pts)), rc_config)
        assert one.structure_hash() == two.structure_hash()

    def test_rejects_empty_input(self, rc_config):
        with pytest.raises(ValueError, match="at least one point"):
            build_rangecount([], rc_config)

    def test_rejects_repeated_ids(self, rc_config):
        pts = [Point(0, 0, id=1), Point(1, 1, id=1)]
        with pytest.raises(ValueError, match="distinct point ids"):
            build_rangecount(pts, rc_config)

    def test_config_validation(self):
        with pytest.raises(ValueError, match="t_leaf"):
            RangeCountConfig(t_leaf=1)
        with pytest.raises(ValueError, match="r must be"):
            RangeCountConfig(r=0)
