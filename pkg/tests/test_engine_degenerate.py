"""Degenerate inputs and queries answered exactly under the closed convention.

Collinear and gridded data, points on cell boundaries, queries through cell
vertices and along edges, rays through segment endpoints. Every answer is
compared with the brute-force oracle.
"""

import itertools

import pytest

from partree.engine.geometry import Line, Point, Ray, Segment, Triangle
from partree.engine.oracle import (
    brute_count_triangle,
    brute_first_hit,
    brute_line_hits,
    brute_seg_intersect,
    brute_stab,
)
from partree.engine.rangecount import RangeCountConfig, build_rangecount, count_in_triangle
from partree.engine.rayshoot import build_rayshoot
from partree.engine.refine import RefineConfig
from partree.engine.segquery import (
    SegQueryConfig,
    build_wedge_store,
    report_intersecting,
    report_line,
)
from partree.engine.stabbing import StabbingConfig, build_stabbing


@pytest.fixture()
def degenerate_points():
    """A 5x5 grid plus points on the diagonal and on the line x = 2."""
    pts = [Point(x, y) for x in range(5) for y in range(5)]
    pts += [Point(k, k) for k in (5, 6, 7)]
    pts += [Point(2, y) for y in (5, 6, 7, 8)]
    return [p.with_id(i) for i, p in enumerate(pts)]


@pytest.fixture()
def rc_index(degenerate_points):
    cfg = RangeCountConfig(t_leaf=4, refine=RefineConfig(b=4, max_test_lines=64))
    return build_rangecount(degenerate_points, cfg)


def cell_corners(idx, level=-1):
    """Corners of the stage-1 cells at ``level``, in input coordinates."""
    out = []
    for tc in idx.stage1.levels[level]:
        for v in tc.cell.vertices_ccw():
            out.append(idx.shear.invert_point(v))
    return out


class TestRangeCount:
    """Triangle counts over collinear and gridded points."""

    def test_triangles_on_data_points(self, rc_index, degenerate_points):
        corners = degenerate_points[::3]
        for a, b, c in itertools.islice(itertools.combinations(corners, 3), 120):
            want = brute_count_triangle(degenerate_points, a, b, c)
            assert count_in_triangle(rc_index, a, b, c) == want

    def test_edges_along_grid_lines(self, rc_index, degenerate_points):
        for a, b, c in [
            (Point(0, 0), Point(4, 0), Point(0, 4)),
            (Point(2, 0), Point(2, 8), Point(4, 0)),
            (Point(0, 0), Point(7, 7), Point(0, 7)),
            (Point(1, 1), Point(3, 1), Point(1, 3)),
        ]:
            want = brute_count_triangle(degenerate_points, a, b, c)
            assert count_in_triangle(rc_index, a, b, c) == want

    def test_zero_area_queries(self, rc_index, degenerate_points):
        for a, b, c in [
            (Point(0, 0), Point(3, 3), Point(7, 7)),
            (Point(2, 0), Point(2, 4), Point(2, 8)),
            (Point(1, 1), Point(1, 1), Point(1, 1)),
        ]:
            want = brute_count_triangle(degenerate_points, a, b, c)
            assert count_in_triangle(rc_index, a, b, c) == want

    def test_queries_through_cell_vertices(self, rc_index, degenerate_points):
        corners = cell_corners(rc_index)
        assert corners
        anchors = [Point(0, 0), Point(4, 4), Point(2, 8)]
        for v in corners:
            for a, b in itertools.combinations(anchors, 2):
                want = brute_count_triangle(degenerate_points, v, a, b)
                assert count_in_triangle(rc_index, v, a, b) == want


class TestStabbing:
    """Query points on triangle corners and edges."""

    @pytest.fixture()
    def fan(self):
        """Triangles sharing the corner (0, 0) and sharing edges pairwise."""
        rim = [Point(8, 0), Point(8, 8), Point(0, 8), Point(-8, 8), Point(-8, 0)]
        return [Triangle(Point(0, 0), p, q, id=i) for i, (p, q) in enumerate(zip(rim, rim[1:]))]

    def test_shared_corners_and_edges(self, fan):
        cfg = StabbingConfig(t_leaf=2, reporting=True, refine=RefineConfig(b=4))
        idx = build_stabbing(fan, cfg)
        queries = [Point(0, 0), Point(8, 8), Point(4, 4), Point(0, 4), Point(-4, 4), Point(0, 8)]
        queries += [Point(8, 0), Point(-8, 0), Point(1, 0), Point(0, -1)]
        for q in queries:
            want = brute_stab(fan, q)
            assert idx.count(q) == len(want)
            assert idx.report(q) == want


class TestSegments:
    """Lines and segments through endpoints of a collinear segment family."""

    @pytest.fixture()
    def chain(self):
        """Collinear and parallel segments with gaps, plus a vertical one."""
        segs = [
            Segment(Point(0, 0), Point(2, 0)),
            Segment(Point(3, 0), Point(5, 0)),
            Segment(Point(0, 2), Point(2, 2)),
            Segment(Point(3, 2), Point(5, 2)),
            Segment(Point(6, -1), Point(6, 3)),
            Segment(Point(1, 4), Point(4, 7)),
        ]
        return [Segment(s.p, s.q, id=i) for i, s in enumerate(segs)]

    @pytest.fixture()
    def seg_config(self):
        return SegQueryConfig(r=4, refine=RefineConfig(b=4))

    def test_lines_through_endpoints(self, chain, seg_config):
        store = build_wedge_store(chain, seg_config)
        ends = [p for s in chain for p in (s.p, s.q)]
        lines = [Line.through(a, b) for a, b in itertools.combinations(ends, 2)]
        for ln in lines:
            assert report_line(store, ln) == brute_line_hits(chain, ln)

    def test_segments_touching_endpoints(self, chain, seg_config):
        store = build_wedge_store(chain, seg_config)
        queries = [
            Segment(Point(2, 0), Point(3, 0)),
            Segment(Point(2, -1), Point(2, 5)),
            Segment(Point(-1, 0), Point(7, 0)),
            Segment(Point(5, 2), Point(6, 3)),
            Segment(Point(1, 4), Point(0, 3)),
        ]
        for sq in queries:
            assert report_intersecting(store, sq) == brute_seg_intersect(chain, sq)

    def test_rays_through_endpoints(self, chain, seg_config):
        idx = build_rayshoot(chain, seg_config)
        origins = [Point(-2, -2), Point(2, 1), Point(7, 1), Point(0, 0)]
        for o in origins:
            for s in chain:
                for target in (s.p, s.q):
                    if target.key() == o.key():
                        continue
                    ray = Ray.from_direction(o, target.x - o.x, target.y - o.y)
                    hit = idx.shoot(ray)
                    got = None if hit is None else (hit.segment, hit.point)
                    want = brute_first_hit(chain, ray)
                    assert got == (None if want is None else (want[0], want[1]))
