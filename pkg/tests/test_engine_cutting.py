"""Tests for cuttings and the weighted-to-multiset reduction."""

import random
from fractions import Fraction

import pytest

from partree.engine.cutting import (
    WeightedLineSet,
    cut_multiset,
    cut_unweighted,
    cut_weighted,
    normalize_multiset,
)
from partree.engine.datagen import generate_points
from partree.engine.geometry import Line, Point, SimplexCell
from partree.engine.oracle import verify_cutting


@pytest.fixture()
def lines(uniform_points):
    """Lines through consecutive point pairs."""
    return [
        Line.through(uniform_points[i], uniform_points[i + 1], id=i // 2)
        for i in range(0, len(uniform_points) - 1, 2)
    ]


@pytest.fixture()
def big_triangle():
    return SimplexCell.triangle(Point(-10, -10), Point(600, -10), Point(-10, 600))


class TestUnweighted:
    """Tests for cut_unweighted."""

    @pytest.mark.parametrize("r", [2, 3, 4])
    def test_valid_in_triangle(self, lines, big_triangle, r):
        cut = cut_unweighted(lines, big_triangle, r)
        check = verify_cutting(lines, None, big_triangle, r, cut.cells)
        assert check.passed, check.reason
        assert len(cut) == len(cut.cells)

    def test_valid_in_plane(self, lines):
        plane = SimplexCell.plane()
        cut = cut_unweighted(lines, plane, 2)
        assert verify_cutting(lines, None, plane, 2, cut.cells).passed

    def test_cells_are_simplices(self, lines, big_triangle):
        for cell in cut_unweighted(lines, big_triangle, 4).cells:
            assert len(cell.halfplanes) <= 3
            assert cell.has_interior

    def test_crossing_lists(self, lines, big_triangle):
        cut = cut_unweighted(lines, big_triangle, 3)
        for k, cell in enumerate(cut.cells):
            assert set(cut.crossing[k]) == {i for i, ln in enumerate(lines) if cell.crosses(ln)}
            assert cut.cell_weight(k) * 3 <= cut.total_weight

    def test_trivial_parameter(self, lines, big_triangle):
        cut = cut_unweighted(lines, big_triangle, 1)
        assert len(cut) == 1

    def test_no_lines(self, big_triangle):
        assert len(cut_unweighted([], big_triangle, 8)) == 1

    def test_deterministic(self, lines, big_triangle):
        one = cut_unweighted(lines, big_triangle, 4)
        two = cut_unweighted(lines, big_triangle, 4)
        assert [c.canonical() for c in one.cells] == [c.canonical() for c in two.cells]


class TestWeighted:
    """Tests for cut_weighted and normalize_multiset."""

    def test_normalize_example(self):
        lines = [Line.from_coeffs(k, -1, k) for k in range(4)]
        w = WeightedLineSet(tuple(lines), (0, 0, 3, 5))
        assert normalize_multiset(w) == (1, 1, 2, 8)

    def test_normalize_empty(self):
        assert normalize_multiset(WeightedLineSet((), ())) == ()

    @pytest.mark.parametrize(
        "exponents", [(0,) * 8, (0, 1, 2, 3, 4, 5, 6, 7), (9, 0, 0, 0, 9, 1, 2, 3)]
    )
    def test_multiset_size_bound(self, lines, exponents):
        w = WeightedLineSet(tuple(lines), exponents)
        assert sum(normalize_multiset(w)) <= 5 * len(lines)

    def test_valid_for_original_weights(self, lines, big_triangle):
        exponents = (0, 3, 1, 5, 0, 2, 4, 1)
        w = WeightedLineSet(tuple(lines), exponents)
        cut = cut_weighted(w, big_triangle, 2)
        assert cut.r == 2
        weights = [1 << e for e in exponents]
        check = verify_cutting(lines, weights, big_triangle, 2, cut.cells)
        assert check.passed, check.reason


    @pytest.mark.parametrize("r", [2, 3, 4])
    @pytest.mark.parametrize("exponent", [0, 5])
    def test_equal_weights_match_unweighted(self, big_triangle, r, exponent):
        pts = generate_points("uniform", 24, 17)
        pairs = [Line.through(pts[i], pts[i + 1], id=i // 2) for i in range(0, 24, 2)]
        w = WeightedLineSet(tuple(pairs), (exponent,) * len(pairs))
        weighted = cut_weighted(w, big_triangle, r)
        plain = cut_unweighted(pairs, big_triangle, r)
        assert [c.canonical() for c in weighted.cells] == [c.canonical() for c in plain.cells]
        assert weighted.crossing == plain.crossing

    def test_multiset_cutting_valid_for_original_weights(self, lines, big_triangle):
        exponents = (0, 3, 1, 5, 0, 2, 4, 1)
        w = WeightedLineSet(tuple(lines), exponents)
        cut = cut_multiset(w, big_triangle, 2)
        assert cut.r == 10
        assert cut.weights == normalize_multiset(w)
        weights = [1 << e for e in exponents]
        check = verify_cutting(lines, weights, big_triangle, 2, cut.cells)
        assert check.passed, check.reason

    def test_normalize_equal_weights(self, lines):
        w = WeightedLineSet(tuple(lines), (0,) * 8)
        mult = normalize_multiset(w)
        assert mult == (2,) * 8
        assert sum(mult) == 16

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_exponents_valid(self, lines, big_triangle, seed):
        rng = random.Random(seed)
        exponents = tuple(rng.randint(0, 40) for _ in lines)
        weights = [1 << e for e in exponents]
        w = WeightedLineSet(tuple(lines), exponents)
        for cut in (cut_weighted(w, big_triangle, 4), cut_multiset(w, big_triangle, 4)):
            check = verify_cutting(lines, weights, big_triangle, 4, cut.cells)
            assert check.passed, check.reason

    def test_multiset_size_bound_random(self):
        rng = random.Random(2024)
        for _ in range(200):
            m = rng.randint(1, 40)
            exponents = tuple(rng.randint(0, 40) for _ in range(m))
            lines = tuple(Line.from_coeffs(k, -1, k) for k in range(m))
            mult = normalize_multiset(WeightedLineSet(lines, exponents))
            assert all(x >= 1 for x in mult)
            assert sum(mult) <= 5 * m

    def test_heavy_line_is_isolated(self, lines, big_triangle):
        exponents = (12, 0, 0, 0, 0, 0, 0, 0)
        cut = cut_weighted(WeightedLineSet(tuple(lines), exponents), big_triangle, 2)
        heavy = lines[0]
        assert not any(cell.crosses(heavy) for cell in cut.cells)

    def test_exponent_count_checked(self, lines):
        with pytest.raises(ValueError, match="one exponent per line"):
            WeightedLineSet(tuple(lines), (0,))

    def test_negative_exponent(self, lines):
        with pytest.raises(ValueError, match=">= 0"):
            WeightedLineSet(tuple(lines[:1]), (-1,))

    def test_total(self, lines):
        assert WeightedLineSet(tuple(lines[:3]), (0, 1, 4)).total == 19


class TestVerifyCutting:
    """The reference check rejects bad cuttings."""

    def test_overweight_cell(self, lines, big_triangle):
        check = verify_cutting(lines, None, big_triangle, 4, [big_triangle])
        assert not check.passed
        assert check.witness_cell == 0

    def test_overlapping_cells(self, big_triangle):
        check = verify_cutting([], None, big_triangle, Fraction(1), [big_triangle, big_triangle])
        assert not check.passed
        assert "overlaps" in check.reason

    def test_uncovered_parent(self, big_triangle):
        small = SimplexCell.triangle(Point(0, 0), Point(10, 0), Point(0, 10))
        check = verify_cutting([], None, big_triangle, 1, [small])
        assert not check.passed
        assert "cover" in check.reason
