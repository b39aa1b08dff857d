"""Tests for the pydantic run configuration and result models."""

from fractions import Fraction

import pytest
from pydantic import ValidationError

from partree.models import (
    BENCH_COLUMNS,
    RESULT_COLUMNS,
    BenchRow,
    BuildStats,
    LevelStats,
    QueryResult,
    RunConfig,
    ValidationResult,
)


class TestRunConfig:
    """Validation and conversion of RunConfig."""

    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.b == 8
        assert cfg.fraction("beta") == Fraction(1, 10)
        assert cfg.fraction("eps") == Fraction(1, 2)
        assert cfg.max_test_lines == 128
        assert cfg.allow_shared_endpoints is False

    def test_rationals_are_canonical(self):
        a = RunConfig(beta="2/20")
        b = RunConfig(beta=Fraction(1, 10))
        assert a.beta == "1/10"
        assert a == b
        assert a.canonical_bytes() == b.canonical_bytes()

    def test_float_rejected(self):
        with pytest.raises(ValidationError, match="rational must be"):
            RunConfig(beta=0.1)

    def test_garbage_rational(self):
        with pytest.raises(ValidationError, match="not a rational"):
            RunConfig(eps="half")

    @pytest.mark.parametrize("b", [2, 6, 12, 0])
    def test_b_power_of_two(self, b):
        with pytest.raises(ValidationError, match="power of two"):
            RunConfig(b=b)

    @pytest.mark.parametrize("field", ["beta", "eps"])
    @pytest.mark.parametrize("value", ["0", "1", "3/2", "-1/4"])
    def test_open_unit_interval(self, field, value):
        with pytest.raises(ValidationError, match=f"{field} must be in"):
            RunConfig(**{field: value})

    def test_c_cut_positive(self):
        with pytest.raises(ValidationError, match="c_cut must be positive"):
            RunConfig(c_cut="0")

    def test_unknown_family(self):
        with pytest.raises(ValidationError, match="family must be one of"):
            RunConfig(family="spiral")

    @pytest.mark.parametrize(
        ("field", "value"), [("n", 0), ("seed", -1), ("t_leaf", 1), ("workers", 0), ("r", 0)]
    )
    def test_bounds(self, field, value):
        with pytest.raises(ValidationError):
            RunConfig(**{field: value})

    def test_extra_fields_forbidden(self):
        with pytest.raises(ValidationError):
            RunConfig(branching=4)

    def test_frozen(self):
        cfg = RunConfig()
        with pytest.raises(ValidationError):
            cfg.n = 5

    def test_engine_configs(self):
        cfg = RunConfig(b=16, beta="1/8", eps="1/3", c_cut="1/2", r=12, t_leaf=5)
        refine = cfg.to_refine_config()
        assert (refine.b, refine.beta, refine.c_cut) == (16, Fraction(1, 8), Fraction(1, 2))
        assert cfg.rangecount_config().t_leaf == 5
        assert cfg.stabbing_config().eps == Fraction(1, 3)
        assert cfg.segquery_config().r == 12

    def test_canonical_bytes_differ_by_seed(self):
        assert RunConfig(seed=1).canonical_bytes() != RunConfig(seed=2).canonical_bytes()


class TestResultModels:
    """Row conversion of the result models."""

    def test_query_result_row(self):
        row = QueryResult(id=3, kind="Q", answer=2, detail="1 4", visited_cells=9).to_row()
        assert len(row) == len(RESULT_COLUMNS)
        assert row == (3, "Q", 2, "1 4", 9, 0)

    def test_bench_row(self):
        row = BenchRow(
            n=64,
            kind="T",
            queries=10,
            median_visited=12.0,
            median_leaf_visits=3.5,
            median_ms=0.25,
            leaf_ratio=1.5,
        ).to_row()
        assert len(row) == len(BENCH_COLUMNS)
        assert row == (64, "T", 10, "12.0", "3.5", "0.250", "1.500")

    def test_bench_row_without_ratio(self):
        row = BenchRow(
            n=8, kind="Q", queries=1, median_visited=1, median_leaf_visits=1, median_ms=1
        ).to_row()
        assert row[-1] == ""

    def test_build_stats(self):
        stats = BuildStats(
            structure="tree",
            n=4,
            structure_hash="ab",
            levels=[LevelStats(level=1, cells=2, max_points=2)],
        )
        assert stats.model_dump()["levels"][0]["test_crossing_max"] == 0

    def test_validation_result(self):
        result = ValidationResult(valid=False, errors=["x"])
        assert result.warnings == []
        assert result.checks == 0
