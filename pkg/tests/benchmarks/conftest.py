"""Benchmark fixtures: seeded datasets and small scaling configs."""

import time
from collections.abc import Callable
from typing import Any

import pytest

from partree import RunConfig
from partree.engine.datagen import generate_dataset
from partree.engine.persistence import Dataset


def bench_config(n: int, family: str = "uniform", seed: int = 42) -> RunConfig:
    """Config used by every benchmark: small branching so builds stay quick.

    Args:
        n: Dataset size
        family: Generator family
        seed: Generator seed

    Returns:
        RunConfig with reporting off and a capped test set
    """
    return RunConfig(family=family, n=n, seed=seed, b=4, t_leaf=4, max_test_lines=64)


def timed(fn: Callable[[], Any]) -> tuple[Any, float]:
    """Run ``fn`` once; return its result and the wall time in seconds."""
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


@pytest.fixture
def dataset_64() -> Dataset:
    """64 records of each kind, uniform family."""
    return generate_dataset("uniform", 64, 42)


@pytest.fixture
def clustered_64() -> Dataset:
    """64 records of each kind, clustered family."""
    return generate_dataset("clustered", 64, 42)


@pytest.fixture
def sizes() -> tuple[int, ...]:
    """Doubling schedule kept short for CI."""
    return (32, 64, 128)
