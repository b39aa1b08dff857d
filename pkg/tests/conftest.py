"""Shared fixtures for partree tests."""

from fractions import Fraction

import pytest

from partree import RunConfig, Workspace
from partree.engine.datagen import (
    generate_dataset,
    generate_points,
    generate_segments,
    generate_triangles,
)
from partree.engine.geometry import Point
from partree.engine.persistence import save_dataset
from partree.engine.refine import RefineConfig


@pytest.fixture()
def refine_cfg():
    """Small branching factor and a short test set so trees stay cheap."""
    return RefineConfig(b=4, beta=Fraction(1, 10), max_test_lines=48)


@pytest.fixture()
def uniform_points():
    """16 distinct quarter-grid points, ids 0..15."""
    return generate_points("uniform", 16, 1)


@pytest.fixture()
def collinear_points():
    """16 points on the four lines of the collinear family."""
    return generate_points("collinear", 16, 2)


@pytest.fixture()
def grid_points():
    """A 4x4 integer grid; many collinear triples and shared x-coordinates."""
    return [Point(x, y, id=4 * x + y) for x in range(4) for y in range(4)]


@pytest.fixture()
def segments():
    """12 pairwise disjoint segments."""
    return generate_segments("uniform", 12, 3)


@pytest.fixture()
def triangles():
    """12 overlapping triangles."""
    return generate_triangles("uniform", 12, 4)


@pytest.fixture()
def small_config():
    """Run config for a 16-record dataset with reporting on."""
    return RunConfig(n=16, seed=5, b=4, max_test_lines=48, t_leaf=4, reporting=True)


@pytest.fixture()
def workspace(small_config):
    """Workspace over the generated dataset of ``small_config``."""
    with Workspace(config=small_config) as ws:
        yield ws


@pytest.fixture()
def dataset_file(tmp_path, small_config):
    """The ``small_config`` dataset written to disk."""
    ds = generate_dataset(small_config.family, small_config.n, small_config.seed)
    return str(save_dataset(ds, tmp_path / "data.txt"))
