"""Query-work scaling over a doubling schedule of input sizes.

For every size the dataset is regenerated from the run's family and seed,
every structure is built, and a fixed batch of queries per kind is timed one
query at a time. Medians come from numpy; the ratio column compares leaf
visits with the previous size, which should grow like the square root of
the size.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence

import numpy as np

from partree.client import QUERY_STRUCTURE, Workspace
from partree.engine.datagen import generate_queries
from partree.models import BenchRow, RunConfig

logger = logging.getLogger("partree.bench")

DEFAULT_SIZES = (64, 128, 256)
QUERIES_PER_KIND = 32


def doubling_schedule(start: int, steps: int) -> tuple[int, ...]:
    if start < 1 or steps < 1:
        raise ValueError(f"start and steps must be >= 1, got: {start}, {steps}")
    return tuple(start << i for i in range(steps))


def _median(values: Sequence[float]) -> float:
    return float(np.median(np.asarray(values, dtype=float))) if values else 0.0


def bench_size(cfg: RunConfig, kinds: Sequence[str], per_kind: int) -> list[BenchRow]:
    """One row per query kind for the dataset described by ``cfg``."""
    rows = []
    with Workspace(config=cfg) as ws:
        for kind in kinds:
            if QUERY_STRUCTURE[kind] not in ws.available():
                continue
            ws.structure(QUERY_STRUCTURE[kind])
            visited, leaves, wall = [], [], []
            for q in generate_queries(kind, per_kind, cfg.seed):
                start = time.perf_counter()
                res = ws.answer(q)
                wall.append((time.perf_counter() - start) * 1000)
                visited.append(res.visited_cells)
                leaves.append(res.leaf_visits)
            rows.append(
                BenchRow(
                    n=cfg.n,
                    kind=kind,
                    queries=per_kind,
                    median_visited=_median(visited),
                    median_leaf_visits=_median(leaves),
                    median_ms=_median(wall),
                )
            )
    return rows


def run_bench(
    cfg: RunConfig,
    sizes: Sequence[int] = DEFAULT_SIZES,
    kinds: Sequence[str] = ("T", "Q", "L", "G", "R"),
    per_kind: int = QUERIES_PER_KIND,
) -> list[BenchRow]:
    """The scaling table, ordered by kind and then size."""
    by_kind: dict[str, list[BenchRow]] = {k: [] for k in kinds}
    for n in sizes:
        logger.info("Benchmarking n=%d", n)
        for row in bench_size(cfg.model_copy(update={"n": n}), kinds, per_kind):
            by_kind[row.kind].append(row)
    out: list[BenchRow] = []
    for kind in kinds:
        prev: BenchRow | None = None
        for row in by_kind[kind]:
            if prev is not None and prev.median_leaf_visits > 0:
                row = row.model_copy(
                    update={"leaf_ratio": row.median_leaf_visits / prev.median_leaf_visits}
                )
            out.append(row)
            prev = row
    return out
