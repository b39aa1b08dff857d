from __future__ import annotations

import functools
import json
import logging
import sys
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import click

from partree.bench import doubling_schedule, run_bench
from partree.client import Workspace
from partree.engine.datagen import FAMILIES, generate_dataset, generate_queries
from partree.engine.errors import InvariantViolation
from partree.engine.persistence import (
    Query,
    canonical_json,
    format_dataset,
    format_queries,
    format_results,
    load_queries,
    load_tree,
    save_tree,
    stats_document,
    write_text,
)
from partree.models import BENCH_COLUMNS, RESULT_COLUMNS, RunConfig, ValidationResult

logger = logging.getLogger("partree.cli")

EXIT_INVARIANT = 1
EXIT_INPUT = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_CONFIG_OPTIONS = [
    click.option("--family", type=click.Choice(FAMILIES), default=None, help="Dataset family."),
    click.option("--n", "n", type=int, default=None, help="Dataset size."),
    click.option("--seed", type=int, default=None, help="Generator seed."),
    click.option("--b", "b", type=int, default=None, help="Branching factor (power of two)."),
    click.option("--beta", default=None, help="Cell selection rational in (0, 1)."),
    click.option("--eps", default=None, help="Stabbing schedule rational in (0, 1)."),
    click.option("--r", "r", type=int, default=None, help="Leaf-cell target."),
    click.option("--r1", type=int, default=None, help="Stage-2 leaf-cell target."),
    click.option("--tleaf", "t_leaf", type=int, default=None, help="Leaf size."),
    click.option("--ccut", "c_cut", default=None, help="Cutting parameter scale."),
    click.option("--max-test-lines", type=int, default=None, help="Test set cap (0 = all)."),
    click.option("--workers", type=int, default=None, help="Query threads."),
    click.option("--report/--no-report", "reporting", default=None, help="Report ids."),
    click.option(
        "--shared-endpoints/--disjoint",
        "allow_shared_endpoints",
        default=None,
        help="Let ray shooting segments share endpoints.",
    ),
]
_CONFIG_KEYS = (
    "family",
    "n",
    "seed",
    "b",
    "beta",
    "eps",
    "r",
    "r1",
    "t_leaf",
    "c_cut",
    "max_test_lines",
    "workers",
    "reporting",
    "allow_shared_endpoints",
)


def config_options(f: Callable[..., Any]) -> Callable[..., Any]:
    for opt in reversed(_CONFIG_OPTIONS):
        f = opt(f)
    return f


def _run_config(options: dict[str, Any]) -> RunConfig:
    given = {k: options.pop(k) for k in _CONFIG_KEYS if k in options}
    return RunConfig(**{k: v for k, v in given.items() if v is not None})


def _workspace(dataset: str | None, cfg: RunConfig) -> Workspace:
    return Workspace(dataset, cfg) if dataset else Workspace(config=cfg)


def _emit(text: str, out: str | None) -> None:
    if out:
        path = write_text(out, text)
        logger.info("Wrote %s", path)
    else:
        click.echo(text, nl=False)


@contextmanager
def _exit_codes(ctx: click.Context) -> Iterator[None]:
    """Map failures to exit codes: 1 for invariants, 2 for bad input."""
    try:
        yield
    except (click.ClickException, click.exceptions.Exit, click.Abort):
        raise
    except InvariantViolation as exc:
        click.echo(f"FAIL: {exc}", err=True)
        ctx.exit(EXIT_INVARIANT)
    except (ValueError, OSError) as exc:
        click.echo(f"Error: {exc}", err=True)
        ctx.exit(EXIT_INPUT)
    except Exception:
        logger.exception("Unexpected failure")
        ctx.exit(EXIT_INVARIANT)


def handles_errors(f: Callable[..., Any]) -> Callable[..., Any]:
    @functools.wraps(f)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        ctx = click.get_current_context()
        with _exit_codes(ctx):
            return f(*args, **kwargs)

    return wrapper


def _print_validation(result: ValidationResult) -> None:
    for err in result.errors:
        click.echo(f"  ERROR: {err}")
    for warn in result.warnings:
        click.echo(f"  WARNING: {warn}")
    if result.valid:
        click.echo(f"OK: {result.checks} checks passed.")
    else:
        click.echo(f"FAIL: {len(result.errors)} of {result.checks} checks failed.")


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for refinement traces.")
@click.version_option(package_name="partree")
def cli(verbose: int) -> None:
    """Partree: exact planar partition trees, their queries and audits."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT)
    logging.getLogger("partree").setLevel(level)


@cli.command()
@config_options
@click.option("--kinds", default="PST", help="Record kinds to generate (subset of PST).")
@click.option("--out", default=None, help="Dataset file (default: stdout).")
@click.option("--queries", "queries_out", default=None, help="Also write a query batch here.")
@click.option("--per-kind", type=int, default=16, help="Queries per kind for --queries.")
@handles_errors
def gen(
    kinds: str, out: str | None, queries_out: str | None, per_kind: int, **options: Any
) -> None:
    """Generate a deterministic dataset (and optionally a query batch)."""
    cfg = _run_config(options)
    if not kinds or set(kinds) - set("PST"):
        raise click.UsageError(f"--kinds must be a non-empty subset of PST, got: {kinds!r}")
    ds = generate_dataset(cfg.family, cfg.n, cfg.seed, kinds)
    _emit(format_dataset(ds), out)
    if queries_out:
        batch: list[Query] = []
        for kind in "THQLGR":
            for q in generate_queries(kind, per_kind, cfg.seed):
                batch.append(Query(len(batch), q.kind, q.values))
        write_text(queries_out, format_queries(batch))


@cli.command()
@click.argument("dataset", required=False, type=click.Path(dir_okay=False))
@config_options
@click.option("--out", default=None, help="Directory for tree.json and stats.json.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@handles_errors
def build(dataset: str | None, out: str | None, fmt: str, **options: Any) -> None:
    """Build every structure the dataset supports and print their hashes."""
    cfg = _run_config(options)
    with _workspace(dataset, cfg) as ws:
        stats = ws.build()
        docs = [stats_document(s.structure, s.model_dump()) for s in stats]
        if out:
            tree = ws.top_tree()
            if tree is not None:
                save_tree(tree, Path(out) / "tree.json")
            payload = {"config": cfg.model_dump(), "structures": docs}
            write_text(Path(out) / "stats.json", json.dumps(payload, indent=2, sort_keys=True))
    if fmt == "json":
        click.echo(canonical_json(docs))
        return
    for s in stats:
        cells = "/".join(str(ls.cells) for ls in s.levels) or "-"
        click.echo(f"{s.structure}: n={s.n} cells={cells} hash={s.structure_hash}")


@cli.command()
@click.argument("dataset", required=False, type=click.Path(dir_okay=False))
@config_options
@click.option("--queries", "queries_path", default=None, help="Query batch file.")
@click.option("--per-kind", type=int, default=16, help="Generated queries per kind.")
@click.option("--out", default=None, help="Results file (default: stdout).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@handles_errors
def query(
    dataset: str | None,
    queries_path: str | None,
    per_kind: int,
    out: str | None,
    fmt: str,
    **options: Any,
) -> None:
    """Answer a query batch; one row per query with its descent counts."""
    cfg = _run_config(options)
    with _workspace(dataset, cfg) as ws:
        batch = load_queries(queries_path) if queries_path else ws.default_queries(per_kind)
        results = ws.run_queries(batch)
    if fmt == "json":
        text = json.dumps([r.model_dump() for r in results], indent=2) + "\n"
    else:
        text = format_results(RESULT_COLUMNS, (r.to_row() for r in results))
    _emit(text, out)


@cli.command()
@click.argument("dataset", required=False, type=click.Path(dir_okay=False))
@config_options
@click.option("--queries", "queries_path", default=None, help="Query batch to check.")
@click.option("--tree", "tree_path", default=None, help="Audit only this serialized tree.")
@click.pass_context
@handles_errors
def verify(
    ctx: click.Context,
    dataset: str | None,
    queries_path: str | None,
    tree_path: str | None,
    **options: Any,
) -> None:
    """Audit every structure and check answers against brute force."""
    cfg = _run_config(options)
    with _workspace(dataset, cfg) as ws:
        if tree_path:
            result = ws.verify_tree(load_tree(tree_path))
        else:
            batch = load_queries(queries_path) if queries_path else None
            result = ws.verify(batch)
    _print_validation(result)
    if not result.valid:
        ctx.exit(EXIT_INVARIANT)


@cli.command()
@config_options
@click.option("--steps", type=int, default=3, help="Sizes in the doubling schedule.")
@click.option("--per-kind", type=int, default=32, help="Queries per kind and size.")
@click.option("--out", default=None, help="Table file (default: stdout).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@handles_errors
def bench(steps: int, per_kind: int, out: str | None, fmt: str, **options: Any) -> None:
    """Median query work over a doubling schedule starting at --n."""
    cfg = _run_config(options)
    rows = run_bench(cfg, doubling_schedule(cfg.n, steps), per_kind=per_kind)
    if fmt == "json":
        text = json.dumps([r.model_dump() for r in rows], indent=2) + "\n"
    else:
        text = format_results(BENCH_COLUMNS, (r.to_row() for r in rows))
    _emit(text, out)


if __name__ == "__main__":
    cli()
