"""Partree: exact planar partition trees for range counting, stabbing and ray shooting."""

__version__ = "0.1.0"

from partree.client import Workspace
from partree.models import BenchRow, BuildStats, QueryResult, RunConfig, ValidationResult

__all__ = [
    "BenchRow",
    "BuildStats",
    "QueryResult",
    "RunConfig",
    "ValidationResult",
    "Workspace",
    "__version__",
]
