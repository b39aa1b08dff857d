"""Partree CLI: dataset generation, builds, query batches, audits and benchmarks."""
