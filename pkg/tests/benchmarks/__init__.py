"""Scaling benchmarks for partree structures."""
