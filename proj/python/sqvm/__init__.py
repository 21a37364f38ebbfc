"""Embedded SQL engine with a tracing optimizer."""

from ._core import (
    Connection,
    Error,
    ExecutionError,
    Statement,
    SqlSyntaxError,
    UsageError,
    bench,
    generate_fixture,
)

SUITES = ("select", "innerjoin", "hostjoin", "hostfunction", "hostaggregate", "filltable")
MODES = ("interp", "full", "no-inline", "no-flags")

__all__ = [
    "Connection",
    "Error",
    "ExecutionError",
    "MODES",
    "SUITES",
    "SqlSyntaxError",
    "Statement",
    "UsageError",
    "bench",
    "generate_fixture",
]
