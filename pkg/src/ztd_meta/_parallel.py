"""Capped worker parallelism for independent work items.

Work items must be pure functions of their arguments (each owning its own
random sub-stream); results are returned in input order, so serial and
parallel execution are bit-identical.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence


def clamp_jobs(jobs: int) -> int:
    """Validate and cap a worker count to the available CPUs."""
    if int(jobs) != jobs or jobs < 1:
        raise ValueError(f"jobs must be a positive integer, got {jobs!r}")
    return min(int(jobs), os.cpu_count() or 1)


def map_ordered(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Apply ``fn`` to each item, with at most ``jobs`` concurrent workers.

    Returns results in input order regardless of completion order.
    """
    jobs = clamp_jobs(jobs)
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
