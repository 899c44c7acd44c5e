"""Parallel execution - fan-out/fan-in for independent numeric work items.

Used for chunked polynomial products, seed refinement and grid scans.
Results come back in submission order so that merges (and therefore the
serialized output) do not depend on thread scheduling.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class ParallelTask:
    """A single unit of work to run in parallel."""

    fn: Callable[..., Any]
    args: tuple = ()
    label: str = ""  # human-readable item name


@dataclass
class ParallelResult:
    """Result from a parallel fan-out, one slot per task in submission order."""

    results: List[Any] = field(default_factory=list)
    errors: Dict[int, str] = field(default_factory=dict)

    @property
    def all_succeeded(self) -> bool:
        return len(self.errors) == 0

    def successful(self) -> List[Any]:
        return [r for i, r in enumerate(self.results) if i not in self.errors]


def resolve_workers(max_workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else configured threads, else CPU count."""
    if max_workers is None:
        from config import get_settings

        max_workers = get_settings().threads
    if not max_workers:
        max_workers = os.cpu_count() or 1
    return max(1, int(max_workers))


def fan_out(
    tasks: Sequence[ParallelTask],
    max_workers: Optional[int] = None,
    on_error: Optional[Callable[[ParallelTask, Exception], None]] = None,
) -> ParallelResult:
    """Run tasks concurrently; failures are captured per task instead of raised."""
    workers = resolve_workers(max_workers)
    outcome = ParallelResult(results=[None] * len(tasks))
    if workers == 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            try:
                outcome.results[i] = task.fn(*task.args)
            except Exception as exc:
                logger.error("Task %s failed: %s", task.label or i, exc)
                outcome.errors[i] = str(exc)
                if on_error:
                    on_error(task, exc)
        return outcome

    with ThreadPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(task.fn, *task.args) for task in tasks]
        for i, (task, future) in enumerate(zip(tasks, futures)):
            try:
                outcome.results[i] = future.result()
            except Exception as exc:
                logger.error("Task %s failed: %s", task.label or i, exc)
                outcome.errors[i] = str(exc)
                if on_error:
                    on_error(task, exc)
    return outcome


def map_ordered(fn: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> List[R]:
    """Like ``map`` over a thread pool; the first failure is re-raised."""
    workers = resolve_workers(max_workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
