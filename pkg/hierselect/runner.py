from __future__ import annotations

import logging
import os
from collections.abc import Callable, Sequence
from typing import Any, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)

_DEFAULT_WORKERS = object()

try:
    from concurrent.futures import ProcessPoolExecutor, as_completed
except ImportError:
    NO_PROCESSING = True
else:
    NO_PROCESSING = False


def dump_stats(stats: dict[str, int], unit: str = "replication") -> str:
    messages = []
    for status, count in stats.items():
        if count == 0:
            continue

        message = f"{count} {unit}"
        if count > 1:
            message += "s"
        message += f" {status}"
        messages.append(message)

    return ", ".join(messages)


def _determine_workers(workers: Any, debug_mode: bool = False) -> int:
    if isinstance(workers, int) and not isinstance(workers, bool):
        if workers < 1:
            raise ValueError(f"Invalid number of workers: {workers!r}")
        return workers
    elif workers is _DEFAULT_WORKERS:
        cpu_count = os.cpu_count()
        if debug_mode or not cpu_count:
            return 1
        else:
            return cpu_count
    else:
        raise ValueError(f"Invalid number of workers: {workers!r}")


def run_tasks(
    func: Callable[[T], R],
    tasks: Sequence[T],
    workers: Any = _DEFAULT_WORKERS,
    debug_mode: bool = False,
) -> list[R]:
    """Apply ``func`` to every task, in a process pool when more than one
    worker is requested. Results come back in task order whatever order
    they finish in."""
    workers = min(_determine_workers(workers, debug_mode), max(len(tasks), 1))

    if workers == 1 or NO_PROCESSING:
        if workers > 1:
            logger.warning(
                "multiprocessing is not available, so using the sequential execution"
            )
        return [func(task) for task in tasks]

    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, task): index for index, task in enumerate(tasks)}
        results: dict[int, R] = {}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    return [results[index] for index in range(len(tasks))]
