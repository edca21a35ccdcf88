# -*- coding: utf-8 -*-

# * Copyright (c) 2024. Authors: see NOTICE file.
# *
# * Licensed under the Apache License, Version 2.0 (the "License");
# * you may not use this file except in compliance with the License.
# * You may obtain a copy of the License at
# *
# *      http://www.apache.org/licenses/LICENSE-2.0
# *
# * Unless required by applicable law or agreed to in writing, software
# * distributed under the License is distributed on an "AS IS" BASIS,
# * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# * See the License for the specific language governing permissions and
# * limitations under the License.

import os
import queue
from multiprocessing import cpu_count
from threading import Thread
from typing import Any, Callable, List, Sequence, Tuple, TypeVar

T = TypeVar("T")  # Type of elements in data
R = TypeVar("R")  # Return type of worker_fn


class WorkerError(Exception):
    """Wraps an exception raised by a worker, with the index of the item."""

    def __init__(self, index: int, error: BaseException) -> None:
        self.index = index
        self.error = error
        super().__init__(f"Item {index} failed: {error!r}")


def generic_parallel(
    data: Sequence[T],
    worker_fn: Callable[[T], R],
    n_workers: int = 0,
) -> List[R]:
    """Run a function on a batch of data in parallel using a given processing function.

    Parameters
    ----------
    data: sequence
        The items to process.
    worker_fn: callable
        A function that executes the operation on one item. It has one
        parameter which must be the same type as the items of `data`.
    n_workers: int
        Number of worker threads (default: uses all the available processors).
        With a single worker (or a single item) everything runs in the
        calling thread.

    Returns
    -------
    results: list
        The values returned by `worker_fn`, in the order of `data` whatever
        the completion order of the workers.

    Raises
    ------
    WorkerError:
        The first failure in data order, once all workers are done.
    """
    if n_workers <= 0:
        n_workers = cpu_count()
    n_workers = min(n_workers, len(data))

    if n_workers <= 1:
        return [worker_fn(item) for item in data]

    def worker(_in: Any, _out: Any) -> None:
        while True:
            job = _in.get()
            if job is None:
                break
            index, item = job
            try:
                _out.put((index, True, worker_fn(item)))
            except Exception as e:  # pylint: disable=broad-except
                _out.put((index, False, e))

    # instantiate multiprocessing objects
    in_queue: queue.Queue = queue.Queue()
    out_queue: queue.Queue = queue.Queue()
    threads = [
        Thread(target=worker, args=[in_queue, out_queue]) for _ in range(n_workers)
    ]

    for t in threads:
        t.daemon = True
        t.start()

    for index, item in enumerate(data):
        in_queue.put((index, item))

    # feed `n_workers` None values in the queue to stop the workers
    for _ in range(n_workers):
        in_queue.put(None)

    # wait for the jobs to finish
    for t in threads:
        t.join()

    outcomes: List[Tuple[int, bool, Any]] = []
    while not out_queue.empty():
        outcomes.append(out_queue.get_nowait())
    outcomes.sort(key=lambda outcome: outcome[0])

    for index, success, value in outcomes:
        if not success:
            raise WorkerError(index, value)
    return [value for _, _, value in outcomes]


def generic_chunk_parallel(
    data: Sequence[T],
    worker_fn: Callable[[Sequence[T]], R],
    chunk_size: int = 1,
    n_workers: int = 0,
) -> List[Tuple[Tuple[int, int], R]]:
    """Execute a worker function on all elements of a data list.
    Items are processed by batch of size 'chunk_size'.

    Returns
    -------
    results: list
        Tuples in data order. First element of the tuple is the slice
        (start, end) of the chunk (end excluded), the second element is the
        value returned by `worker_fn` for this slice.
    """
    chunk_limits = [
        (start, min(start + chunk_size, len(data)))
        for start in range(0, len(data), chunk_size)
    ]

    def worker_wrapper(startend: Tuple[int, int]) -> R:
        _start, _end = startend
        return worker_fn(data[_start:_end])

    results = generic_parallel(chunk_limits, worker_wrapper, n_workers=n_workers)
    return list(zip(chunk_limits, results))


def makedirs(path: str, exist_ok: bool = True) -> None:
    """Create `path` and its parents; an empty path is the working directory."""
    if path:
        os.makedirs(path, exist_ok=exist_ok)
