#!/usr/bin/env python
# coding: utf-8
"""Process pool for independent jobs (cross-validation splits, repetitions).

Workers pull indexed jobs from a queue and push indexed results back; the
caller reassembles results in input order, so the output never depends on
which worker finished first.
"""

# native
from dataclasses import dataclass
from functools import partial
from multiprocessing import Process, Queue
from typing import Any, Callable, Iterable, Iterator, List, Optional
import os
import queue

# lib
from tqdm import tqdm

# pkg
from .errors import WorkerError

POLL_SECONDS = 0.1
"""How long to wait for a result before checking that workers are alive."""


@dataclass
class Msg:
    """Message for a queue."""

    kind: str = ""
    data: Any = None


def queuer(q: Queue) -> Iterator[Msg]:
    """Yield messages from a queue."""
    while True:
        try:
            msg = q.get(block=True, timeout=0.05)
            if msg.kind == "END":
                break
            yield msg
        except queue.Empty:
            continue


def notify_and_join(q: Queue, procs: List[Process]):
    """Notify a list of processes to end and wait for them to join."""
    for _ in range(len(procs)):
        q.put(Msg(kind="END"))
    # all processes notified

    for p in procs:
        p.join()
    # all processes ended


def work(fn: Callable, read_q: Queue, write_q: Queue):
    """Apply `fn` to every job until told to stop."""
    for msg in queuer(read_q):
        idx, item = msg.data
        try:
            write_q.put(Msg("DONE", (idx, fn(item))))
        except Exception as e:  # pylint: disable=broad-except
            write_q.put(Msg("ERROR", (idx, f"{type(e).__name__}: {e} (pid {os.getpid()})")))


def parallel_map(
    fn: Callable, items: Iterable, cpus: int = 1, desc: Optional[str] = None
) -> List[Any]:
    """Return `[fn(item) for item in items]`, using up to `cpus` processes.

    `fn` and the items must be picklable when `cpus > 1`.

    >>> parallel_map(abs, [-1, 2, -3])
    [1, 2, 3]
    """
    items = list(items)
    if cpus <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=None, leave=False)]

    read_q: Queue = Queue()
    write_q: Queue = Queue()
    procs = [
        Process(daemon=True, target=partial(work, fn, read_q, write_q))
        for _ in range(min(cpus, len(items)))
    ]
    for p in procs:
        p.start()
    for idx, item in enumerate(items):
        read_q.put(Msg("WORK", (idx, item)))

    results, errors = {}, []
    with tqdm(total=len(items), desc=desc, disable=None, leave=False) as bar:
        while len(results) + len(errors) < len(items):
            try:
                msg = write_q.get(timeout=POLL_SECONDS)
            except queue.Empty:
                dead = [p for p in procs if not p.is_alive()]
                if dead:
                    for p in procs:
                        p.terminate()
                    raise WorkerError(
                        f"worker pid {dead[0].pid} exited with code {dead[0].exitcode} "
                        f"before finishing; {len(items) - len(results) - len(errors)} job(s) unfinished"
                    ) from None
                continue
            idx, data = msg.data
            if msg.kind == "ERROR":
                errors.append((idx, data))
            else:
                results[idx] = data
            bar.update(1)

    notify_and_join(read_q, procs)
    if errors:
        idx, message = min(errors)
        raise WorkerError(f"job {idx} failed: {message}")
    return [results[idx] for idx in range(len(items))]
