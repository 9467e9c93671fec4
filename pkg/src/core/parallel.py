from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

import config
from core import logger as log

log = log.get_logger()

T = TypeVar("T")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, *stream); equal keys give equal streams."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def worker_count(requested: Optional[int] = None) -> int:
    workers = config.DWH_THREADS if requested is None else requested
    return max(1, int(workers))


def chunk_bounds(n_items: int, chunk_size: Optional[int] = None) -> List[tuple]:
    size = chunk_size or config.CHUNK_SIZE
    return [(start, min(start + size, n_items)) for start in range(0, n_items, size)]


def chunk_map(
    fn: Callable[[int, int], T],
    n_items: int,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> List[T]:
    """Run fn(start, stop) over consecutive chunks; results come back in chunk order."""
    bounds = chunk_bounds(n_items, chunk_size)
    n_workers = min(worker_count(workers), max(1, len(bounds)))
    log.debug(f"[chunk_map] {n_items} items in {len(bounds)} chunks on {n_workers} workers")
    if n_workers == 1:
        return [fn(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
