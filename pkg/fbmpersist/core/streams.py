"""
Deterministic random substreams and chunked path-parallel execution
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Substream domains. Hurst draws and path draws never share a stream, so the
# simulated (H, path) pairs follow the product law exactly.
DOMAIN_PATHS = 0
DOMAIN_HURST = 1
DOMAIN_JOBS = 2


class Chunk(NamedTuple):
    index: int
    start: int
    count: int


def substream(seed: int, domain: int, *key: int) -> np.random.Generator:
    """Generator for one (domain, key...) substream of the master seed"""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(domain, *key))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit master seed for a nested job"""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(DOMAIN_JOBS, *key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def chunks(n_paths: int, chunk_size: int) -> List[Chunk]:
    """Split paths 0..n_paths-1 into fixed-size chunks; the last one may be short"""
    out = []
    for index, start in enumerate(range(0, n_paths, chunk_size)):
        out.append(Chunk(index, start, min(chunk_size, n_paths - start)))
    return out


def map_chunks(
    fn: Callable[[Chunk], T],
    n_paths: int,
    chunk_size: int,
    workers: int = 1,
) -> List[T]:
    """Apply fn to every chunk; results come back in chunk order.

    Chunk boundaries depend only on (n_paths, chunk_size), so the merged result
    is identical for any worker count.
    """
    work = chunks(n_paths, chunk_size)
    if workers <= 1 or len(work) <= 1:
        return [fn(chunk) for chunk in work]

    logger.debug(f"Running {len(work)} chunks on {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, work))
