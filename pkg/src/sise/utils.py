"""Small shared helpers: seeded RNG derivation and optional thread mapping."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import InvalidConfigError


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator for (seed, key...) independent of call order.

    Every seeded pipeline in the package derives per-task generators through
    this function so that reruns with the same seed are byte-identical and
    parallel scheduling cannot change results.
    """
    if seed < 0 or any(k < 0 for k in key):
        raise InvalidConfigError("seeds and derivation keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse (seed, key...) to a single reproducible integer seed."""
    if seed < 0 or any(k < 0 for k in key):
        raise InvalidConfigError("seeds and derivation keys must be non-negative")
    return int(np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(1)[0])


def thread_map(fn, items, threads: int = 1) -> list:
    """Ordered map, optionally on a thread pool.

    Results are reduced in input order, so the outcome does not depend on
    scheduling; tasks must draw randomness only from derived seeds.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
