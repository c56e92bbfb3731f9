"""Baseline requesting strategies and size-bounded caching policies.

The game-driven edge policy caches fractions of videos with no hard size
budget; classical policies need one, so comparisons use the game policy's
time-averaged occupied capacity as the shared budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import VideoCatalog


def nr_request(genuine_row: np.ndarray) -> np.ndarray:
    """No redundancy: the public vector is exactly the genuine demand."""
    return np.asarray(genuine_row, dtype=bool).copy()


def random_request(
    genuine_videos: np.ndarray,
    budget_per_slot: float,
    catalog: VideoCatalog,
    prior_requested: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Genuine demand plus uniformly random decoys.

    Adds floor(budget) decoys (one more with the fractional probability)
    drawn from videos neither genuinely requested now nor ever requested
    before; when fewer remain, all of them are taken.
    """
    if budget_per_slot < 0:
        raise ValueError(f"budget must be >= 0, got {budget_per_slot}")
    actions = np.zeros(catalog.num_videos, dtype=bool)
    genuine = np.asarray(genuine_videos, dtype=np.int64)
    actions[genuine] = True
    count = int(budget_per_slot)
    if rng.random() < budget_per_slot - count:
        count += 1
    if count == 0:
        return actions
    allowed = np.flatnonzero(~actions & ~np.asarray(prior_requested, dtype=bool))
    if count >= allowed.size:
        actions[allowed] = True
        return actions
    actions[rng.choice(allowed, size=count, replace=False)] = True
    return actions


@dataclass
class _Entry:
    last_used: int
    freq: int
    inserted: int


@dataclass
class BoundedCache:
    """Whole-video cache with a total-size budget and policy metadata."""

    capacity: float
    sizes: np.ndarray
    entries: dict[int, _Entry] = field(default_factory=dict)
    clock: int = 0
    skipped: list[int] = field(default_factory=list)  # items larger than capacity

    @property
    def used(self) -> float:
        return float(sum(self.sizes[video] for video in self.entries))

    def cached_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.sizes), dtype=bool)
        for video in self.entries:
            mask[video] = True
        return mask


def _evict_until_fits(cache: BoundedCache, incoming_size: float, key) -> None:
    while cache.entries and cache.used + incoming_size > cache.capacity:
        victim = min(cache.entries, key=lambda v: key(cache.entries[v]))
        del cache.entries[victim]


def _step(cache: BoundedCache, requested_ids, key) -> tuple[BoundedCache, np.ndarray]:
    for video in np.asarray(requested_ids, dtype=np.int64).tolist():
        cache.clock += 1
        entry = cache.entries.get(video)
        if entry is not None:
            entry.last_used = cache.clock
            entry.freq += 1
            continue
        size = float(cache.sizes[video])
        if size > cache.capacity:
            cache.skipped.append(video)
            continue
        _evict_until_fits(cache, size, key)
        cache.entries[video] = _Entry(
            last_used=cache.clock, freq=1, inserted=cache.clock
        )
    return cache, cache.cached_mask()


def lru_step(
    cache: BoundedCache, requested_ids
) -> tuple[BoundedCache, np.ndarray]:
    """Hits refresh recency; misses insert, evicting least-recently-used first."""
    return _step(cache, requested_ids, key=lambda e: e.last_used)


def lfu_step(
    cache: BoundedCache, requested_ids
) -> tuple[BoundedCache, np.ndarray]:
    """Hits bump frequency; misses evict least-frequent, oldest insertion first."""
    return _step(cache, requested_ids, key=lambda e: (e.freq, e.inserted))


def derive_equivalent_capacity(result) -> float:
    """Time-averaged edge capacity a run actually occupied."""
    if not result.cache_bytes:
        raise ValueError("run holds no caching history")
    return float(np.mean(result.cache_bytes))
