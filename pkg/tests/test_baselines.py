"""Requesting baselines and the size-bounded caching policies."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachegame import (
    BoundedCache,
    GameParams,
    RunResult,
    TraceGenConfig,
    derive_equivalent_capacity,
    generate_catalog,
    lfu_step,
    lru_step,
    nr_request,
    random_request,
)


def catalog_of(num_videos, seed=5):
    cfg = TraceGenConfig(
        num_videos=num_videos, num_categories=2, num_users=3, num_slots=3, rng_seed=seed
    )
    return generate_catalog(cfg)


def test_nr_is_identity():
    row = np.zeros(6, dtype=bool)
    assert not nr_request(row).any()
    row[[3, 5]] = True
    out = nr_request(row)
    assert np.array_equal(out, row)
    out[0] = True  # the copy must not alias the input
    assert not row[0]


def test_random_request_zero_budget():
    catalog = catalog_of(10)
    rng = np.random.default_rng(0)
    out = random_request(np.array([1]), 0.0, catalog, np.zeros(10, dtype=bool), rng)
    assert np.flatnonzero(out).tolist() == [1]


def test_random_request_adds_disjoint_decoys():
    catalog = catalog_of(10)
    rng = np.random.default_rng(0)
    out = random_request(np.array([1]), 2.0, catalog, np.zeros(10, dtype=bool), rng)
    extras = np.flatnonzero(out & ~np.isin(np.arange(10), [1]))
    assert len(extras) == 2
    assert 1 not in extras


def test_random_request_respects_prior_requests():
    catalog = catalog_of(6)
    rng = np.random.default_rng(1)
    prior = np.zeros(6, dtype=bool)
    prior[[0, 2, 4]] = True
    out = random_request(np.array([1]), 10.0, catalog, prior, rng)
    # only 3 and 5 remain available
    assert np.flatnonzero(out).tolist() == [1, 3, 5]


def test_random_request_deterministic_under_seed():
    catalog = catalog_of(40)
    first = random_request(
        np.array([1]), 3.0, catalog, np.zeros(40, dtype=bool), np.random.default_rng(9)
    )
    second = random_request(
        np.array([1]), 3.0, catalog, np.zeros(40, dtype=bool), np.random.default_rng(9)
    )
    assert np.array_equal(first, second)


def test_random_request_long_run_average_matches_budget():
    catalog = catalog_of(4000, seed=2)
    rng = np.random.default_rng(3)
    budget = 2.5
    total = 0
    rounds = 2000
    for _ in range(rounds):
        out = random_request(
            np.array([0]), budget, catalog, np.zeros(4000, dtype=bool), rng
        )
        total += out.sum() - 1
    assert total / rounds == pytest.approx(budget, rel=0.05)


def uniform_cache(capacity, num_videos, size=0.5):
    sizes = np.full(num_videos, size)
    sizes[0] = 1.0  # keep a normalisation anchor out of the way
    return BoundedCache(capacity=capacity, sizes=sizes)


def test_lru_never_evicts_with_room():
    cache = uniform_cache(100.0, 10)
    _, mask = lru_step(cache, [1, 2, 3, 4, 5])
    assert mask[[1, 2, 3, 4, 5]].all()


def test_lru_evicts_oldest():
    cache = uniform_cache(1.0, 10)
    _, mask = lru_step(cache, [1, 2, 3])
    assert np.flatnonzero(mask).tolist() == [2, 3]


def test_lru_refresh_changes_victim():
    cache = uniform_cache(1.0, 10)
    lru_step(cache, [1, 2, 3])  # holds {2, 3}
    _, mask = lru_step(cache, [2, 4])  # refresh 2, insert 4, evict 3
    assert np.flatnonzero(mask).tolist() == [2, 4]


def test_lfu_keeps_frequent_entry():
    cache = uniform_cache(1.0, 10)
    _, mask = lfu_step(cache, [1, 1, 2, 3])
    assert np.flatnonzero(mask).tolist() == [1, 3]


def test_lfu_single_video_survives_any_stream():
    cache = uniform_cache(1.0, 10)
    lfu_step(cache, [1] * 5)
    _, mask = lfu_step(cache, [2, 3, 4, 5])
    assert mask[1]


def test_lfu_tie_breaks_by_insertion_age():
    cache = uniform_cache(1.0, 10)
    lfu_step(cache, [1, 2])  # equal frequency, 1 inserted first
    _, mask = lfu_step(cache, [3])
    assert np.flatnonzero(mask).tolist() == [2, 3]


def test_oversized_item_is_skipped_and_recorded():
    cache = uniform_cache(0.6, 4)  # video 0 has size 1.0 > capacity
    _, mask = lru_step(cache, [0, 1])
    assert not mask[0]
    assert mask[1]
    assert cache.skipped == [0]


@settings(max_examples=80, deadline=None)
@given(
    st.floats(min_value=0.5, max_value=3.0),
    st.lists(st.integers(0, 9), min_size=1, max_size=60),
    st.booleans(),
)
def test_bounded_cache_never_exceeds_capacity(capacity, stream, use_lfu):
    cache = uniform_cache(capacity, 10)
    step = lfu_step if use_lfu else lru_step
    for video in stream:
        step(cache, [video])
        assert cache.used <= capacity + 1e-12


def run_with_cache_bytes(values):
    result = RunResult(
        requesting="crvr", caching="evc", seed=0, params=GameParams(),
        num_users=1, num_videos=1,
    )
    result.cache_bytes = list(values)
    return result


def test_equivalent_capacity_examples():
    assert derive_equivalent_capacity(run_with_cache_bytes([0.0, 0.0])) == 0.0
    assert derive_equivalent_capacity(run_with_cache_bytes([0.5, 0.5])) == 0.5
    assert derive_equivalent_capacity(run_with_cache_bytes([0.4, 0.6])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        derive_equivalent_capacity(run_with_cache_bytes([]))
