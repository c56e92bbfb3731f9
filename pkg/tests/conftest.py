"""Shared fixtures; the default-scale trace and runs are session-scoped."""

from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from cachegame import (
    GenuineTrace,
    TraceGenConfig,
    VideoCatalog,
    generate_catalog,
    generate_trace,
    split_trace,
)


@dataclass
class DefaultTrace:
    config: TraceGenConfig
    catalog: VideoCatalog
    warmup: GenuineTrace
    test: GenuineTrace
    elapsed: float


@pytest.fixture(scope="session")
def default_trace() -> DefaultTrace:
    """The desk-scale default workload: 100 devices, 2000 videos, 600 test slots."""
    start = time.perf_counter()
    config = TraceGenConfig(rng_seed=0)
    catalog = generate_catalog(config)
    trace = generate_trace(catalog, config)
    warmup, test = split_trace(trace, 0.4)
    return DefaultTrace(config, catalog, warmup, test, time.perf_counter() - start)


@pytest.fixture(scope="session")
def small_trace() -> DefaultTrace:
    """A fast workload for engine-level tests."""
    start = time.perf_counter()
    config = TraceGenConfig(
        num_videos=120,
        num_categories=4,
        num_users=15,
        num_slots=80,
        rng_seed=7,
    )
    catalog = generate_catalog(config)
    trace = generate_trace(catalog, config)
    warmup, test = split_trace(trace, 0.4)
    return DefaultTrace(config, catalog, warmup, test, time.perf_counter() - start)
