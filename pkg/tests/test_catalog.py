"""Catalog generation, workload synthesis, CSV round trips, splitting."""

import numpy as np
import pytest

from cachegame import (
    ConfigError,
    TraceFormatError,
    TraceGenConfig,
    TraceIntegrityError,
    concat_traces,
    generate_catalog,
    generate_trace,
    load_trace,
    read_catalog_csv,
    read_trace_csv,
    split_trace,
    write_catalog_csv,
    write_trace_csv,
)


def tiny_config(**overrides):
    base = dict(
        num_videos=30,
        num_categories=3,
        num_users=6,
        num_slots=12,
        zipf_exponent=0.9,
        mean_requests_per_active_slot=1.5,
        user_activity_prob=0.6,
        pref_concentration=1.0,
        rng_seed=7,
    )
    base.update(overrides)
    return TraceGenConfig(**base)


def test_single_video_catalog_is_the_anchor():
    catalog = generate_catalog(tiny_config(num_videos=1, num_categories=1))
    assert catalog.num_videos == 1
    assert catalog.sizes[0] == 1.0


def test_catalog_generation_is_deterministic():
    cfg = tiny_config(num_videos=100, num_categories=5)
    first = generate_catalog(cfg)
    second = generate_catalog(cfg)
    assert np.array_equal(first.sizes, second.sizes)
    assert np.array_equal(first.category_ids, second.category_ids)


def test_large_catalog_invariants():
    catalog = generate_catalog(tiny_config(num_videos=2000, num_categories=20, rng_seed=1))
    assert catalog.sizes.min() > 0
    assert catalog.sizes.max() == 1.0
    members = [catalog.category_members(c) for c in range(catalog.num_categories)]
    assert sum(len(m) for m in members) == catalog.num_videos
    assert np.array_equal(
        np.sort(np.concatenate(members)), np.arange(catalog.num_videos)
    )


def test_invalid_config_rejected():
    with pytest.raises(ConfigError):
        generate_catalog(tiny_config(num_videos=0))
    with pytest.raises(ConfigError):
        generate_catalog(tiny_config(zipf_exponent=0.0))
    with pytest.raises(ConfigError):
        generate_catalog(tiny_config(user_activity_prob=1.5))


def test_zero_activity_means_empty_trace():
    cfg = tiny_config(user_activity_prob=0.0)
    trace = generate_trace(generate_catalog(cfg), cfg)
    assert trace.num_requests == 0


def test_trace_generation_is_deterministic():
    cfg = tiny_config()
    catalog = generate_catalog(cfg)
    assert generate_trace(catalog, cfg).digest() == generate_trace(catalog, cfg).digest()


def test_request_frequency_follows_rank():
    cfg = tiny_config(
        num_videos=400,
        num_categories=6,
        num_users=100,
        num_slots=500,
        zipf_exponent=0.8,
        pref_concentration=5.0,
        user_activity_prob=0.35,
        mean_requests_per_active_slot=2.0,
        rng_seed=0,
    )
    catalog = generate_catalog(cfg)
    trace = generate_trace(catalog, cfg)
    counts = np.zeros(cfg.num_videos)
    for slot in trace.slots:
        for videos in trace.slot_requests(slot).values():
            np.add.at(counts, videos, 1)
    from scipy.stats import spearmanr

    rho, _ = spearmanr(np.arange(cfg.num_videos), counts)
    assert rho <= -0.9


def test_generated_traces_satisfy_invariants_for_many_configs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        cfg = TraceGenConfig(
            num_videos=int(rng.integers(1, 25)),
            num_categories=int(rng.integers(1, 5)),
            num_users=int(rng.integers(1, 6)),
            num_slots=int(rng.integers(1, 7)),
            zipf_exponent=float(rng.uniform(0.2, 1.5)),
            mean_requests_per_active_slot=float(rng.uniform(0.5, 3.0)),
            user_activity_prob=float(rng.uniform(0.0, 1.0)),
            pref_concentration=float(rng.uniform(0.2, 5.0)),
            rng_seed=int(rng.integers(0, 2**32)),
        )
        catalog = generate_catalog(cfg)
        trace = generate_trace(catalog, cfg)
        trace.validate(catalog)  # raises on any violation


def test_split_follows_flooring():
    cfg = tiny_config(num_slots=30)
    trace = generate_trace(generate_catalog(cfg), cfg)
    warmup, test = split_trace(trace, 0.4)
    assert list(warmup.slots) == list(range(1, 13))
    assert list(test.slots) == list(range(13, 31))


def test_split_rejects_degenerate_fractions():
    cfg = tiny_config(num_slots=10)
    trace = generate_trace(generate_catalog(cfg), cfg)
    with pytest.raises(ConfigError):
        split_trace(trace, 0.01)  # floor gives an empty warmup
    with pytest.raises(ConfigError):
        split_trace(trace, 1.2)


def test_split_concat_round_trip():
    cfg = tiny_config(num_slots=10)
    trace = generate_trace(generate_catalog(cfg), cfg)
    warmup, test = split_trace(trace, 0.5)
    assert warmup.num_slots == 5 and test.num_slots == 5
    assert concat_traces(warmup, test).digest() == trace.digest()


def test_csv_round_trip(tmp_path):
    cfg = tiny_config()
    catalog = generate_catalog(cfg)
    trace = generate_trace(catalog, cfg)
    catalog_path = write_catalog_csv(catalog, tmp_path / "catalog.csv")
    trace_path = write_trace_csv(trace, tmp_path / "trace.csv")
    loaded_catalog, loaded_trace = load_trace(catalog_path, trace_path)
    assert np.array_equal(loaded_catalog.sizes, catalog.sizes)
    assert np.array_equal(loaded_catalog.category_ids, catalog.category_ids)
    assert loaded_trace.digest() == trace.digest()
    # writing the loaded structures again reproduces the bytes
    second = write_trace_csv(loaded_trace, tmp_path / "again.csv")
    assert second.read_bytes() == trace_path.read_bytes()


def test_empty_trace_file(tmp_path):
    cfg = tiny_config(num_videos=4, num_categories=1)
    catalog = generate_catalog(cfg)
    path = tmp_path / "empty.csv"
    path.write_text("user_id,slot,video_id\n", encoding="utf-8")
    trace = read_trace_csv(path, catalog)
    assert trace.num_requests == 0
    assert trace.num_slots == 0


def test_three_row_trace_file(tmp_path):
    cfg = tiny_config(num_videos=8, num_categories=1)
    catalog = generate_catalog(cfg)
    path = tmp_path / "t.csv"
    path.write_text(
        "user_id,slot,video_id\n0,1,5\n1,1,5\n0,2,6\n", encoding="utf-8"
    )
    trace = read_trace_csv(path, catalog)
    assert trace.num_requests == 3
    assert trace.num_slots == 2
    assert trace.num_users == 2


def test_dangling_video_id_is_integrity_error(tmp_path):
    cfg = tiny_config(num_videos=4, num_categories=1)
    catalog = generate_catalog(cfg)
    path = tmp_path / "bad.csv"
    path.write_text("user_id,slot,video_id\n0,1,99\n", encoding="utf-8")
    with pytest.raises(TraceIntegrityError):
        read_trace_csv(path, catalog)


def test_malformed_row_reports_line_number(tmp_path):
    cfg = tiny_config(num_videos=4, num_categories=1)
    catalog = generate_catalog(cfg)
    path = tmp_path / "bad.csv"
    path.write_text("user_id,slot,video_id\n0,1,2\nnot,a,row\n", encoding="utf-8")
    with pytest.raises(TraceFormatError, match="line 3"):
        read_trace_csv(path, catalog)


def test_duplicate_rows_rejected(tmp_path):
    cfg = tiny_config(num_videos=4, num_categories=1)
    catalog = generate_catalog(cfg)
    path = tmp_path / "dup.csv"
    path.write_text("user_id,slot,video_id\n0,1,2\n0,1,2\n", encoding="utf-8")
    with pytest.raises(TraceFormatError, match="duplicate"):
        read_trace_csv(path, catalog)


def test_catalog_header_checked(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("video,category,size\n", encoding="utf-8")
    with pytest.raises(TraceFormatError):
        read_catalog_csv(path)
