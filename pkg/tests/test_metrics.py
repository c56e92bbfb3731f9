"""Metric formulas on hand-built run histories."""

import math

import numpy as np
import pytest

from cachegame import (
    GameParams,
    RunResult,
    average_fresh_redundant,
    average_redundant,
    compute_bor,
    compute_chr,
    compute_pdr,
    user_disclosure,
    utility_stability,
    utility_timeseries,
)


def blank_result(num_users=3, num_videos=4, **overrides):
    result = RunResult(
        requesting="nr", caching="evc", seed=0, params=GameParams(),
        num_users=num_users, num_videos=num_videos,
    )
    for key, value in overrides.items():
        setattr(result, key, value)
    return result


def test_pdr_is_one_when_profiles_match():
    profiles = np.array(
        [[1, 0, 1, 0], [0, 1, 1, 0], [1, 1, 0, 0]], dtype=bool
    )
    result = blank_result(final_requested=profiles.copy(), final_watched=profiles.copy())
    report = compute_pdr(result)
    assert report.mean == 1.0
    assert all(r == 1.0 for r in report.per_user[np.isfinite(report.per_user)])


def test_pdr_zero_for_crowd_matching_public_profile():
    # everyone requested videos 0 and 1 publicly; user 0 watched only video 0
    requested = np.ones((3, 2), dtype=bool)
    watched = np.array([[1, 0], [1, 1], [1, 0]], dtype=bool)
    result = blank_result(num_videos=2, final_requested=requested, final_watched=watched)
    report = compute_pdr(result)
    assert report.per_user[0] == 0.0


def test_pdr_toy_run_matches_hand_evaluation():
    requested = np.array([[1, 1], [0, 1]], dtype=bool)
    watched = np.array([[1, 0], [0, 1]], dtype=bool)
    result = blank_result(num_users=2, num_videos=2,
                          final_requested=requested, final_watched=watched)
    report = compute_pdr(result)
    public_counts = requested.sum(axis=0)
    watch_counts = watched.sum(axis=0)
    for user in range(2):
        top = user_disclosure(requested[user], public_counts, 2)
        bottom = user_disclosure(watched[user], watch_counts, 2)
        assert report.per_user[user] == pytest.approx(top / bottom)


def test_pdr_denominator_mode_switch():
    requested = np.array([[1, 1], [0, 1]], dtype=bool)
    watched = np.array([[1, 0], [0, 1]], dtype=bool)
    result = blank_result(num_users=2, num_videos=2,
                          final_requested=requested, final_watched=watched)
    genuine = compute_pdr(result, denominator="genuine")
    public = compute_pdr(result, denominator="public")
    assert not np.allclose(genuine.per_user, public.per_user, equal_nan=True)
    with pytest.raises(ValueError):
        compute_pdr(result, denominator="other")


def test_pdr_excludes_zero_denominator_users():
    # user 1 watched nothing anybody else watched: all its watch bits are 0
    # and no video was watched at all, so its genuine profile scores zero
    requested = np.array([[1, 0], [1, 0]], dtype=bool)
    watched = np.zeros((2, 2), dtype=bool)
    result = blank_result(num_users=2, num_videos=2,
                          final_requested=requested, final_watched=watched)
    report = compute_pdr(result)
    assert report.excluded == [0, 1]
    assert math.isnan(report.mean)


def test_chr_cases():
    assert compute_chr(blank_result(watch_events=[0, 0], watch_hits=[0, 0])) is None
    assert compute_chr(blank_result(watch_events=[4, 6], watch_hits=[4, 6])) == 1.0
    assert compute_chr(blank_result(watch_events=[5, 5], watch_hits=[1, 2])) == pytest.approx(0.3)


def test_bor_cases():
    assert compute_bor(blank_result(ec_request_bytes=[], ec_served_bytes=[])) is None
    full = blank_result(ec_request_bytes=[1.5], ec_served_bytes=[1.5])
    assert compute_bor(full) == 1.0
    nothing = blank_result(ec_request_bytes=[1.5], ec_served_bytes=[0.0])
    assert compute_bor(nothing) == 0.0
    # two requests: (size .5, frac .5) and (size 1, frac 1)
    mixed = blank_result(ec_request_bytes=[1.5], ec_served_bytes=[0.25 + 1.0])
    assert compute_bor(mixed) == pytest.approx(1.25 / 1.5)


def test_redundancy_averages():
    result = blank_result(
        redundant_counts=[4, 2], fresh_redundant_counts=[2, 1], active_users=[2, 1]
    )
    assert average_redundant(result) == 2.0
    assert average_fresh_redundant(result) == 1.0
    empty = blank_result(redundant_counts=[], fresh_redundant_counts=[], active_users=[])
    assert average_redundant(empty) == 0.0


def test_utility_timeseries_zero_run():
    result = blank_result(
        slots=[1, 2], benefit_mean=[0.0, 0.0], privacy_mean=[0.0, 0.0],
        cost_mean=[0.0, 0.0], total_mean=[0.0, 0.0], ec_utilities=[0.0, 0.0],
    )
    series = utility_timeseries(result)
    for name in ("benefit", "privacy", "cost", "total", "edge"):
        assert not series[name].any()


def test_utility_timeseries_single_record_matches_components():
    benefit = 0.2
    privacy = 0.1 * math.log(17 / 6)
    cost = 0.05
    result = blank_result(
        slots=[1], benefit_mean=[benefit], privacy_mean=[privacy],
        cost_mean=[cost], total_mean=[benefit - privacy - cost], ec_utilities=[0.0],
    )
    series = utility_timeseries(result)
    assert series["benefit"][0] == pytest.approx(0.2)
    assert series["privacy"][0] == pytest.approx(0.104145, abs=1e-6)
    assert series["cost"][0] == pytest.approx(0.05)


def test_utility_stability_statistic():
    quiet_tail = [5.0, -5.0, 4.0, -4.0, 3.0, -3.0, 1.0, 1.1, 0.9, 1.0]
    result = blank_result(total_mean=quiet_tail, slots=list(range(10)))
    first, last = utility_stability(result)
    assert last <= first


def test_bor_invariant_to_user_relabelling(small_trace):
    """Permuting device ids leaves the offloading ratio unchanged."""
    import numpy as np

    from cachegame import GenuineTrace, run_simulation
    from cachegame.engine import ExperimentConfig

    perm = np.random.default_rng(5).permutation(small_trace.test.num_users)

    def relabel(trace):
        return GenuineTrace(
            num_users=trace.num_users,
            num_slots=trace.num_slots,
            first_slot=trace.first_slot,
            requests={
                slot: {int(perm[u]): videos.copy() for u, videos in users.items()}
                for slot, users in trace.requests.items()
            },
        )

    config = ExperimentConfig(trace=small_trace.config, requesting="crvr",
                              caching="evc", seed=0)
    base = run_simulation(small_trace.catalog, small_trace.warmup, small_trace.test, config)
    permuted = run_simulation(
        small_trace.catalog, relabel(small_trace.warmup), relabel(small_trace.test), config
    )
    assert compute_bor(base) == pytest.approx(compute_bor(permuted))
