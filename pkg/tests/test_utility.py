"""Edge and device utility functions against hand-evaluated values."""

import math

import numpy as np
import pytest

from cachegame import GameParams, UdContext, ec_utility, ec_utility_terms, ud_caching_benefit, ud_caching_cost, ud_utility


def make_ctx(**overrides):
    base = dict(
        view_pref=0.4,
        popularity=1.0,
        size=0.5,
        requested=0,
        request_count=4,
        newcomer_others=1.0,
        cache_frac=0.0,
        params=GameParams(gamma=0.1, beta=0.1, eps_ud=1.0, anchor=21),
    )
    base.update(overrides)
    return UdContext(**base)


def test_ec_utility_zero_cache_is_zero():
    actions = np.ones((3, 4), dtype=bool)
    assert ec_utility(np.zeros(4), actions, np.full(4, 0.5), GameParams()) == 0.0


def test_ec_utility_single_video_example():
    actions = np.ones((3, 1), dtype=bool)
    value = ec_utility(
        np.array([1.0]), actions, np.array([0.5]), GameParams(beta_ec=0.1, eps_ec=1.0)
    )
    assert value == pytest.approx(3 * math.log(1.5) - 0.05)


def test_ec_utility_pure_cost_without_requests():
    actions = np.zeros((2, 1), dtype=bool)
    value = ec_utility(
        np.array([1.0]), actions, np.array([1.0]), GameParams(beta_ec=1.0, eps_ec=1.0)
    )
    assert value == pytest.approx(-1.0)


def test_ec_utility_rejects_out_of_range_fracs():
    with pytest.raises(ValueError):
        ec_utility(np.array([1.5]), np.ones((1, 1), dtype=bool), np.array([0.5]), GameParams())


def test_ec_utility_separable_over_video_permutations():
    rng = np.random.default_rng(4)
    actions = rng.random((5, 6)) < 0.5
    sizes = rng.uniform(0.1, 1.0, 6)
    fracs = rng.uniform(0.0, 1.0, 6)
    params = GameParams()
    perm = rng.permutation(6)
    assert ec_utility(fracs, actions, sizes, params) == pytest.approx(
        ec_utility(fracs[perm], actions[:, perm], sizes[perm], params)
    )


def test_ec_utility_concave_in_each_cache_frac():
    rng = np.random.default_rng(9)
    params = GameParams()
    for _ in range(200):
        total = float(rng.integers(1, 10))
        size = rng.uniform(0.05, 1.0)
        lo, hi = sorted(rng.uniform(0.0, 1.0, 2))
        mid = (lo + hi) / 2
        values = ec_utility_terms(
            np.array([lo, mid, hi]), np.full(3, total), np.full(3, size), params
        )
        assert values[1] >= (values[0] + values[2]) / 2 - 1e-12


def test_benefit_examples():
    assert ud_caching_benefit(make_ctx(), 0) == 0.0
    assert ud_caching_benefit(make_ctx(cache_frac=1.0), 1) == 0.0
    assert ud_caching_benefit(make_ctx(), 1) == pytest.approx(0.2)


def test_cost_examples():
    assert ud_caching_cost(make_ctx(), 0) == 0.0
    assert ud_caching_cost(make_ctx(), 1) == pytest.approx(0.5)
    two = make_ctx(size=1.0, params=GameParams(eps_ud=2.0, anchor=21))
    assert ud_caching_cost(two, 1) == pytest.approx(2.0)


def test_ud_utility_idle_without_newcomers_is_zero():
    assert ud_utility(make_ctx(newcomer_others=0.0), 0) == 0.0


def test_ud_utility_collapses_to_benefit_without_weights():
    ctx = make_ctx(params=GameParams(gamma=0.0, beta=1e-300, anchor=21))
    assert ud_utility(ctx, 1) == pytest.approx(ud_caching_benefit(ctx, 1))


def test_ud_utility_worked_example():
    # benefit 0.2, privacy 0.1 * ln(17/6) with the device's own request
    # counted on top of one other newcomer, cost 0.1 * 0.5
    value = ud_utility(make_ctx(), 1)
    assert value == pytest.approx(0.2 - 0.1 * math.log(17 / 6) - 0.05)
    assert value == pytest.approx(0.045854612517183886)


def test_ud_utility_monotone_in_action_without_privacy_and_cost():
    rng = np.random.default_rng(10)
    for _ in range(200):
        ctx = make_ctx(
            view_pref=rng.uniform(0, 2),
            popularity=rng.uniform(0, 3),
            size=rng.uniform(0.05, 1),
            cache_frac=rng.uniform(0, 1),
            newcomer_others=float(rng.integers(0, 5)),
            params=GameParams(gamma=0.0, beta=1e-300, anchor=41),
        )
        assert ud_utility(ctx, 1) >= ud_utility(ctx, 0)
