"""Online algorithms of the dynamic game.

The edge runs one caching step per slot before any device acts: a moving
average of last round's public request sums feeds the closed-form caching
rule.  Devices then answer their genuine demand, estimating everyone else's
first-time requests with a second moving average.
"""

from __future__ import annotations

import numpy as np

from .catalog import VideoCatalog
from .equilibrium import best_response_matrix, leader_best_response_vec
from .params import GameParams
from .state import SystemState, view_preference_row


def mav_update(prev_estimate, new_observation, smoothing: float):
    """Blend a fresh observation into a running estimate.

    ``smoothing`` is the weight on the previous estimate; works on scalars
    and arrays alike.
    """
    if not 0.0 <= smoothing <= 1.0:
        raise ValueError(f"smoothing must lie in [0, 1], got {smoothing}")
    obs = np.asarray(new_observation, dtype=np.float64)
    if np.any(obs < 0):
        raise ValueError("observations must be >= 0")
    result = (1.0 - smoothing) * obs + smoothing * np.asarray(
        prev_estimate, dtype=np.float64
    )
    return result if result.ndim else float(result)


def evc_step(
    state: SystemState, catalog: VideoCatalog, params: GameParams
) -> np.ndarray:
    """Leader step: refresh the demand estimate, announce cache fractions."""
    observed = state.last_actions.sum(axis=0).astype(np.float64)
    state.demand_estimate = mav_update(
        state.demand_estimate, observed, params.smoothing
    )
    state.cache_fracs = leader_best_response_vec(
        state.demand_estimate, catalog.sizes, params
    )
    return state.cache_fracs


def update_newcomer_estimate(state: SystemState, params: GameParams) -> np.ndarray:
    """Shared follower-side estimate of first-time requests, once per slot.

    Built from public information only (last round's actions and profiles),
    so every device reads the same value.
    """
    state.newcomer_estimate = mav_update(
        state.newcomer_estimate,
        state.last_newcomer_counts.astype(np.float64),
        params.smoothing,
    )
    return state.newcomer_estimate


def feasible_newcomer_estimate(state: SystemState, user: int) -> np.ndarray:
    """The shared newcomer estimate projected onto what other devices can do.

    From one device's perspective, at most ``num_users - m - 1`` others can
    still request a fresh video for the first time (``- 1`` only where the
    device itself is fresh).  The raw moving average can exceed that right
    after a burst saturates a video; projecting keeps every disclosure
    evaluation inside the anchor bound without touching the stored estimate.
    """
    fresh_self = (~state.requested[user]).astype(np.int64)
    room = np.maximum(state.num_users - state.request_counts - fresh_self, 0)
    return np.minimum(state.newcomer_estimate, room.astype(np.float64))


def crvr_step(
    state: SystemState,
    catalog: VideoCatalog,
    user: int,
    cache_fracs: np.ndarray,
    genuine_videos: np.ndarray,
    params: GameParams,
) -> np.ndarray:
    """Follower step: one device's public request vector for this slot.

    No genuine demand means no action.  Genuine demand fully covered by the
    local cache replays the previous public vector (the slot itself is served
    locally).  Otherwise every video is scored through the best-response rule
    with the shared newcomer estimate standing in for other devices'
    first-time requests; genuine videos are always requested unless already
    cached locally.
    """
    genuine = np.asarray(genuine_videos, dtype=np.int64)
    if genuine.size == 0:
        return np.zeros(state.num_videos, dtype=bool)
    cached = state.requested[user]
    if bool(cached[genuine].all()):
        return state.last_actions[user].copy()

    watched = state.watched[user].copy()
    watched[genuine] = True
    prefs = view_preference_row(
        watched, catalog.category_ids, catalog.num_categories, state.slot
    )
    newcomers = feasible_newcomer_estimate(state, user)
    try:
        actions = best_response_matrix(
            cached,
            prefs,
            state.popularity,
            catalog.sizes,
            state.request_counts.astype(np.float64),
            newcomers,
            np.asarray(cache_fracs, dtype=np.float64),
            params,
        )
    except ValueError as exc:
        raise ValueError(f"user {user}: {exc}") from exc
    actions = np.asarray(actions, dtype=bool)
    actions[genuine] = ~cached[genuine]
    return actions


def redundant_request_count(actions_row: np.ndarray, genuine_row: np.ndarray) -> int:
    """Requests that are not genuine demand (decoys and prefetches)."""
    actions = np.asarray(actions_row, dtype=bool)
    genuine = np.asarray(genuine_row, dtype=bool)
    if (genuine & ~actions).any():
        raise ValueError("public requests must cover genuine ones")
    return int((actions & ~genuine).sum())
