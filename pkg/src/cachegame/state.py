"""Evolving public/private profiles, aggregates and popularity scores.

One ``SystemState`` per run.  Profiles are cumulative ORs of past requests:
``requested`` holds everything a device ever asked for publicly (its local
cache — downloads are never evicted), ``watched`` everything it genuinely
played.  ``watched`` implies ``requested`` except during the round in which a
watch is served straight from the local cache.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import GenuineTrace, VideoCatalog
from .params import ConfigError, GameParams


class ContractViolation(ValueError):
    """Raised when round inputs break an engine contract."""


@dataclass
class SystemState:
    slot: int  # current slot (1-based, absolute)
    requested: np.ndarray  # (U, I) bool, public profile == local cache
    watched: np.ndarray  # (U, I) bool, private profile
    request_counts: np.ndarray  # (I,) int64, column sums of `requested`
    popularity: np.ndarray  # (I,) float64, decayed public request mass
    cache_fracs: np.ndarray  # (I,) float64 in [0, 1], announced by the edge
    demand_estimate: np.ndarray  # (I,) float64, moving average of request sums
    newcomer_estimate: np.ndarray  # (I,) float64, moving average of first-time counts
    last_actions: np.ndarray  # (U, I) bool, previous round's public requests
    last_newcomer_counts: np.ndarray  # (I,) int64, first-time requests last round

    @property
    def num_users(self) -> int:
        return int(self.requested.shape[0])

    @property
    def num_videos(self) -> int:
        return int(self.requested.shape[1])

    def local_cache(self, user: int) -> np.ndarray:
        """Videos held on a device: everything it ever requested."""
        return self.requested[user]


def update_popularity(
    popularity: np.ndarray, total_actions: np.ndarray, decay: float
) -> np.ndarray:
    """One decayed-accumulation step; equals the direct exponential sum."""
    if decay <= 0:
        raise ConfigError(f"decay must be > 0, got {decay}")
    totals = np.asarray(total_actions, dtype=np.float64)
    if np.any(totals < 0):
        raise ConfigError("action totals must be >= 0")
    return math.exp(-decay) * (np.asarray(popularity, dtype=np.float64) + totals)


def init_state(
    catalog: VideoCatalog,
    num_users: int,
    warmup: GenuineTrace,
    params: GameParams,
) -> SystemState:
    """Replay the warmup block (no redundancy: public == genuine) into a state.

    Estimators start at zero; the online game only begins at the first test
    slot, so warmup actions neither seed the demand estimate nor count as a
    previous round.
    """
    params = params.resolve_anchor(num_users)
    params.validate()
    num_videos = catalog.num_videos
    requested = np.zeros((num_users, num_videos), dtype=bool)
    popularity = np.zeros(num_videos, dtype=np.float64)
    for slot in warmup.slots:
        totals = np.zeros(num_videos, dtype=np.float64)
        for user, videos in warmup.slot_requests(slot).items():
            requested[user, videos] = True
            np.add.at(totals, videos, 1.0)
        popularity = update_popularity(popularity, totals, params.decay)
    request_counts = requested.sum(axis=0).astype(np.int64)
    bad = np.flatnonzero(2 * request_counts >= params.anchor)
    if bad.size:
        raise ConfigError(
            f"anchor {params.anchor} too small for warmup request count "
            f"{int(request_counts[bad[0]])} of video {int(bad[0])}"
        )
    return SystemState(
        slot=warmup.last_slot + 1,
        requested=requested,
        watched=requested.copy(),
        request_counts=request_counts,
        popularity=popularity,
        cache_fracs=np.zeros(num_videos, dtype=np.float64),
        demand_estimate=np.zeros(num_videos, dtype=np.float64),
        newcomer_estimate=np.zeros(num_videos, dtype=np.float64),
        last_actions=np.zeros((num_users, num_videos), dtype=bool),
        last_newcomer_counts=np.zeros(num_videos, dtype=np.int64),
    )


def first_time_request_count(state: SystemState, actions: np.ndarray) -> np.ndarray:
    """Per video, how many devices request it now for the first time ever."""
    return (np.asarray(actions, dtype=bool) & ~state.requested).sum(axis=0).astype(
        np.int64
    )


def apply_round(
    state: SystemState,
    public_actions: np.ndarray,
    genuine_actions: np.ndarray,
    params: GameParams,
) -> SystemState:
    """Fold one round of actions into the state (mutates and returns it).

    Public requests must cover every genuine request that is not already
    served by the device's local cache (a cached watch stays private).
    """
    actions = np.asarray(public_actions, dtype=bool)
    genuine = np.asarray(genuine_actions, dtype=bool)
    if actions.shape != state.requested.shape or genuine.shape != actions.shape:
        raise ContractViolation("action matrices must match the profile shape")
    uncovered = genuine & ~actions & ~state.requested
    if uncovered.any():
        user, video = map(int, np.argwhere(uncovered)[0])
        raise ContractViolation(
            f"genuine request of user {user} for video {video} is neither "
            "public nor locally cached"
        )
    newcomers = first_time_request_count(state, actions)
    bad = np.flatnonzero(2 * (state.request_counts + newcomers) >= params.anchor)
    if bad.size:
        video = int(bad[0])
        raise ConfigError(
            f"anchor {params.anchor} violated at slot {state.slot} for video "
            f"{video}: request count {int(state.request_counts[video])} plus "
            f"{int(newcomers[video])} newcomers"
        )
    state.requested |= actions
    state.watched |= genuine
    state.request_counts = state.requested.sum(axis=0).astype(np.int64)
    totals = actions.sum(axis=0).astype(np.float64)
    state.popularity = update_popularity(state.popularity, totals, params.decay)
    state.last_actions = actions.copy()
    state.last_newcomer_counts = newcomers
    state.slot += 1
    return state


def view_preference_row(
    watched_row: np.ndarray,
    category_ids: np.ndarray,
    num_categories: int,
    slot: int,
) -> np.ndarray:
    """Per-video preference of one device: category watch share, zero if watched."""
    if slot < 1:
        raise ConfigError(f"slot must be >= 1, got {slot}")
    watched = np.asarray(watched_row, dtype=bool)
    per_category = np.bincount(
        category_ids, weights=watched.astype(np.float64), minlength=num_categories
    )
    return (~watched) * per_category[category_ids] / float(slot)


def view_preference(
    state: SystemState, catalog: VideoCatalog, user: int, video: int
) -> float:
    """Preference of ``user`` for ``video`` given everything watched so far."""
    row = view_preference_row(
        state.watched[user], catalog.category_ids, catalog.num_categories, state.slot
    )
    return float(row[video])


def write_state_snapshot_csv(
    path: str | Path,
    snapshots: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]],
) -> Path:
    """Dump per-slot (request counts, popularity, cache fraction) diagnostics."""
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["slot", "video_id", "m", "phat", "e"])
        for slot, counts, popularity, cache_fracs in snapshots:
            for video in range(len(counts)):
                writer.writerow(
                    [
                        slot,
                        video,
                        int(counts[video]),
                        f"{popularity[video]:.9g}",
                        f"{cache_fracs[video]:.9g}",
                    ]
                )
    return path
