"""Run histories: everything the metrics need, recorded slot by slot."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import GameParams


@dataclass
class RunResult:
    """History and final snapshot of one simulation run.

    Per-slot lists are aligned with ``slots``.  ``action_rows[k]`` holds the
    public requests of slot ``slots[k]`` as an integer array with columns
    (user, video, genuine, replay); replayed rows repeat a device's previous
    public vector while its demand is served from local cache.
    """

    requesting: str
    caching: str
    seed: int
    params: GameParams
    num_users: int
    num_videos: int
    label: str = ""
    axis: str = ""
    axis_value: float = float("nan")
    trace_digest: str = ""
    slots: list[int] = field(default_factory=list)
    action_rows: list[np.ndarray] = field(default_factory=list)
    phase_log: list[tuple[int, str]] = field(default_factory=list)
    ec_request_bytes: list[float] = field(default_factory=list)
    ec_served_bytes: list[float] = field(default_factory=list)
    watch_events: list[int] = field(default_factory=list)
    watch_hits: list[int] = field(default_factory=list)
    redundant_counts: list[int] = field(default_factory=list)
    fresh_redundant_counts: list[int] = field(default_factory=list)
    active_users: list[int] = field(default_factory=list)
    cache_bytes: list[float] = field(default_factory=list)
    benefit_mean: list[float] = field(default_factory=list)
    privacy_mean: list[float] = field(default_factory=list)
    cost_mean: list[float] = field(default_factory=list)
    total_mean: list[float] = field(default_factory=list)
    ec_utilities: list[float] = field(default_factory=list)
    final_requested: np.ndarray | None = None
    final_watched: np.ndarray | None = None

    @property
    def num_slots(self) -> int:
        return len(self.slots)

    def write_actions_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="\n", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["slot", "user_id", "video_id", "genuine", "replay"])
            for slot, rows in zip(self.slots, self.action_rows):
                for user, video, genuine, replay in rows.tolist():
                    writer.writerow([slot, user, video, genuine, replay])
        return path
