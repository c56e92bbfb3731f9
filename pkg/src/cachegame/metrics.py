"""Evaluation metrics computed from run histories.

PDR (privacy disclosure ratio): final-slot self-entropy of the public profile
over that of the genuine profile, per device; 1 means redundancy changed
nothing, below 1 means the public profile blends in better than the genuine
one would have.

CHR (cache hit ratio): fraction of first watches served from the device's
local cache, i.e. watches whose video an earlier redundant request already
downloaded.

BOR (bandwidth offloading ratio): fraction of the bytes requested from the
edge that the edge itself served; the remainder travelled from the origin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .privacy import user_disclosure
from .results import RunResult


@dataclass
class PdrReport:
    per_user: np.ndarray  # ratio per device, NaN where excluded
    mean: float
    excluded: list[int] = field(default_factory=list)  # zero-denominator devices
    infinite: list[int] = field(default_factory=list)  # infinite-entropy flags

    @property
    def num_scored(self) -> int:
        return int(np.isfinite(self.per_user).sum())


def compute_pdr(result: RunResult, denominator: str = "genuine") -> PdrReport:
    """Per-device and mean disclosure ratio at the final slot.

    ``denominator`` picks the aggregate model scoring the genuine profile:
    "genuine" (default) uses watch counts, "public" scores the same genuine
    profile against the public request counts.
    """
    if result.final_requested is None or result.final_watched is None:
        raise ValueError("run result lacks final profiles")
    if denominator not in ("genuine", "public"):
        raise ValueError(f"unknown denominator mode {denominator!r}")
    requested = result.final_requested
    watched = result.final_watched
    num_users = result.num_users
    public_counts = requested.sum(axis=0)
    base_counts = watched.sum(axis=0) if denominator == "genuine" else public_counts
    ratios = np.full(num_users, np.nan)
    excluded: list[int] = []
    infinite: list[int] = []
    for user in range(num_users):
        top = user_disclosure(requested[user], public_counts, num_users)
        bottom = user_disclosure(watched[user], base_counts, num_users)
        if math.isinf(top) or math.isinf(bottom):
            infinite.append(user)
        if bottom == 0.0 or (math.isinf(top) and math.isinf(bottom)):
            excluded.append(user)
            continue
        if math.isinf(bottom):
            ratios[user] = 0.0
        else:
            ratios[user] = top / bottom
    scored = ratios[np.isfinite(ratios)]
    mean = float(scored.mean()) if scored.size else math.nan
    return PdrReport(per_user=ratios, mean=mean, excluded=excluded, infinite=infinite)


def compute_chr(result: RunResult) -> float | None:
    """Locally served share of first watches; None when nothing was watched."""
    events = sum(result.watch_events)
    if events == 0:
        return None
    return sum(result.watch_hits) / events


def compute_bor(result: RunResult) -> float | None:
    """Edge-served share of requested bytes; None when nothing reached the edge."""
    requested = sum(result.ec_request_bytes)
    if requested == 0.0:
        return None
    return sum(result.ec_served_bytes) / requested


def average_redundant(result: RunResult) -> float:
    """Mean redundant requests per device-with-demand per slot.

    Counts every public request outside the genuine demand, including
    re-requests of videos a device already holds (replayed vectors).
    """
    active = sum(result.active_users)
    if active == 0:
        return 0.0
    return sum(result.redundant_counts) / active


def average_fresh_redundant(result: RunResult) -> float:
    """Mean redundant *downloads* per device-with-demand per slot.

    Only first-time requests count: this is the number of decoy video
    contents actually fetched and cached, the quantity budget-matched
    comparisons fix across requesting strategies.
    """
    active = sum(result.active_users)
    if active == 0:
        return 0.0
    return sum(result.fresh_redundant_counts) / active


def utility_timeseries(result: RunResult) -> dict[str, np.ndarray]:
    """Per-slot device-averaged utility terms plus the edge utility."""
    return {
        "slot": np.asarray(result.slots, dtype=np.int64),
        "benefit": np.asarray(result.benefit_mean),
        "privacy": np.asarray(result.privacy_mean),
        "cost": np.asarray(result.cost_mean),
        "total": np.asarray(result.total_mean),
        "edge": np.asarray(result.ec_utilities),
    }


def utility_stability(result: RunResult) -> tuple[float, float]:
    """Variance of the per-slot average device utility: first vs last fifth."""
    totals = np.asarray(result.total_mean)
    if totals.size < 5:
        raise ValueError("run too short for a stability comparison")
    window = max(1, totals.size // 5)
    return float(totals[:window].var()), float(totals[-window:].var())


def write_metrics_csv(result: RunResult, path: str | Path) -> Path:
    """Dump all metrics as ``metric,scope,value`` rows (NA for undefined)."""
    pdr = compute_pdr(result)
    hit_ratio = compute_chr(result)
    offload = compute_bor(result)
    rows: list[tuple[str, str, str]] = [
        ("pdr", "mean", _fmt(pdr.mean)),
        ("chr", "run", _fmt(hit_ratio)),
        ("bor", "run", _fmt(offload)),
        ("redundant_per_active_user_slot", "run", _fmt(average_redundant(result))),
        ("fresh_redundant_per_active_user_slot", "run",
         _fmt(average_fresh_redundant(result))),
    ]
    for user in range(result.num_users):
        rows.append((f"pdr", f"user_{user}", _fmt(float(pdr.per_user[user]))))
    for user in pdr.excluded:
        rows.append(("pdr_excluded", f"user_{user}", "1"))
    for user in pdr.infinite:
        rows.append(("pdr_infinite_entropy", f"user_{user}", "1"))
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["metric", "scope", "value"])
        writer.writerows(rows)
    return path


def write_utility_csv(result: RunResult, path: str | Path) -> Path:
    series = utility_timeseries(result)
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["slot", "benefit", "privacy", "cost", "total", "edge"])
        for k in range(len(series["slot"])):
            writer.writerow(
                [int(series["slot"][k])]
                + [_fmt(float(series[name][k])) for name in
                   ("benefit", "privacy", "cost", "total", "edge")]
            )
    return path


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "NA"
    return repr(float(value))
