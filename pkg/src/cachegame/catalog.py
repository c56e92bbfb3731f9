"""Video catalog, synthetic request-trace generation, and CSV ingestion.

Traces are synthetic stand-ins for a real request log: a global Zipf
popularity over videos is blended with per-user Dirichlet category weights,
users are active per slot with a fixed probability, and active users request
a truncated-Poisson number of distinct videos.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import ConfigError


class TraceFormatError(ValueError):
    """Malformed catalog or trace file (carries the offending line number)."""


class TraceIntegrityError(ValueError):
    """Trace refers to a video absent from the companion catalog."""


@dataclass(frozen=True)
class VideoCatalog:
    """Immutable video set: normalised sizes plus a category partition."""

    sizes: np.ndarray  # (I,) float64 in (0, 1], max exactly 1
    category_ids: np.ndarray  # (I,) int64 in [0, num_categories)
    num_categories: int

    @property
    def num_videos(self) -> int:
        return int(self.sizes.shape[0])

    def category_members(self, category: int) -> np.ndarray:
        return np.flatnonzero(self.category_ids == category)

    def validate(self) -> None:
        if self.sizes.ndim != 1 or self.category_ids.shape != self.sizes.shape:
            raise ConfigError("sizes and category_ids must be 1-D and equal length")
        if self.num_videos == 0:
            raise ConfigError("catalog is empty")
        if self.sizes.min() <= 0 or self.sizes.max() > 1:
            raise ConfigError("sizes must lie in (0, 1]")
        if self.sizes.max() != 1.0:
            raise ConfigError("largest video must have size exactly 1")
        if self.category_ids.min() < 0 or self.category_ids.max() >= self.num_categories:
            raise ConfigError("category ids out of range")


@dataclass(frozen=True)
class TraceGenConfig:
    """Knobs of the synthetic workload generator."""

    num_videos: int = 2000
    num_categories: int = 6
    num_users: int = 100
    num_slots: int = 1000
    zipf_exponent: float = 0.9
    mean_requests_per_active_slot: float = 2.0
    user_activity_prob: float = 0.35
    pref_concentration: float = 5.0
    rng_seed: int = 0

    def validate(self) -> None:
        for name in ("num_videos", "num_categories", "num_users", "num_slots"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.zipf_exponent <= 0:
            raise ConfigError(f"zipf_exponent must be > 0, got {self.zipf_exponent}")
        if self.mean_requests_per_active_slot <= 0:
            raise ConfigError("mean_requests_per_active_slot must be > 0")
        if not 0.0 <= self.user_activity_prob <= 1.0:
            raise ConfigError("user_activity_prob must lie in [0, 1]")
        if self.pref_concentration <= 0:
            raise ConfigError("pref_concentration must be > 0")


@dataclass
class GenuineTrace:
    """Per-slot, per-user sets of genuinely watched videos.

    ``requests[slot][user]`` is a sorted array of distinct video ids; slots
    are 1-based and cover ``first_slot .. first_slot + num_slots - 1``.
    """

    num_users: int
    num_slots: int
    first_slot: int = 1
    requests: dict[int, dict[int, np.ndarray]] = field(default_factory=dict)

    @property
    def last_slot(self) -> int:
        return self.first_slot + self.num_slots - 1

    @property
    def slots(self) -> range:
        return range(self.first_slot, self.first_slot + self.num_slots)

    @property
    def num_requests(self) -> int:
        return sum(
            len(videos) for users in self.requests.values() for videos in users.values()
        )

    def slot_requests(self, slot: int) -> dict[int, np.ndarray]:
        return self.requests.get(slot, {})

    def validate(self, catalog: VideoCatalog) -> None:
        for slot, users in self.requests.items():
            if slot not in self.slots:
                raise ConfigError(f"slot {slot} outside {self.slots}")
            for user, videos in users.items():
                if not 0 <= user < self.num_users:
                    raise ConfigError(f"user {user} out of range")
                if len(videos) == 0:
                    raise ConfigError(f"empty request set for user {user} slot {slot}")
                if len(np.unique(videos)) != len(videos):
                    raise ConfigError(f"duplicate videos for user {user} slot {slot}")
                if videos.min() < 0 or videos.max() >= catalog.num_videos:
                    raise TraceIntegrityError(
                        f"video id out of catalog range in slot {slot}"
                    )

    def digest(self) -> str:
        """Stable content hash; equal traces hash equally."""
        hasher = hashlib.sha256()
        hasher.update(f"{self.num_users},{self.num_slots},{self.first_slot};".encode())
        for slot in sorted(self.requests):
            for user in sorted(self.requests[slot]):
                videos = ",".join(map(str, self.requests[slot][user].tolist()))
                hasher.update(f"{slot}:{user}:{videos};".encode())
        return hasher.hexdigest()


def generate_catalog(cfg: TraceGenConfig) -> VideoCatalog:
    """Sizes uniform on (0, 1] rescaled so the largest is exactly 1; random categories."""
    cfg.validate()
    rng = np.random.default_rng([cfg.rng_seed, 0])
    sizes = 1.0 - rng.random(cfg.num_videos)  # in (0, 1]
    sizes = sizes / sizes.max()
    category_ids = rng.integers(0, cfg.num_categories, size=cfg.num_videos)
    catalog = VideoCatalog(
        sizes=sizes,
        category_ids=category_ids.astype(np.int64),
        num_categories=cfg.num_categories,
    )
    catalog.validate()
    return catalog


def generate_trace(catalog: VideoCatalog, cfg: TraceGenConfig) -> GenuineTrace:
    """Zipf-popularity workload filtered through per-user category tastes."""
    cfg.validate()
    if catalog.num_videos != cfg.num_videos:
        raise ConfigError("catalog size does not match the generator config")
    rng = np.random.default_rng([cfg.rng_seed, 1])
    zipf = np.arange(1, cfg.num_videos + 1, dtype=np.float64) ** (-cfg.zipf_exponent)
    tastes = rng.dirichlet(
        np.full(cfg.num_categories, cfg.pref_concentration), size=cfg.num_users
    )
    weights = zipf[None, :] * tastes[:, catalog.category_ids]
    weights /= weights.sum(axis=1, keepdims=True)

    requests: dict[int, dict[int, np.ndarray]] = {}
    for slot in range(1, cfg.num_slots + 1):
        slot_map: dict[int, np.ndarray] = {}
        for user in range(cfg.num_users):
            if rng.random() >= cfg.user_activity_prob:
                continue
            count = 0
            while count == 0:  # Poisson conditioned on >= 1
                count = int(rng.poisson(cfg.mean_requests_per_active_slot))
            count = min(count, cfg.num_videos)
            videos = rng.choice(cfg.num_videos, size=count, replace=False, p=weights[user])
            slot_map[user] = np.sort(videos.astype(np.int64))
        if slot_map:
            requests[slot] = slot_map
    trace = GenuineTrace(
        num_users=cfg.num_users, num_slots=cfg.num_slots, requests=requests
    )
    trace.validate(catalog)
    return trace


def split_trace(
    trace: GenuineTrace, warmup_fraction: float
) -> tuple[GenuineTrace, GenuineTrace]:
    """Split slots into a leading warmup block and the remaining test block."""
    if not 0.0 < warmup_fraction < 1.0:
        raise ConfigError(f"warmup_fraction must lie in (0, 1), got {warmup_fraction}")
    if trace.num_slots < 1:
        raise ConfigError("cannot split an empty trace")
    cut = math.floor(warmup_fraction * trace.num_slots)
    if cut < 1:
        raise ConfigError(
            f"warmup_fraction {warmup_fraction} leaves an empty warmup block"
        )
    boundary = trace.first_slot + cut  # first test slot
    warmup = GenuineTrace(trace.num_users, cut, trace.first_slot)
    test = GenuineTrace(trace.num_users, trace.num_slots - cut, boundary)
    for slot, users in trace.requests.items():
        target = warmup if slot < boundary else test
        target.requests[slot] = {u: v.copy() for u, v in users.items()}
    return warmup, test


def concat_traces(head: GenuineTrace, tail: GenuineTrace) -> GenuineTrace:
    """Inverse of ``split_trace`` for adjacent slot blocks."""
    if tail.first_slot != head.last_slot + 1:
        raise ConfigError("traces are not adjacent")
    if head.num_users != tail.num_users:
        raise ConfigError("user populations differ")
    merged = GenuineTrace(
        head.num_users, head.num_slots + tail.num_slots, head.first_slot
    )
    for part in (head, tail):
        for slot, users in part.requests.items():
            merged.requests[slot] = {u: v.copy() for u, v in users.items()}
    return merged


# ---------------------------------------------------------------------------
# CSV interfaces: catalog `video_id,category_id,size`, trace `user_id,slot,video_id`
# ---------------------------------------------------------------------------


def write_catalog_csv(catalog: VideoCatalog, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["video_id", "category_id", "size"])
        for video in range(catalog.num_videos):
            writer.writerow(
                [video, int(catalog.category_ids[video]), repr(float(catalog.sizes[video]))]
            )
    return path


def read_catalog_csv(path: str | Path) -> VideoCatalog:
    path = Path(path)
    rows: list[tuple[int, int, float]] = []
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["video_id", "category_id", "size"]:
            raise TraceFormatError(f"line 1: bad catalog header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                video, category, size = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(f"line {lineno}: malformed row {row}") from exc
            rows.append((video, category, size))
    if not rows:
        raise TraceFormatError("catalog file has no rows")
    rows.sort()
    ids = [video for video, _, _ in rows]
    if ids != list(range(len(rows))):
        raise TraceFormatError("video ids must be dense 0..n-1")
    catalog = VideoCatalog(
        sizes=np.array([size for _, _, size in rows], dtype=np.float64),
        category_ids=np.array([cat for _, cat, _ in rows], dtype=np.int64),
        num_categories=int(max(cat for _, cat, _ in rows)) + 1,
    )
    catalog.validate()
    return catalog


def write_trace_csv(trace: GenuineTrace, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["user_id", "slot", "video_id"])
        for slot in sorted(trace.requests):
            for user in sorted(trace.requests[slot]):
                for video in trace.requests[slot][user].tolist():
                    writer.writerow([user, slot, video])
    return path


def read_trace_csv(path: str | Path, catalog: VideoCatalog) -> GenuineTrace:
    path = Path(path)
    seen: set[tuple[int, int, int]] = set()
    requests: dict[int, dict[int, list[int]]] = {}
    max_user = -1
    max_slot = 0
    with path.open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["user_id", "slot", "video_id"]:
            raise TraceFormatError(f"line 1: bad trace header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                user, slot, video = int(row[0]), int(row[1]), int(row[2])
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(f"line {lineno}: malformed row {row}") from exc
            if user < 0 or slot < 1:
                raise TraceFormatError(f"line {lineno}: user/slot out of range")
            if not 0 <= video < catalog.num_videos:
                raise TraceIntegrityError(
                    f"line {lineno}: video {video} not in catalog"
                )
            key = (user, slot, video)
            if key in seen:
                raise TraceFormatError(f"line {lineno}: duplicate request row {key}")
            seen.add(key)
            requests.setdefault(slot, {}).setdefault(user, []).append(video)
            max_user = max(max_user, user)
            max_slot = max(max_slot, slot)
    trace = GenuineTrace(
        num_users=max_user + 1,
        num_slots=max_slot,
        requests={
            slot: {
                user: np.array(sorted(videos), dtype=np.int64)
                for user, videos in users.items()
            }
            for slot, users in requests.items()
        },
    )
    trace.validate(catalog)
    return trace


def load_trace(
    catalog_path: str | Path, trace_path: str | Path
) -> tuple[VideoCatalog, GenuineTrace]:
    """Read the catalog/trace CSV pair and cross-check referential integrity."""
    catalog = read_catalog_csv(catalog_path)
    trace = read_trace_csv(trace_path, catalog)
    return catalog, trace
