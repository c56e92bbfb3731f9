"""Disclosure model: how much a public request profile gives away.

The population of devices induces, per video, a two-point distribution over
"requested it" / "did not request it".  A device's profile bit is scored by
its self-entropy under that distribution: matching the crowd costs nothing,
standing out costs -log of a small probability.

Two normalisations coexist on purpose.  Profile-level scores divide by the
number of devices.  The per-round disclosure change instead measures counts
against ``anchor``, the request count of the most popular video, because the
round-level formula needs headroom above every reachable count
(``anchor > 2 * (request_count + newcomers)``).
"""

from __future__ import annotations

import math

import numpy as np


def disclosure_pmf(request_count: float, num_users: int) -> tuple[float, float]:
    """Probability that a random device's profile bit is 0 resp. 1."""
    if num_users <= 0:
        raise ValueError(f"num_users must be positive, got {num_users}")
    if request_count < 0 or request_count > num_users:
        raise ValueError(
            f"request_count must lie in [0, {num_users}], got {request_count}"
        )
    p1 = request_count / num_users
    return 1.0 - p1, p1


def self_entropy(profile_bit: int, request_count: float, num_users: int) -> float:
    """Self-entropy (natural log) of one profile bit; +inf for probability 0."""
    p0, p1 = disclosure_pmf(request_count, num_users)
    p = p1 if profile_bit else p0
    if p == 0.0:
        return math.inf
    return -math.log(p)


def user_disclosure(
    profile_row: np.ndarray, request_counts: np.ndarray, num_users: int
) -> float:
    """Total self-entropy of a device's profile row; +inf propagates."""
    row = np.asarray(profile_row, dtype=bool)
    counts = np.asarray(request_counts, dtype=np.float64)
    if row.shape != counts.shape:
        raise ValueError(f"shape mismatch: {row.shape} vs {counts.shape}")
    if row.size == 0:
        return 0.0
    if num_users <= 0:
        raise ValueError(f"num_users must be positive, got {num_users}")
    if counts.min() < 0 or counts.max() > num_users:
        raise ValueError("request counts out of [0, num_users]")
    p = np.where(row, counts, num_users - counts) / num_users
    if np.any(p == 0.0):
        return math.inf
    return float(-np.log(p).sum())


def disclosure_change(
    requested: int,
    acted: int,
    request_count: float,
    newcomers: float,
    anchor: float,
) -> float:
    """Per-round change of a device's disclosure for one video.

    ``requested`` is the device's public-profile bit before the round,
    ``acted`` its public request this round, ``newcomers`` the number of
    first-time requesters counted by the convention of the caller: when the
    device itself requests a video it never requested before, its own request
    must be included in ``newcomers``.

    Three regimes:
      requested=1            -> log(m / (m + dn))        (never positive)
      requested=0, acted=1   -> log(n / (m + dn))
      requested=0, acted=0   -> log(n / (n - dn))        (never negative)
    with n = anchor - m.
    """
    m = float(request_count)
    dn = float(newcomers)
    if dn < 0:
        raise ValueError(f"newcomers must be >= 0, got {newcomers}")
    if anchor <= 2.0 * (m + dn):
        raise ValueError(
            f"anchor constraint violated: anchor={anchor} <= 2*(m+dn)={2 * (m + dn)}"
        )
    if requested:
        if m <= 0:
            raise ValueError("requested=1 implies request_count >= 1")
        return math.log(m / (m + dn))
    n = anchor - m
    if acted:
        if m + dn <= 0:
            raise ValueError("acted=1 implies at least one newcomer (the actor)")
        return math.log(n / (m + dn))
    return math.log(n / (n - dn))
