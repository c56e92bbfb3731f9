"""Per-round utility functions of the edge cache and of the user devices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import GameParams
from .privacy import disclosure_change


@dataclass
class UdContext:
    """Everything a device needs to value one candidate video this round.

    view_pref        preference score for the video (>= 0, 0 if watched)
    popularity       decayed popularity score of the video (>= 0)
    size             normalised video size in (0, 1]
    requested        public-profile bit of the device for this video
    request_count    devices whose profile bit is already 1
    newcomer_others  first-time requests by *other* devices this round
                     (exact count or estimate; may be fractional)
    cache_frac       fraction of the video held at the edge, in [0, 1]
    """

    view_pref: float
    popularity: float
    size: float
    requested: int
    request_count: float
    newcomer_others: float
    cache_frac: float
    params: GameParams


def ec_utility(
    cache_fracs: np.ndarray,
    actions: np.ndarray,
    sizes: np.ndarray,
    params: GameParams,
) -> float:
    """Edge utility: log-shaped gain per served request minus caching cost.

    ``actions`` is the devices-by-videos binary request matrix.
    """
    request_sums = np.asarray(actions, dtype=np.float64).sum(axis=0)
    return float(ec_utility_terms(cache_fracs, request_sums, sizes, params).sum())


def ec_utility_terms(
    cache_fracs: np.ndarray,
    request_sums: np.ndarray,
    sizes: np.ndarray,
    params: GameParams,
) -> np.ndarray:
    """Per-video edge utility terms (the totals are separable over videos)."""
    e = np.asarray(cache_fracs, dtype=np.float64)
    if np.any(e < 0) or np.any(e > 1):
        raise ValueError("cache fractions must lie in [0, 1]")
    s = np.asarray(request_sums, dtype=np.float64)
    c = np.asarray(sizes, dtype=np.float64)
    gain = s * np.log1p(e * c)
    cost = params.beta_ec * e * c * params.eps_ec
    return gain - cost


def ud_caching_benefit(ctx: UdContext, acted: int) -> float:
    """Value of prefetching: preference x popularity x size x edge miss."""
    if not acted:
        return 0.0
    return ctx.view_pref * ctx.popularity * ctx.size * (1.0 - ctx.cache_frac)


def ud_caching_cost(ctx: UdContext, acted: int) -> float:
    """Local caching cost of a request: size times unit cost."""
    if not acted:
        return 0.0
    return ctx.size * ctx.params.eps_ud


def ud_utility(ctx: UdContext, acted: int) -> float:
    """Device utility of playing ``acted`` on a video it does not watch now.

    The disclosure term counts the device's own first-time request on top of
    ``newcomer_others`` when it requests a video absent from its profile.
    """
    own = 1.0 if (acted and not ctx.requested) else 0.0
    change = disclosure_change(
        ctx.requested,
        acted,
        ctx.request_count,
        ctx.newcomer_others + own,
        ctx.params.anchor,
    )
    p = ctx.params
    return (
        ud_caching_benefit(ctx, acted)
        - p.gamma * change
        - p.beta * ud_caching_cost(ctx, acted)
    )
