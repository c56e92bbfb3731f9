"""Closed-form best responses and brute-force equilibrium verification.

The round game has one leader (the edge cache, choosing per-video cache
fractions) and many followers (devices, choosing binary request vectors).
Videos decouple: every utility is a sum of per-video terms, so responses and
checks run per video.

Follower side.  For a video the device already has on its public profile,
requesting again pays off iff the prefetch value beats the caching cost.  For
a fresh video the relaxed (fractional) objective is concave and its interior
optimum is ``fractional_response``; the binary decision itself is taken by
comparing the two endpoint utilities exactly, which is what the acceptance
oracle demands (rounding the clamped interior value disagrees with the
endpoint argmax on a thin but real parameter band).

Leader side.  The per-video edge utility is concave; the optimum is a clipped
linear function of the request sum (``leader_best_response``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .params import GameParams
from .utility import UdContext, ec_utility_terms, ud_utility

#: default tolerance for comparing utilities
UTILITY_TOL = 1e-6
#: default grid step for the leader brute-force search
LEADER_GRID_STEP = 1e-4


class ResponseSingularity(ArithmeticError):
    """The relaxed objective is linear in the request level (no interior optimum)."""


def fractional_response(ctx: UdContext) -> float:
    """Interior optimum of the relaxed request level for a fresh video.

    ``ctx.newcomer_others`` plays the role of the anticipated first-time
    requests by everyone else.  Raises ``ResponseSingularity`` when the
    caching-cost and prefetch-benefit margins cancel exactly.
    """
    p = ctx.params
    den = p.beta * ctx.size * p.eps_ud - ctx.size * ctx.view_pref * ctx.popularity * (
        1.0 - ctx.cache_frac
    )
    if den == 0.0:
        raise ResponseSingularity("zero marginal denominator")
    m = float(ctx.request_count)
    dn = float(ctx.newcomer_others)
    n = p.anchor - m
    big_n = n - m - 2.0 * dn
    if big_n <= 0:
        raise ValueError(
            f"anchor constraint violated: anchor={p.anchor} <= 2*(m+dn)={2 * (m + dn)}"
        )
    return p.gamma / den + (n - dn) / big_n


def clamped_response(ctx: UdContext) -> float:
    """Fractional response clamped into the feasible request range [0, 1]."""
    return min(1.0, max(0.0, fractional_response(ctx)))


def _fresh_margin(
    size: np.ndarray,
    view_pref: np.ndarray,
    popularity: np.ndarray,
    cache_frac: np.ndarray,
    request_count: np.ndarray,
    newcomer_others: np.ndarray,
    params: GameParams,
    include_self: bool,
) -> np.ndarray:
    """Utility difference U(request) - U(idle) on fresh-video cells.

    With ``include_self`` the newcomer count is treated as already containing
    the device's own prospective request (the convention of the relaxed
    derivation); otherwise the own request is added on the request branch.
    """
    gain = size * (
        view_pref * popularity * (1.0 - cache_frac) - params.beta * params.eps_ud
    )
    n = params.anchor - request_count
    own = 0.0 if include_self else 1.0
    hot = request_count + newcomer_others + own
    with np.errstate(divide="ignore"):
        change = np.log(n - newcomer_others) - np.log(hot)
    return gain - params.gamma * change


def follower_best_response(
    ctx: UdContext, genuine: int, include_self_in_estimate: bool = False
) -> int:
    """Optimal binary request for one (device, video) pair.

    Genuine requests always go out.  Already-profiled videos re-request iff
    prefetch value strictly beats caching cost; ties resolve to not
    requesting.  Fresh videos request iff the endpoint utility margin is
    strictly positive (equivalent to the argmax over the two actions of
    ``ud_utility``, ties again resolving to not requesting).
    """
    if genuine:
        return 1
    p = ctx.params
    if ctx.requested:
        value = ctx.view_pref * ctx.popularity * (1.0 - ctx.cache_frac)
        return int(value > p.beta * p.eps_ud)
    m = float(ctx.request_count)
    dn = float(ctx.newcomer_others)
    if p.anchor <= 2.0 * (m + dn + (0.0 if include_self_in_estimate else 1.0)):
        raise ValueError(
            f"anchor constraint violated: anchor={p.anchor}, m={m}, newcomers={dn}"
        )
    if include_self_in_estimate and m + dn <= 0:
        return 0
    margin = _fresh_margin(
        np.float64(ctx.size),
        np.float64(ctx.view_pref),
        np.float64(ctx.popularity),
        np.float64(ctx.cache_frac),
        np.float64(m),
        np.float64(dn),
        p,
        include_self_in_estimate,
    )
    return int(margin > 0.0)


def best_response_matrix(
    requested: np.ndarray,
    view_pref: np.ndarray,
    popularity: np.ndarray,
    sizes: np.ndarray,
    request_counts: np.ndarray,
    newcomer_others: np.ndarray,
    cache_fracs: np.ndarray,
    params: GameParams,
) -> np.ndarray:
    """Vectorised voluntary-request decisions (no genuine forcing applied).

    Shapes broadcast; ``requested`` selects the profiled-video rule per cell.
    Follows exactly the same tie rules as ``follower_best_response``.
    """
    r = np.asarray(requested, dtype=bool)
    gain = sizes * (
        view_pref * popularity * (1.0 - cache_fracs) - params.beta * params.eps_ud
    )
    m = np.asarray(request_counts, dtype=np.float64)
    dn = np.asarray(newcomer_others, dtype=np.float64)
    bad = (~r) & (params.anchor <= 2.0 * (m + dn + 1.0))
    if np.any(bad):
        video = int(np.argwhere(bad)[0][-1])
        raise ValueError(
            f"anchor constraint violated for video {video}: "
            f"anchor={params.anchor}, m+newcomers+1 too large"
        )
    n = params.anchor - m
    fresh = gain - params.gamma * (np.log(n - dn) - np.log(m + dn + 1.0))
    return np.where(r, gain > 0.0, fresh > 0.0)


def leader_best_response(
    request_sum: float, size: float, beta_ec: float, eps_ec: float
) -> float:
    """Optimal cache fraction for one video given its request sum.

    Zero below the cost threshold, full above the saturation threshold,
    linear in between; continuous in the request sum.
    """
    if size <= 0 or size > 1:
        raise ValueError(f"size must lie in (0, 1], got {size}")
    if beta_ec <= 0 or eps_ec <= 0:
        raise ValueError("beta_ec and eps_ec must be positive")
    if request_sum < 0:
        raise ValueError(f"request_sum must be >= 0, got {request_sum}")
    theta = beta_ec * eps_ec
    return float(min(1.0, max(0.0, (request_sum - theta) / (theta * size))))


def leader_best_response_vec(
    request_sums: np.ndarray, sizes: np.ndarray, params: GameParams
) -> np.ndarray:
    """Vectorised ``leader_best_response`` over all videos."""
    theta = params.beta_ec * params.eps_ec
    raw = (np.asarray(request_sums, dtype=np.float64) - theta) / (theta * sizes)
    return np.clip(raw, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Small-game instances and the brute-force verifier
# ---------------------------------------------------------------------------


@dataclass
class SmallGame:
    """A one-round instance small enough for exhaustive verification."""

    sizes: np.ndarray  # (I,) in (0, 1]
    requested: np.ndarray  # (U, I) bool, profile bits before the round
    genuine: np.ndarray  # (U, I) bool, requests that must go out
    view_pref: np.ndarray  # (U, I) float >= 0
    popularity: np.ndarray  # (I,) float >= 0
    params: GameParams

    @property
    def num_users(self) -> int:
        return self.requested.shape[0]

    @property
    def num_videos(self) -> int:
        return self.requested.shape[1]

    @property
    def request_counts(self) -> np.ndarray:
        return self.requested.sum(axis=0)

    def context(self, user: int, video: int, actions: np.ndarray) -> UdContext:
        """Build the device's valuation context given everyone's actions."""
        fresh = actions & ~self.requested
        dn_others = int(fresh[:, video].sum()) - int(fresh[user, video])
        return UdContext(
            view_pref=float(self.view_pref[user, video]),
            popularity=float(self.popularity[video]),
            size=float(self.sizes[video]),
            requested=int(self.requested[user, video]),
            request_count=int(self.request_counts[video]),
            newcomer_others=dn_others,
            cache_frac=0.0,  # caller overwrites
            params=self.params,
        )


def random_small_game(
    rng: np.random.Generator,
    num_users: int = 3,
    num_videos: int = 4,
    params: GameParams | None = None,
) -> SmallGame:
    """Draw a random admissible instance with a well-posed joint equilibrium.

    Two regimes are mixed.  "Live" instances carry full incentives; every
    video then gets at least one genuine request so that the joint
    leader/follower fixed point exists (a video nobody must watch but that
    devices would voluntarily prefetch at an empty cache has no pure
    equilibrium: caching it kills the demand that justified caching it).
    "Quiet" instances have negligible prefetch value and no privacy weight,
    which makes demand constant in the cache vector and lets the edge-cost
    weight roam wide enough to exercise all three leader branches.
    """
    if num_users < 1 or num_videos < 1:
        raise ValueError("instance needs at least one user and one video")
    sizes = rng.uniform(0.05, 1.0, size=num_videos)
    requested = rng.random((num_users, num_videos)) < 0.4
    genuine = rng.random((num_users, num_videos)) < 0.3
    quiet = rng.random() < 0.4
    if quiet:
        view_pref = np.zeros((num_users, num_videos))
        popularity = np.zeros(num_videos)
        gamma = 0.0
        beta_ec = rng.uniform(0.2, 2.0 * num_users)
    else:
        view_pref = rng.uniform(0.0, 1.2, size=(num_users, num_videos))
        popularity = rng.uniform(0.0, 3.0, size=num_videos)
        gamma = rng.uniform(0.01, 0.5)
        beta_ec = rng.uniform(0.05, 0.4)
        for video in range(num_videos):
            if not genuine[:, video].any():
                genuine[rng.integers(num_users), video] = True
    base = params if params is not None else GameParams()
    anchor = 2 * num_users + 1 + int(rng.integers(0, 4))
    game_params = replace(
        base, gamma=gamma, beta_ec=beta_ec, eps_ec=1.0, anchor=anchor
    )
    game_params.validate()
    return SmallGame(sizes, requested, genuine, view_pref, popularity, game_params)


def follower_fixed_point(
    game: SmallGame,
    cache_fracs: np.ndarray,
    init: str = "zeros",
    max_sweeps: int = 100,
) -> tuple[np.ndarray, int, bool]:
    """Synchronous best-response iteration of all devices.

    Returns (actions, sweeps, converged).  Genuine requests stay forced at 1.
    Starting from all-zeros (resp. all-ones) the iteration is monotone, so it
    reaches the least (resp. greatest) fixed point of the round game.
    """
    forced = game.genuine
    if init == "zeros":
        actions = forced.copy()
    elif init == "ones":
        actions = np.ones_like(forced)
    else:
        raise ValueError(f"unknown init {init!r}")
    m = game.request_counts.astype(np.float64)
    for sweep in range(1, max_sweeps + 1):
        fresh = actions & ~game.requested
        dn_others = fresh.sum(axis=0)[None, :] - fresh
        decisions = best_response_matrix(
            game.requested,
            game.view_pref,
            game.popularity,
            game.sizes,
            m[None, :],
            dn_others.astype(np.float64),
            np.asarray(cache_fracs)[None, :],
            game.params,
        )
        updated = forced | decisions
        if np.array_equal(updated, actions):
            return actions, sweep, True
        actions = updated
    return actions, max_sweeps, False


def solve_equilibrium(
    game: SmallGame,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Compute the joint strategy pair (cache fractions, request matrix).

    Videos decouple, and per video the consistent request sums can be
    enumerated exactly: a candidate sum is consistent when the follower fixed
    point under the cache fraction it induces reproduces it.  Among multiple
    consistent sums the leader-preferred one is kept.  Returns
    (cache_fracs, actions, solved); ``solved`` is False when some video
    admits no consistent pure strategy pair.
    """
    num_videos = game.num_videos
    cache = np.zeros(num_videos)
    chosen_sum = np.full(num_videos, -1, dtype=np.int64)
    best_value = np.full(num_videos, -np.inf)
    candidates: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for total in range(game.num_users + 1):
        e = leader_best_response_vec(
            np.full(num_videos, float(total)), game.sizes, game.params
        )
        actions, _, converged = follower_fixed_point(game, e, init="zeros")
        if not converged:
            continue
        sums = actions.sum(axis=0)
        consistent = sums == total
        if not consistent.any():
            continue
        value = ec_utility_terms(e, sums.astype(np.float64), game.sizes, game.params)
        better = consistent & (value > best_value)
        cache[better] = e[better]
        best_value[better] = value[better]
        chosen_sum[better] = total
        candidates[total] = (e, actions)
    solved = bool((chosen_sum >= 0).all())
    if not solved:
        return cache, game.genuine.copy(), False
    # Assemble the per-video actions from the runs that realised each sum.
    actions = np.zeros_like(game.genuine)
    for video in range(num_videos):
        _, acts = candidates[int(chosen_sum[video])]
        actions[:, video] = acts[:, video]
    return cache, actions, True


@dataclass
class EquilibriumReport:
    """Outcome of the brute-force equilibrium check."""

    leader_gap: float
    follower_violations: list[dict] = field(default_factory=list)
    passed: bool = False
    solved: bool = True
    notes: str = ""

    def to_rows(self) -> list[dict]:
        rows = [
            {
                "kind": "summary",
                "detail": f"passed={self.passed} solved={self.solved} "
                f"leader_gap={self.leader_gap:.3e} notes={self.notes}",
            }
        ]
        for violation in self.follower_violations:
            rows.append({"kind": "follower_violation", "detail": repr(violation)})
        return rows


def check_equilibrium(
    game: SmallGame,
    cache_fracs: np.ndarray,
    actions: np.ndarray,
    tol: float = UTILITY_TOL,
    grid_step: float = LEADER_GRID_STEP,
) -> EquilibriumReport:
    """Verify the no-unilateral-deviation inequalities by brute force.

    Leader: per video, a dense grid over the cache fraction must not beat the
    closed-form choice by more than ``tol``.  Followers: flipping any free
    request bit must not raise that device's utility by more than ``tol``.
    """
    sums = actions.sum(axis=0).astype(np.float64)
    closed_terms = ec_utility_terms(cache_fracs, sums, game.sizes, game.params)
    grid = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    leader_gap = 0.0
    for video in range(game.num_videos):
        grid_terms = ec_utility_terms(
            grid,
            np.full_like(grid, sums[video]),
            np.full_like(grid, game.sizes[video]),
            game.params,
        )
        gap = abs(float(grid_terms.max()) - float(closed_terms[video]))
        leader_gap = max(leader_gap, gap)

    violations: list[dict] = []
    for user in range(game.num_users):
        for video in range(game.num_videos):
            if game.genuine[user, video]:
                continue
            ctx = game.context(user, video, actions)
            ctx.cache_frac = float(cache_fracs[video])
            held = int(actions[user, video])
            current = ud_utility(ctx, held)
            flipped = ud_utility(ctx, 1 - held)
            if flipped > current + tol:
                violations.append(
                    {
                        "user": user,
                        "video": video,
                        "action": held,
                        "utility": current,
                        "flipped_utility": flipped,
                        "gain": flipped - current,
                    }
                )
    passed = leader_gap <= tol and not violations
    return EquilibriumReport(leader_gap, violations, passed)


def verify_equilibrium_bruteforce(
    game: SmallGame, tol: float = UTILITY_TOL, grid_step: float = LEADER_GRID_STEP
) -> EquilibriumReport:
    """Solve the instance, then brute-force check both equilibrium stages."""
    cache, actions, solved = solve_equilibrium(game)
    if not solved:
        return EquilibriumReport(
            leader_gap=math.inf,
            passed=False,
            solved=False,
            notes="no consistent pure strategy pair found",
        )
    report = check_equilibrium(game, cache, actions, tol=tol, grid_step=grid_step)
    return report


# ---------------------------------------------------------------------------
# Standard-function property suite for the fractional response
# ---------------------------------------------------------------------------


@dataclass
class StandardFunctionReport:
    """Property-suite outcome for the fractional response function."""

    samples: int
    positivity_violations: list[dict] = field(default_factory=list)
    monotonicity_violations: list[dict] = field(default_factory=list)
    scalability_violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (
            self.positivity_violations
            or self.monotonicity_violations
            or self.scalability_violations
        )

    def to_rows(self) -> list[dict]:
        rows = [{"kind": "summary", "detail": f"samples={self.samples} passed={self.passed}"}]
        for name in ("positivity", "monotonicity", "scalability"):
            for violation in getattr(self, f"{name}_violations"):
                rows.append({"kind": name, "detail": repr(violation)})
        return rows


def _sample_context(
    rng: np.random.Generator,
    positive_denominator: bool,
    scale_margin: float = 0.0,
) -> tuple[UdContext, float]:
    """Draw an admissible context plus the headroom for scaling newcomers.

    ``scale_margin`` widens the anchor so the newcomer count keeps
    ``anchor > 2 * (m + (k + margin) * dn)`` for every sampled scale ``k``;
    the scalability inequality is provable only with one extra newcomer count
    of headroom (margin 1) in the cost-dominant regime.
    """
    size = rng.uniform(0.05, 1.0)
    cache_frac = rng.uniform(0.0, 1.0)
    beta = rng.uniform(0.05, 1.0)
    eps_ud = rng.uniform(0.5, 2.0)
    if positive_denominator:
        benefit = rng.uniform(0.0, 0.95) * beta * eps_ud
        view_pref = benefit / max(1.0 - cache_frac, 1e-9)
        popularity = 1.0
    else:
        view_pref = rng.uniform(0.0, 1.5)
        popularity = rng.uniform(0.0, 3.0)
    m = float(rng.integers(0, 12))
    dn = float(rng.uniform(0.0, 6.0))
    scale_max = rng.uniform(1.0, 3.0)
    anchor = int(
        math.ceil(2.0 * (m + (scale_max + scale_margin) * dn + 1.0))
    ) + int(rng.integers(1, 6))
    params = GameParams(
        gamma=rng.uniform(0.01, 1.0),
        beta=beta,
        eps_ud=eps_ud,
        anchor=anchor,
    )
    ctx = UdContext(
        view_pref=view_pref,
        popularity=popularity,
        size=size,
        requested=0,
        request_count=m,
        newcomer_others=dn,
        cache_frac=cache_frac,
        params=params,
    )
    return ctx, scale_max


def check_standard_function(
    num_samples: int = 1000, rng_seed: int = 0
) -> StandardFunctionReport:
    """Sample admissible contexts and test the three response-function laws.

    Positivity holds for the clamped response by construction and is asserted
    as such.  Monotonicity in the anticipated newcomer count holds for any
    non-singular margin and is sampled over both margin signs.  The
    scalability inequality only holds where its derivation applies: the
    caching-cost margin must dominate the prefetch benefit (positive
    denominator) and the anchor must keep one newcomer count of headroom
    beyond the scaled value; near the admissibility boundary, or where the
    benefit dominates and the raw response turns negative, the inequality
    genuinely fails, so those regions stay out of the sample.
    """
    rng = np.random.default_rng(rng_seed)
    report = StandardFunctionReport(samples=num_samples)
    for index in range(num_samples):
        ctx, _ = _sample_context(rng, positive_denominator=False)
        try:
            value = clamped_response(ctx)
        except ResponseSingularity:
            continue
        if value < 0.0:
            report.positivity_violations.append({"sample": index, "value": value})
        step = rng.uniform(0.1, 1.0)
        bumped = replace_newcomers(ctx, ctx.newcomer_others + step)
        if 2.0 * (ctx.request_count + bumped.newcomer_others) < ctx.params.anchor:
            if fractional_response(bumped) < fractional_response(ctx) - 1e-12:
                report.monotonicity_violations.append(
                    {
                        "sample": index,
                        "newcomers": ctx.newcomer_others,
                        "bumped": bumped.newcomer_others,
                    }
                )
        ctx2, scale_max = _sample_context(
            rng, positive_denominator=True, scale_margin=1.0
        )
        k = rng.uniform(1.0, scale_max)
        scaled = replace_newcomers(ctx2, k * ctx2.newcomer_others)
        lhs = k * fractional_response(ctx2)
        rhs = fractional_response(scaled)
        if lhs < rhs - 1e-9:
            report.scalability_violations.append(
                {"sample": index, "k": k, "lhs": lhs, "rhs": rhs}
            )
    return report


def replace_newcomers(ctx: UdContext, newcomers: float) -> UdContext:
    """Copy a context with a different anticipated newcomer count."""
    return UdContext(
        view_pref=ctx.view_pref,
        popularity=ctx.popularity,
        size=ctx.size,
        requested=ctx.requested,
        request_count=ctx.request_count,
        newcomer_others=newcomers,
        cache_frac=ctx.cache_frac,
        params=ctx.params,
    )


def write_report_csv(
    report: EquilibriumReport | StandardFunctionReport, path: str | Path
) -> Path:
    """Dump a verification report as ``kind,detail`` CSV rows."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=["kind", "detail"])
        writer.writeheader()
        writer.writerows(report.to_rows())
    return path
