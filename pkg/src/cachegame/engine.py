"""Run orchestration: leader-then-followers per slot, sweeps, CSV export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import (
    BoundedCache,
    derive_equivalent_capacity,
    lfu_step,
    lru_step,
    nr_request,
    random_request,
)
from .catalog import GenuineTrace, TraceGenConfig, VideoCatalog
from .metrics import (
    average_fresh_redundant,
    average_redundant,
    compute_bor,
    compute_chr,
    compute_pdr,
)
from .online import crvr_step, evc_step, update_newcomer_estimate
from .params import ConfigError, GameParams
from .results import RunResult
from .state import (
    SystemState,
    apply_round,
    first_time_request_count,
    init_state,
    view_preference_row,
    write_state_snapshot_csv,
)
from .utility import ec_utility_terms

REQUESTING_STRATEGIES = ("crvr", "nr", "random")
CACHING_POLICIES = ("evc", "lru", "lfu")


@dataclass
class ExperimentConfig:
    """One experiment arm plus the shared trace source."""

    trace: TraceGenConfig = field(default_factory=TraceGenConfig)
    catalog_csv: str | None = None  # load instead of generating when set
    trace_csv: str | None = None
    warmup_fraction: float = 0.4
    params: GameParams = field(default_factory=GameParams)
    requesting: str = "crvr"
    caching: str = "evc"
    seed: int = 0
    random_budget: float | None = None
    capacity: float | None = None
    outdir: str = "out"

    def validate(self) -> None:
        if self.requesting not in REQUESTING_STRATEGIES:
            raise ConfigError(f"unknown requesting strategy {self.requesting!r}")
        if self.caching not in CACHING_POLICIES:
            raise ConfigError(f"unknown caching policy {self.caching!r}")
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must lie in (0, 1)")
        if (self.catalog_csv is None) != (self.trace_csv is None):
            raise ConfigError("catalog_csv and trace_csv must be set together")
        self.params.validate()


def _utility_record(
    state: SystemState,
    catalog: VideoCatalog,
    actions: np.ndarray,
    genuine: np.ndarray,
    prefs: dict[int, np.ndarray],
    params: GameParams,
) -> tuple[float, float, float, float]:
    """Realised per-user utility terms, averaged over all devices.

    Disclosure uses the actual first-time counts of the round; videos a
    device genuinely watches this slot stay out of its sum.
    """
    anchor = float(params.anchor)
    m = state.request_counts.astype(np.float64)
    dn = first_time_request_count(state, actions).astype(np.float64)
    n = anchor - m
    with np.errstate(divide="ignore", invalid="ignore"):
        idle_change = np.where(dn > 0, np.log(n / (n - dn)), 0.0)
        fresh_change = np.where(m + dn > 0, np.log(n / (m + dn)), 0.0)
        held_change = np.where((m > 0) & (dn > 0), np.log(m / (m + dn)), 0.0)
    requested = state.requested.astype(np.float64)
    fresh_req = (actions & ~state.requested).astype(np.float64)
    # disclosure of every cell at its realised action, then cut the watched cells
    base = requested @ held_change + (1.0 - requested) @ idle_change
    base += fresh_req @ (fresh_change - idle_change)
    gen = genuine.astype(np.float64)
    cut = (
        (gen * requested) @ held_change
        + (gen * fresh_req) @ (fresh_change - idle_change)
        + (gen * (1.0 - requested)) @ idle_change
    )
    privacy = params.gamma * (base - cut)

    redundant = actions & ~genuine
    unit_cost = params.beta * params.eps_ud * catalog.sizes
    cost = redundant.astype(np.float64) @ unit_cost
    benefit = np.zeros(state.num_users)
    value = state.popularity * catalog.sizes * (1.0 - state.cache_fracs)
    for user, pref_row in prefs.items():
        cells = redundant[user]
        if cells.any():
            benefit[user] = float((pref_row[cells] * value[cells]).sum())
    total = benefit - privacy - cost
    users = float(state.num_users)
    return (
        float(benefit.sum()) / users,
        float(privacy.sum()) / users,
        float(cost.sum()) / users,
        float(total.sum()) / users,
    )


def run_simulation(
    catalog: VideoCatalog,
    warmup: GenuineTrace,
    test: GenuineTrace,
    config: ExperimentConfig,
    snapshot_path: str | Path | None = None,
) -> RunResult:
    """Simulate the test block: per slot the edge commits its caching first,
    then every device answers its demand; the round is folded into the state.
    """
    config.validate()
    params = config.params.resolve_anchor(test.num_users)
    state = init_state(catalog, test.num_users, warmup, params)
    rng = np.random.default_rng([config.seed, 2])
    if config.requesting == "random" and config.random_budget is None:
        raise ConfigError("random requesting needs a redundancy budget")
    cache: BoundedCache | None = None
    if config.caching in ("lru", "lfu"):
        if config.capacity is None:
            raise ConfigError(f"{config.caching} caching needs a capacity")
        cache = BoundedCache(capacity=config.capacity, sizes=catalog.sizes)
    cache_step = {"lru": lru_step, "lfu": lfu_step}.get(config.caching)

    result = RunResult(
        requesting=config.requesting,
        caching=config.caching,
        seed=config.seed,
        params=params,
        num_users=test.num_users,
        num_videos=catalog.num_videos,
        trace_digest=test.digest(),
    )
    snapshots: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
    pending_edge_stream: np.ndarray = np.empty(0, dtype=np.int64)

    for slot in test.slots:
        # Stage one: the edge announces its caching before any device acts.
        if config.caching == "evc":
            cache_fracs = evc_step(state, catalog, params)
        else:
            assert cache is not None and cache_step is not None
            _, mask = cache_step(cache, pending_edge_stream)
            cache_fracs = mask.astype(np.float64)
            state.cache_fracs = cache_fracs
        result.phase_log.append((slot, "leader"))

        # Stage two: devices respond, independently given the announcement.
        if config.requesting == "crvr":
            update_newcomer_estimate(state, params)
        actions = np.zeros((state.num_users, state.num_videos), dtype=bool)
        genuine = np.zeros_like(actions)
        replayed = np.zeros(state.num_users, dtype=bool)
        prefs: dict[int, np.ndarray] = {}
        slot_requests = test.slot_requests(slot)
        for user in sorted(slot_requests):
            videos = slot_requests[user]
            genuine[user, videos] = True
            if config.requesting == "nr":
                row = np.zeros(state.num_videos, dtype=bool)
                row[videos] = True
            elif config.requesting == "random":
                row = random_request(
                    videos, config.random_budget, catalog, state.requested[user], rng
                )
            else:
                row = crvr_step(state, catalog, user, cache_fracs, videos, params)
                replayed[user] = bool(state.requested[user][videos].all())
            actions[user] = row
            watched = state.watched[user].copy()
            watched[videos] = True
            prefs[user] = view_preference_row(
                watched, catalog.category_ids, catalog.num_categories, state.slot
            )
        result.phase_log.append((slot, "followers"))

        # Bookkeeping before the round is folded in.
        newcomers = first_time_request_count(state, actions)
        bad = np.flatnonzero(2 * (state.request_counts + newcomers) >= params.anchor)
        if bad.size:
            raise ConfigError(
                f"anchor {params.anchor} violated at slot {slot} for video {int(bad[0])}"
            )
        edge_directed = actions & ~state.requested
        per_video = edge_directed.sum(axis=0).astype(np.float64)
        result.ec_request_bytes.append(float((per_video * catalog.sizes).sum()))
        result.ec_served_bytes.append(
            float((per_video * cache_fracs * catalog.sizes).sum())
        )
        stream_cells = np.argwhere(edge_directed)
        pending_edge_stream = stream_cells[:, 1].astype(np.int64)

        first_watch = genuine & ~state.watched
        result.watch_events.append(int(first_watch.sum()))
        result.watch_hits.append(int((first_watch & state.requested).sum()))
        result.redundant_counts.append(int((actions & ~genuine).sum()))
        result.fresh_redundant_counts.append(
            int((actions & ~genuine & ~state.requested).sum())
        )
        result.active_users.append(len(slot_requests))
        result.cache_bytes.append(float((cache_fracs * catalog.sizes).sum()))

        benefit, privacy, cost, total = _utility_record(
            state, catalog, actions, genuine, prefs, params
        )
        result.benefit_mean.append(benefit)
        result.privacy_mean.append(privacy)
        result.cost_mean.append(cost)
        result.total_mean.append(total)
        result.ec_utilities.append(
            float(
                ec_utility_terms(
                    cache_fracs, actions.sum(axis=0).astype(np.float64),
                    catalog.sizes, params,
                ).sum()
            )
        )

        cells = np.argwhere(actions)
        rows = np.empty((cells.shape[0], 4), dtype=np.int64)
        rows[:, 0] = cells[:, 0]
        rows[:, 1] = cells[:, 1]
        rows[:, 2] = genuine[cells[:, 0], cells[:, 1]]
        rows[:, 3] = replayed[cells[:, 0]]
        result.slots.append(slot)
        result.action_rows.append(rows)
        if snapshot_path is not None:
            snapshots.append(
                (slot, state.request_counts.copy(), state.popularity.copy(),
                 cache_fracs.copy())
            )

        apply_round(state, actions, genuine, params)

    result.final_requested = state.requested.copy()
    result.final_watched = state.watched.copy()
    if snapshot_path is not None:
        write_state_snapshot_csv(snapshot_path, snapshots)
    return result


@dataclass
class SweepRow:
    axis: str
    value: float
    requesting: str
    caching: str
    pdr: float
    chr: float | None
    bor: float | None
    avg_redundant: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    runs: list[RunResult]


SWEEP_AXES = ("gamma", "beta", "beta_ec", "budget")


def sweep(
    catalog: VideoCatalog,
    warmup: GenuineTrace,
    test: GenuineTrace,
    base_config: ExperimentConfig,
    axis: str,
    values: list[float],
    arms: list[tuple[str, str]],
) -> SweepResult:
    """One run per (axis value, arm), all arms sharing the same trace.

    Per value, a reference (crvr, evc) run supplies the matched redundancy
    budget for random requesting and the equivalent capacity for the bounded
    caches; it doubles as the arm result when (crvr, evc) is swept.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if any(value <= 0 for value in values):
        raise ConfigError("sweep values must be positive")
    digest = test.digest()
    rows: list[SweepRow] = []
    runs: list[RunResult] = []
    for value in values:
        params = base_config.params
        if axis in ("gamma", "beta", "beta_ec"):
            params = replace(params, **{axis: value})
        budget = base_config.random_budget if axis != "budget" else value
        capacity = base_config.capacity
        needs_reference = budget is None and any(r == "random" for r, _ in arms)
        needs_reference |= capacity is None and any(
            c in ("lru", "lfu") for _, c in arms
        )
        reference: RunResult | None = None
        if needs_reference or ("crvr", "evc") in arms:
            reference = run_simulation(
                catalog,
                warmup,
                test,
                replace(
                    base_config,
                    params=params,
                    requesting="crvr",
                    caching="evc",
                    capacity=None,
                    random_budget=None,
                ),
            )
            if budget is None:
                # match on decoy contents actually downloaded, not on repeat
                # requests of videos a device already holds
                budget = average_fresh_redundant(reference)
            if capacity is None:
                capacity = derive_equivalent_capacity(reference)
        for requesting, caching in arms:
            if (requesting, caching) == ("crvr", "evc") and reference is not None:
                run = reference
            else:
                run = run_simulation(
                    catalog,
                    warmup,
                    test,
                    replace(
                        base_config,
                        params=params,
                        requesting=requesting,
                        caching=caching,
                        random_budget=budget,
                        capacity=capacity,
                    ),
                )
            if run.trace_digest != digest:
                raise ConfigError("sweep arms consumed different traces")
            run.axis = axis
            run.axis_value = value
            run.label = f"{axis}_{value:g}_{requesting}_{caching}"
            rows.append(
                SweepRow(
                    axis=axis,
                    value=value,
                    requesting=requesting,
                    caching=caching,
                    pdr=compute_pdr(run).mean,
                    chr=compute_chr(run),
                    bor=compute_bor(run),
                    avg_redundant=average_redundant(run),
                )
            )
            runs.append(run)
    return SweepResult(rows=rows, runs=runs)


def export_results(runs: list[RunResult], outdir: str | Path) -> list[Path]:
    """Write per-run metrics/action/utility CSVs plus one summary CSV."""
    from .metrics import write_metrics_csv, write_utility_csv

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for index, run in enumerate(runs):
        label = run.label or f"run{index:02d}_{run.requesting}_{run.caching}"
        written.append(write_metrics_csv(run, outdir / f"{label}_metrics.csv"))
        written.append(run.write_actions_csv(outdir / f"{label}_actions.csv"))
        written.append(write_utility_csv(run, outdir / f"{label}_utility.csv"))
    summary = outdir / "summary.csv"
    with summary.open("w", newline="\n", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["label", "requesting", "caching", "axis", "value",
             "pdr_mean", "chr", "bor", "avg_redundant", "slots", "seed"]
        )
        for index, run in enumerate(runs):
            label = run.label or f"run{index:02d}_{run.requesting}_{run.caching}"
            hit_ratio = compute_chr(run)
            offload = compute_bor(run)
            writer.writerow(
                [
                    label,
                    run.requesting,
                    run.caching,
                    run.axis,
                    "" if np.isnan(run.axis_value) else repr(float(run.axis_value)),
                    repr(float(compute_pdr(run).mean)),
                    "NA" if hit_ratio is None else repr(float(hit_ratio)),
                    "NA" if offload is None else repr(float(offload)),
                    repr(float(average_redundant(run))),
                    run.num_slots,
                    run.seed,
                ]
            )
    written.append(summary)
    return written
