"""Command-line front end: gen-trace, run, sweep, verify.

Configuration comes from an optional ``key = value`` file; command-line flags
win over file values.  All outputs are CSV files in the chosen directory.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .catalog import (
    TraceGenConfig,
    generate_catalog,
    generate_trace,
    load_trace,
    split_trace,
    write_catalog_csv,
    write_trace_csv,
)
from .engine import ExperimentConfig, export_results, run_simulation, sweep
from .equilibrium import (
    GameParams,
    check_standard_function,
    follower_best_response,
    leader_best_response,
    random_small_game,
    verify_equilibrium_bruteforce,
    write_report_csv,
)
from .params import ConfigError
from .utility import ec_utility_terms, ud_utility


def _parse_value(raw: str):
    text = raw.strip()
    if text.lower() in ("none", "null"):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def read_config_file(path: str | Path) -> dict:
    """Parse a flat ``key = value`` file; '#' starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        values[key.strip()] = _parse_value(raw)
    return values


_TRACE_KEYS = {f.name for f in fields(TraceGenConfig)}
_PARAM_KEYS = {f.name for f in fields(GameParams)}
_ENGINE_KEYS = {
    "requesting", "caching", "seed", "warmup_fraction", "random_budget",
    "capacity", "catalog_csv", "trace_csv", "outdir",
}


def build_config(mapping: dict) -> ExperimentConfig:
    """Assemble an experiment config from a flat key/value mapping."""
    unknown = set(mapping) - _TRACE_KEYS - _PARAM_KEYS - _ENGINE_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    trace = TraceGenConfig(**{k: v for k, v in mapping.items() if k in _TRACE_KEYS})
    params = GameParams(**{k: v for k, v in mapping.items() if k in _PARAM_KEYS})
    engine = {k: v for k, v in mapping.items() if k in _ENGINE_KEYS}
    config = ExperimentConfig(trace=trace, params=params, **engine)
    if "seed" in mapping and "rng_seed" not in mapping:
        config = replace(config, trace=replace(trace, rng_seed=int(mapping["seed"])))
    return config


def _gather(args: argparse.Namespace) -> ExperimentConfig:
    mapping: dict = {}
    if args.config:
        mapping.update(read_config_file(args.config))
    for key in list(_TRACE_KEYS | _PARAM_KEYS | _ENGINE_KEYS):
        flag = getattr(args, key, None)
        if flag is not None:
            mapping[key] = flag
    if getattr(args, "out", None):
        mapping["outdir"] = args.out
    return build_config(mapping)


def _materialise_trace(config: ExperimentConfig):
    if config.catalog_csv:
        catalog, trace = load_trace(config.catalog_csv, config.trace_csv)
    else:
        catalog = generate_catalog(config.trace)
        trace = generate_trace(catalog, config.trace)
    warmup, test = split_trace(trace, config.warmup_fraction)
    return catalog, warmup, test


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--seed", type=int, help="run seed (also seeds the trace)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--catalog-csv", dest="catalog_csv", help="catalog CSV to load")
    parser.add_argument("--trace-csv", dest="trace_csv", help="trace CSV to load")
    parser.add_argument("--warmup-fraction", dest="warmup_fraction", type=float)
    parser.add_argument("--gamma", type=float, help="privacy weight")
    parser.add_argument("--beta", type=float, help="device caching-cost weight")
    parser.add_argument("--beta-ec", dest="beta_ec", type=float,
                        help="edge caching-cost weight")
    parser.add_argument("--num-users", dest="num_users", type=int)
    parser.add_argument("--num-videos", dest="num_videos", type=int)
    parser.add_argument("--num-slots", dest="num_slots", type=int)


def cmd_gen_trace(args: argparse.Namespace) -> int:
    config = _gather(args)
    catalog = generate_catalog(config.trace)
    trace = generate_trace(catalog, config.trace)
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    catalog_path = write_catalog_csv(catalog, outdir / "catalog.csv")
    trace_path = write_trace_csv(trace, outdir / "trace.csv")
    print(f"wrote {catalog_path} ({catalog.num_videos} videos)")
    print(f"wrote {trace_path} ({trace.num_requests} requests, {trace.num_slots} slots)")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _gather(args)
    if args.requesting:
        config = replace(config, requesting=args.requesting)
    if args.caching:
        config = replace(config, caching=args.caching)
    if args.budget is not None:
        config = replace(config, random_budget=args.budget)
    if args.capacity is not None:
        config = replace(config, capacity=args.capacity)
    catalog, warmup, test = _materialise_trace(config)
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    snapshot = outdir / "snapshots.csv" if args.snapshot else None
    result = run_simulation(catalog, warmup, test, config, snapshot_path=snapshot)
    result.label = f"run_{config.requesting}_{config.caching}"
    files = export_results([result], outdir)
    for path in files:
        print(f"wrote {path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _gather(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    arms: list[tuple[str, str]] = []
    for token in args.arms.split(","):
        token = token.strip()
        if not token:
            continue
        requesting, _, caching = token.partition(":")
        arms.append((requesting, caching or "evc"))
    catalog, warmup, test = _materialise_trace(config)
    outcome = sweep(catalog, warmup, test, config, args.axis, values, arms)
    outdir = Path(config.outdir)
    files = export_results(outcome.runs, outdir)
    for path in files:
        print(f"wrote {path}")
    for row in outcome.rows:
        chr_text = "NA" if row.chr is None else f"{row.chr:.4f}"
        bor_text = "NA" if row.bor is None else f"{row.bor:.4f}"
        print(
            f"{row.axis}={row.value:g} {row.requesting}+{row.caching}: "
            f"PDR={row.pdr:.4f} CHR={chr_text} BOR={bor_text} "
            f"redundant={row.avg_redundant:.2f}"
        )
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    failures = 0

    solved = 0
    worst_gap = 0.0
    bad_instances = []
    for index in range(args.instances):
        game = random_small_game(rng, num_users=1 + index % 4, num_videos=1 + index % 5)
        report = verify_equilibrium_bruteforce(game)
        if report.passed:
            solved += 1
            worst_gap = max(worst_gap, report.leader_gap)
        else:
            bad_instances.append((index, report))
    ok = solved == args.instances
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} equilibrium brute force: "
          f"{solved}/{args.instances} instances, worst leader gap {worst_gap:.2e}")

    sf_report = check_standard_function(num_samples=args.samples, rng_seed=args.seed)
    failures += not sf_report.passed
    print(f"{'PASS' if sf_report.passed else 'FAIL'} response-function properties: "
          f"{sf_report.samples} samples")

    mismatches = 0
    from .equilibrium import _sample_context

    for _ in range(args.samples):
        ctx, _ = _sample_context(rng, positive_denominator=bool(rng.random() < 0.5))
        picked = follower_best_response(ctx, genuine=0)
        best = max((0, 1), key=lambda a: (ud_utility(ctx, a), -a))
        mismatches += int(picked != best)
    ok = mismatches == 0
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} follower argmax: "
          f"{mismatches}/{args.samples} mismatches")

    grid = np.arange(0.0, 1.0001, 1e-4)
    worst = 0.0
    for _ in range(200):
        size = rng.uniform(0.05, 1.0)
        beta_ec = rng.uniform(0.01, 2.0)
        eps_ec = rng.uniform(0.5, 2.0)
        total = rng.uniform(0.0, 6.0)
        best_e = leader_best_response(total, size, beta_ec, eps_ec)
        params = GameParams(beta_ec=beta_ec, eps_ec=eps_ec)
        values = ec_utility_terms(grid, np.full_like(grid, total),
                                  np.full_like(grid, size), params)
        worst = max(worst, abs(float(grid[int(values.argmax())]) - best_e))
    ok = worst <= 1e-3
    failures += not ok
    print(f"{'PASS' if ok else 'FAIL'} leader closed form: "
          f"max grid deviation {worst:.2e}")

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        write_report_csv(sf_report, outdir / "response_function_report.csv")
        for index, report in bad_instances:
            write_report_csv(report, outdir / f"equilibrium_failure_{index:03d}.csv")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachegame",
        description="Privacy-aware redundant requesting and edge caching simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-trace", help="generate a synthetic catalog and trace")
    _add_shared_flags(gen)
    gen.set_defaults(func=cmd_gen_trace)

    run = sub.add_parser("run", help="simulate one experiment arm")
    _add_shared_flags(run)
    run.add_argument("--requesting", choices=("crvr", "nr", "random"))
    run.add_argument("--caching", choices=("evc", "lru", "lfu"))
    run.add_argument("--budget", type=float, help="redundancy budget for random")
    run.add_argument("--capacity", type=float, help="capacity for lru/lfu")
    run.add_argument("--snapshot", action="store_true",
                     help="also dump per-slot state snapshots")
    run.set_defaults(func=cmd_run)

    sweep_cmd = sub.add_parser("sweep", help="run arms across a parameter axis")
    _add_shared_flags(sweep_cmd)
    sweep_cmd.add_argument("--axis", required=True,
                           choices=("gamma", "beta", "beta_ec", "budget"))
    sweep_cmd.add_argument("--values", required=True,
                           help="comma-separated axis values")
    sweep_cmd.add_argument("--arms", default="crvr:evc,nr:evc,random:evc",
                           help="comma-separated requesting:caching pairs")
    sweep_cmd.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="equilibrium and property suites")
    verify.add_argument("--instances", type=int, default=50)
    verify.add_argument("--samples", type=int, default=1000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", help="directory for violation reports")
    verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
