"""Command-line interface.

Subcommands: estimate, sweep, thresholds, regions, savings, forge,
analyze, calibrate. Configuration comes from --config (or the
CERTFLIGHT_CONFIG environment variable), and individual flags override
config values. --seed affects noise sampling only.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys

from . import cert_forge, chain_model, sweep_runner, tls_log_analytics as tla
from .chain_model import ChainSpec, SizeOptimizer, chain_size_kb, resolve_scheme
from .config import Config, resolve_config
from .errors import CalibrationError, ConfigError, LogFormatError, PaddingError
from .sweep_runner import compute_regions, estimate_savings, regions_csv
from .transport_flight import ANALYTIC, EMPIRICAL, find_thresholds
from .ttfb_engine import NetworkPath, calibrate_stack_profile, estimate_ttfb, resolve_stack

_OPTIMIZER_ALIASES = {
    "mtc1": SizeOptimizer(chain_model.MTC_ONE_INTERMEDIATE),
    "mtc2": SizeOptimizer(chain_model.MTC_TWO_INTERMEDIATES),
    "cdn25": SizeOptimizer(chain_model.CDN_MODERATE, factor=0.75),
    "cdn40": SizeOptimizer(chain_model.CDN_AGGRESSIVE, factor=0.60),
    "identity": SizeOptimizer(chain_model.IDENTITY),
}


def _parse_optimizers(spec: str) -> tuple[SizeOptimizer, ...]:
    out = []
    for name in spec.split(","):
        name = name.strip()
        if not name:
            continue
        if name not in _OPTIMIZER_ALIASES:
            raise ConfigError(
                f"unknown optimizer {name!r}; known: {', '.join(sorted(_OPTIMIZER_ALIASES))}"
            )
        out.append(_OPTIMIZER_ALIASES[name])
    return tuple(out)


def _parse_floats(spec: str) -> tuple[float, ...]:
    return tuple(float(p) for p in spec.split(",") if p.strip())


def _flight_for(args, cfg: Config):
    flight = cfg.flight
    if getattr(args, "thresholds", None):
        flight = dataclasses.replace(
            flight, empirical_thresholds_kb=_parse_floats(args.thresholds), mode=EMPIRICAL
        )
    if getattr(args, "mode", None):
        flight = dataclasses.replace(flight, mode=args.mode)
    return flight


def _chain_kb_for(args, cfg: Config) -> float:
    if args.size_kb is not None:
        return args.size_kb
    scheme = resolve_scheme(args.scheme, cfg.schemes)
    return chain_size_kb(
        ChainSpec(scheme, intermediates=args.intermediates, mtc=args.mtc)
    )


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


# -------------------------------------------------------------- commands


def cmd_estimate(args, cfg: Config) -> int:
    stack = resolve_stack(args.stack, cfg.stacks)
    path = NetworkPath(rtt_ms=args.rtt, flight=_flight_for(args, cfg))
    size_kb = _chain_kb_for(args, cfg)
    est = estimate_ttfb(stack, path, size_kb, resumed=args.resumed)
    payload = {
        "stack": stack.name,
        "rtt_ms": args.rtt,
        "chain_size_kb": size_kb,
        "resumed": args.resumed,
        "extra_rtts": est.extra_rtts,
        "t_tcp_ms": est.t_tcp_ms,
        "t_tls_ms": est.t_tls_ms,
        "t_request_response_ms": est.t_request_response_ms,
        "total_ms": est.total_ms,
    }
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(f"stack={stack.name} chain_size_kb={size_kb} rtt_ms={args.rtt} "
              f"resumed={str(args.resumed).lower()}")
        if est.breakdown_allocated():
            print(f"  t_tcp_ms={est.t_tcp_ms} t_tls_ms={est.t_tls_ms} "
                  f"t_request_response_ms={est.t_request_response_ms}")
        else:
            print("  breakdown unallocatable (base_flights < 2)")
        print(f"  extra_rtts={est.extra_rtts} total_ms={est.total_ms}")
    return 0


def cmd_sweep(args, cfg: Config) -> int:
    plan = cfg.sweep
    updates: dict = {"trials": args.trials}
    if args.stacks:
        updates["stacks"] = tuple(s.strip() for s in args.stacks.split(",") if s.strip())
    if args.rtts:
        updates["rtts_ms"] = _parse_floats(args.rtts)
    if args.sizes:
        parts = args.sizes.split(":")
        if len(parts) != 3:
            raise ConfigError("--sizes wants start:end:step")
        updates.update(
            size_start_kb=float(parts[0]), size_end_kb=float(parts[1]),
            size_step_kb=float(parts[2]),
        )
    if args.optimizers:
        updates["optimizers"] = _parse_optimizers(args.optimizers)
    if args.seed is not None:
        updates["seed"] = args.seed
    plan = dataclasses.replace(plan, **updates)
    rows = sweep_runner.run_sweep(plan, cfg.stacks, _flight_for(args, cfg), cfg.noise)
    text = sweep_runner.emit_json(rows) if args.format == "json" else sweep_runner.emit_csv(rows)
    _emit(text, args.out)
    if args.gnuplot:
        with open(args.gnuplot, "w", encoding="utf-8") as f:
            f.write(sweep_runner.emit_gnuplot(rows))
    if args.out:
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_thresholds(args, cfg: Config) -> int:
    flight = _flight_for(args, cfg)
    max_kb = args.max_kb if args.max_kb is not None else cfg.sweep.size_end_kb
    step_kb = args.step_kb if args.step_kb is not None else cfg.sweep.size_step_kb
    found = find_thresholds(flight, max_kb, step_kb)
    note = None
    if flight.mode == ANALYTIC and list(found) != list(flight.empirical_thresholds_kb):
        note = (
            f"analytic thresholds {found} differ from the configured empirical "
            f"thresholds {list(flight.empirical_thresholds_kb)}"
        )
    payload = {
        "mode": flight.mode,
        "max_kb": max_kb,
        "step_kb": step_kb,
        "thresholds_kb": found,
        "empirical_thresholds_kb": list(flight.empirical_thresholds_kb),
        "note": note,
    }
    if args.format == "csv":
        lines = ["index,threshold_kb"]
        lines += [f"{i},{t!r}" for i, t in enumerate(found)]
        if note:
            lines.append(f"# {note}")
        print("\n".join(lines))
    else:
        print(json.dumps(payload, indent=2))
    return 0


def cmd_regions(args, cfg: Config) -> int:
    thresholds = (
        list(_parse_floats(args.thresholds))
        if args.thresholds
        else list(cfg.flight.empirical_thresholds_kb)
    )
    optimizers = (
        _parse_optimizers(args.optimizers)
        if args.optimizers
        else chain_model.DEFAULT_OPTIMIZERS
    )
    regions = compute_regions(thresholds, list(optimizers))
    if args.format == "json":
        print(json.dumps([dataclasses.asdict(r) for r in regions], indent=2))
    else:
        sys.stdout.write(regions_csv(regions))
    return 0


def cmd_savings(args, cfg: Config) -> int:
    stack = resolve_stack(args.stack, cfg.stacks)
    path = NetworkPath(rtt_ms=args.rtt, flight=_flight_for(args, cfg))
    est = estimate_savings(stack, path, args.size_kb, args.rate)
    if args.format == "json":
        print(json.dumps(dataclasses.asdict(est), indent=2))
    else:
        print(
            f"rtt_ms={est.rtt_ms} chain_size_kb={est.chain_size_kb} "
            f"rate={est.resumption_rate} full_ms={est.full_ms} resumed_ms={est.resumed_ms} "
            f"expected_savings_ms={est.expected_savings_ms}"
        )
    return 0


def cmd_forge(args, cfg: Config) -> int:
    scheme = resolve_scheme(args.scheme, cfg.schemes)
    spec = ChainSpec(
        scheme,
        intermediates=args.intermediates,
        mtc=args.mtc,
        explicit_size_kb=args.size_kb,
    )
    chain = cert_forge.forge_chain(spec, kb_bytes=cfg.kb_bytes)
    manifest = cert_forge.write_chain(chain, args.out_dir)
    ok = True
    for entry in manifest["certs"]:
        exact = entry["actual_bytes"] == entry["target_bytes"]
        report = cert_forge.parse_and_measure(
            next(c.der for c in chain.certs if c.role == entry["role"])
        )
        ok = ok and exact and report.well_formed
        print(
            f"{entry['role']}: target={entry['target_bytes']} "
            f"actual={entry['actual_bytes']} padding={entry['padding_bytes']} "
            f"well_formed={str(report.well_formed).lower()}"
        )
    print(f"total_bytes={manifest['total_bytes']} dir={args.out_dir}")
    return 0 if ok else 1


def cmd_analyze(args, cfg: Config) -> int:
    map_csv, cdn_file, cloud_file = cfg.resolve_asn_paths()
    asn_map = tla.AsnMap.from_files(
        args.asn_map or map_csv, args.cdn_asns or cdn_file, args.cloud_asns or cloud_file
    )
    stats = tla.ParseStats()
    if args.logs == "-":
        lines = sys.stdin
        records = list(tla.parse_log_stream(lines, fmt=args.log_format, stats=stats))
    else:
        with open(args.logs, encoding="utf-8") as f:
            records = list(tla.parse_log_stream(f, fmt=args.log_format, stats=stats))
    aggregated = tla.aggregate_stats(records, asn_map)
    series = tla.time_series(records, asn_map)

    correlations = {}
    for cls, points in series.items():
        pairs = [
            (s.tls13_adoption, s.resumption_rate_all)
            for _, s in points
            if s.tls13_adoption is not None and s.resumption_rate_all is not None
        ]
        if len(pairs) >= 3:
            correlations[cls] = tla.rate_correlation(pairs)

    payload = {
        "classes": {c: aggregated[c].to_dict() for c in tla.ENDPOINT_CLASSES},
        "parse": dataclasses.asdict(stats),
        "months": {c: [m for m, _ in pts] for c, pts in series.items()},
        "correlation_tls13_vs_resumption": correlations,
    }
    if args.format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["class", "total", "tls13", "resumed_all", "resumed_tls13",
             "tls13_adoption", "resumption_rate_tls13", "resumption_rate_all"]
        )
        for c in tla.ENDPOINT_CLASSES:
            d = aggregated[c].to_dict()
            writer.writerow(
                [d["class"], d["total"], d["tls13"], d["resumed_all"], d["resumed_tls13"]]
                + [("" if d[k] is None else repr(d[k]))
                   for k in ("tls13_adoption", "resumption_rate_tls13", "resumption_rate_all")]
            )
        _emit(out.getvalue(), args.out)
    else:
        text = json.dumps(payload, indent=2) + "\n"
        _emit(text, args.out)
    if args.series:
        with open(args.series, "w", encoding="utf-8") as f:
            f.write(tla.series_csv(series))
    if args.out:
        print(f"analyzed {stats.records} records ({stats.malformed} malformed) -> {args.out}")
    return 0


def cmd_calibrate(args, cfg: Config) -> int:
    with open(args.csv, newline="", encoding="utf-8") as f:
        pts = []
        for row in csv.reader(f):
            if not row or not row[0].strip():
                continue
            try:
                pts.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                continue  # header or junk
    profile = calibrate_stack_profile(
        pts, penalty_rtts=args.penalty, name=args.name, resumed_base_ms=args.resumed_base
    )
    payload = {
        "name": profile.name,
        "base_ms": profile.base_ms,
        "base_flights": profile.base_flights,
        "resumed_base_ms": profile.resumed_base_ms,
        "points": len(pts),
        "penalty_rtts": args.penalty,
    }
    if args.format == "text":
        print(
            f"name={profile.name} base_ms={profile.base_ms:.4f} "
            f"base_flights={profile.base_flights:.4f} "
            f"resumed_base_ms={profile.resumed_base_ms:.4f} points={len(pts)}"
        )
    else:
        print(json.dumps(payload, indent=2))
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certflight",
        description="TTFB vs certificate chain size: estimates, sweeps, "
        "thresholds, size-exact forged chains, and TLS log analytics.",
    )
    parser.add_argument("--config", help="path to a JSON config file "
                        "(default: $CERTFLIGHT_CONFIG if set)")
    parser.add_argument("--seed", type=int, help="override noise seed "
                        "(affects noise sampling only)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_chain_flags(p):
        p.add_argument("--scheme", default="ECDSA")
        p.add_argument("--intermediates", type=int, default=1)
        p.add_argument("--mtc", action="store_true")
        p.add_argument("--size-kb", type=float, default=None,
                       help="explicit chain size, overrides scheme sizing")

    def add_flight_flags(p):
        p.add_argument("--mode", choices=[ANALYTIC, EMPIRICAL], default=None)
        p.add_argument("--thresholds", default=None,
                       help="comma-separated empirical thresholds in KB")

    p = sub.add_parser("estimate", help="TTFB estimate for one configuration")
    add_chain_flags(p)
    add_flight_flags(p)
    p.add_argument("--rtt", type=float, required=True)
    p.add_argument("--stack", default="ClassicalSim")
    p.add_argument("--resumed", action="store_true")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="TTFB over a (stack, rtt, size) grid")
    add_flight_flags(p)
    p.add_argument("--stacks", default=None, help="comma-separated stack names")
    p.add_argument("--rtts", default=None, help="comma-separated RTTs in ms")
    p.add_argument("--sizes", default=None, help="size grid as start:end:step in KB")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--optimizers", default=None,
                   help="comma-separated: mtc1,mtc2,cdn25,cdn40,identity")
    p.add_argument("--out", default=None, help="write table here instead of stdout")
    p.add_argument("--gnuplot", default=None, help="also write gnuplot blocks here")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("thresholds", help="chain sizes where extra round trips start")
    add_flight_flags(p)
    p.add_argument("--max-kb", type=float, default=None)
    p.add_argument("--step-kb", type=float, default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("regions", help="chain sizes each optimizer rescues")
    p.add_argument("--thresholds", default=None,
                   help="comma-separated thresholds in KB (default: configured)")
    p.add_argument("--optimizers", default=None,
                   help="comma-separated: mtc1,mtc2,cdn25,cdn40 (default: all)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("savings", help="expected TTFB saved by resumption")
    add_flight_flags(p)
    p.add_argument("--rtt", type=float, required=True)
    p.add_argument("--size-kb", type=float, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--stack", default="ClassicalSim")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_savings)

    p = sub.add_parser("forge", help="write size-exact DER/PEM chains")
    add_chain_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("analyze", help="aggregate a TLS connection log")
    p.add_argument("--logs", required=True, help="log file, or - for stdin")
    p.add_argument("--log-format", choices=["auto", "tsv", "jsonl"], default="auto")
    p.add_argument("--asn-map", default=None, help="network,asn,org CSV")
    p.add_argument("--cdn-asns", default=None)
    p.add_argument("--cloud-asns", default=None)
    p.add_argument("--out", default=None, help="write stats here instead of stdout")
    p.add_argument("--series", default=None, help="write monthly series CSV here")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="fit a stack profile from rtt,ttfb CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--penalty", type=float, default=0.0,
                   help="extra RTTs already charged to the measured chain")
    p.add_argument("--name", default="calibrated")
    p.add_argument("--resumed-base", type=float, default=None)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config)
        if args.seed is not None:
            cfg.noise = dataclasses.replace(cfg.noise, seed=args.seed)
            cfg.sweep = dataclasses.replace(cfg.sweep, seed=args.seed)
        return args.func(args, cfg)
    except (ConfigError, CalibrationError, LogFormatError, PaddingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
