"""Serializable configuration: defaults reproduce the shipped calibration.

Precedence is CLI flags over config file over built-in defaults. The
config file path comes from --config or the CERTFLIGHT_CONFIG
environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

from .chain_model import (
    DEFAULT_KB_BYTES,
    DEFAULT_OPTIMIZERS,
    DEFAULT_SCHEMES,
    SchemeProfile,
    SizeOptimizer,
    scheme_from_dict,
    scheme_to_dict,
)
from .errors import ConfigError
from .sweep_runner import SweepPlan
from .transport_flight import FlightModel
from .ttfb_engine import DEFAULT_STACKS, NoiseModel, StackProfile

ENV_CONFIG = "CERTFLIGHT_CONFIG"


def _data_path(name: str) -> str:
    return str(resources.files("certflight").joinpath("data", name))


@dataclass
class Config:
    schemes: dict[str, SchemeProfile] = field(default_factory=lambda: dict(DEFAULT_SCHEMES))
    stacks: dict[str, StackProfile] = field(default_factory=lambda: dict(DEFAULT_STACKS))
    flight: FlightModel = field(default_factory=FlightModel)
    sweep: SweepPlan = field(default_factory=SweepPlan)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel("gaussian", std_ms=0.2, seed=1234))
    asn_map_csv: str | None = None
    cdn_asn_file: str | None = None
    cloud_asn_file: str | None = None
    kb_bytes: int = DEFAULT_KB_BYTES

    def resolve_asn_paths(self) -> tuple[str, str, str]:
        """Configured analytics inputs, falling back to packaged samples."""
        return (
            self.asn_map_csv or _data_path("asn_map_sample.csv"),
            self.cdn_asn_file or _data_path("cdn_asns.txt"),
            self.cloud_asn_file or _data_path("cloud_asns.txt"),
        )


def config_to_dict(cfg: Config) -> dict:
    return {
        "kb_bytes": cfg.kb_bytes,
        "schemes": {name: scheme_to_dict(p) for name, p in cfg.schemes.items()},
        "stacks": {
            name: {
                "base_ms": p.base_ms,
                "base_flights": p.base_flights,
                "resumed_base_ms": p.resumed_base_ms,
            }
            for name, p in cfg.stacks.items()
        },
        "flight": {
            "iw_bytes": cfg.flight.iw_bytes,
            "growth_factor": cfg.flight.growth_factor,
            "handshake_overhead_bytes": cfg.flight.handshake_overhead_bytes,
            "mode": cfg.flight.mode,
            "empirical_thresholds_kb": list(cfg.flight.empirical_thresholds_kb),
            "kb_bytes": cfg.flight.kb_bytes,
        },
        "sweep": {
            "stacks": list(cfg.sweep.stacks),
            "rtts_ms": list(cfg.sweep.rtts_ms),
            "size_start_kb": cfg.sweep.size_start_kb,
            "size_end_kb": cfg.sweep.size_end_kb,
            "size_step_kb": cfg.sweep.size_step_kb,
            "trials": cfg.sweep.trials,
            "seed": cfg.sweep.seed,
            "optimizers": [
                {"kind": o.kind, "factor": o.factor} for o in cfg.sweep.optimizers
            ],
        },
        "noise": {"kind": cfg.noise.kind, "std_ms": cfg.noise.std_ms, "seed": cfg.noise.seed},
        "asn_map_csv": cfg.asn_map_csv,
        "cdn_asn_file": cfg.cdn_asn_file,
        "cloud_asn_file": cfg.cloud_asn_file,
    }


def config_from_dict(raw: dict) -> Config:
    cfg = Config()
    if "kb_bytes" in raw:
        cfg.kb_bytes = int(raw["kb_bytes"])
    if "schemes" in raw:
        cfg.schemes = {n: scheme_from_dict(n, d) for n, d in raw["schemes"].items()}
    if "stacks" in raw:
        cfg.stacks = {
            n: StackProfile(
                n,
                base_ms=float(d["base_ms"]),
                base_flights=float(d["base_flights"]),
                resumed_base_ms=(
                    float(d["resumed_base_ms"]) if d.get("resumed_base_ms") is not None else None
                ),
            )
            for n, d in raw["stacks"].items()
        }
    if "flight" in raw:
        d = raw["flight"]
        cfg.flight = FlightModel(
            iw_bytes=int(d.get("iw_bytes", 14000)),
            growth_factor=float(d.get("growth_factor", 2.0)),
            handshake_overhead_bytes=int(d.get("handshake_overhead_bytes", 4000)),
            mode=d.get("mode", "empirical"),
            empirical_thresholds_kb=tuple(d.get("empirical_thresholds_kb", (10.0, 40.0))),
            kb_bytes=int(d.get("kb_bytes", cfg.kb_bytes)),
        )
    if "sweep" in raw:
        d = raw["sweep"]
        cfg.sweep = SweepPlan(
            stacks=tuple(d.get("stacks", ("ClassicalSim",))),
            rtts_ms=tuple(d.get("rtts_ms", (0.0, 10.0, 50.0, 100.0, 200.0))),
            size_start_kb=float(d.get("size_start_kb", 4.0)),
            size_end_kb=float(d.get("size_end_kb", 80.0)),
            size_step_kb=float(d.get("size_step_kb", 2.0)),
            trials=int(d.get("trials", 100)),
            seed=int(d.get("seed", 1234)),
            optimizers=tuple(
                SizeOptimizer(o["kind"], o.get("factor")) for o in d.get("optimizers", ())
            ),
        )
    if "noise" in raw:
        d = raw["noise"]
        cfg.noise = NoiseModel(
            kind=d.get("kind", "gaussian"),
            std_ms=float(d.get("std_ms", 0.2)),
            seed=int(d.get("seed", 1234)),
        )
    for key in ("asn_map_csv", "cdn_asn_file", "cloud_asn_file"):
        if raw.get(key) is not None:
            setattr(cfg, key, str(raw[key]))
    return cfg


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return config_from_dict(raw)


def save_config(cfg: Config, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_dict(cfg), f, indent=2)
        f.write("\n")


def resolve_config(path_flag: str | None = None) -> Config:
    """Load the config named by flag, else env var, else defaults."""
    path = path_flag or os.environ.get(ENV_CONFIG)
    if path:
        return load_config(path)
    return Config()


def default_optimizers() -> tuple[SizeOptimizer, ...]:
    return DEFAULT_OPTIMIZERS
