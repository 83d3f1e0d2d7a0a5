"""Certificate chain size model.

Chain sizes are expressed in KB, where 1 KB = 1000 bytes by default
(``DEFAULT_KB_BYTES``; pass 1024 anywhere a ``kb_bytes`` argument is
accepted to switch conventions). Sizes for the built-in signature
schemes come from measured certificate chains; Merkle-committed leaves
replace the whole chain with a single certificate plus an inclusion
proof.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_KB_BYTES = 1000


def kb_to_bytes(size_kb: float, kb_bytes: int = DEFAULT_KB_BYTES) -> int:
    """Convert a KB size to whole bytes under the given convention."""
    if size_kb < 0:
        raise ValueError(f"size must be >= 0, got {size_kb}")
    return round(size_kb * kb_bytes)


@dataclass(frozen=True)
class SchemeProfile:
    """Per-certificate sizes for one signature scheme.

    mtc_leaf_kb is the size of the single Merkle-committed leaf
    certificate that replaces the chain; it is None for schemes where
    no such deployment is defined.
    """

    name: str
    leaf_kb: float
    intermediate_kb: float
    mtc_leaf_kb: float | None = None

    def __post_init__(self):
        if self.leaf_kb <= 0 or self.intermediate_kb <= 0:
            raise ConfigError(f"{self.name}: certificate sizes must be positive")
        if self.mtc_leaf_kb is not None and self.mtc_leaf_kb <= 0:
            raise ConfigError(f"{self.name}: mtc_leaf_kb must be positive when set")


@dataclass(frozen=True)
class ChainSpec:
    """A concrete chain to be sized: scheme, depth, and variant flags.

    explicit_size_kb overrides all computed sizing when set (useful for
    what-if sweeps that do not correspond to any scheme).
    """

    scheme: SchemeProfile
    intermediates: int = 1
    mtc: bool = False
    explicit_size_kb: float | None = None

    def __post_init__(self):
        if self.intermediates < 0:
            raise ConfigError("intermediates must be >= 0")
        if self.explicit_size_kb is not None and self.explicit_size_kb <= 0:
            raise ConfigError("explicit_size_kb must be positive when set")


def chain_size_kb(spec: ChainSpec) -> float:
    """Total size in KB of the certificate chain described by spec."""
    if spec.explicit_size_kb is not None:
        return spec.explicit_size_kb
    if spec.mtc:
        if spec.scheme.mtc_leaf_kb is None:
            raise ConfigError(
                f"{spec.scheme.name} has no mtc_leaf_kb configured; "
                "set one on the scheme profile to size MTC chains"
            )
        return spec.scheme.mtc_leaf_kb
    return spec.scheme.leaf_kb + spec.intermediates * spec.scheme.intermediate_kb


@dataclass(frozen=True)
class MerkleParams:
    leaf_count: int
    hash_bytes: int = 32

    def __post_init__(self):
        if self.leaf_count < 1:
            raise ValueError("leaf_count must be >= 1")
        if self.hash_bytes < 1:
            raise ValueError("hash_bytes must be >= 1")


def merkle_proof_bytes(params: MerkleParams) -> int:
    """Size of an inclusion proof: hash_bytes * ceil(log2(leaf_count)).

    A single-leaf tree needs no proof. Uses bit_length so non-powers of
    two round up without floating-point log.
    """
    depth = (params.leaf_count - 1).bit_length()
    return params.hash_bytes * depth


# Size optimizer kinds. The MTC kinds model replacing a 1- or
# 2-intermediate chain with one committed certificate plus ~1 KB of
# proof; the CDN kinds model fractional compression of the whole chain.
MTC_ONE_INTERMEDIATE = "mtc-one-intermediate"
MTC_TWO_INTERMEDIATES = "mtc-two-intermediates"
CDN_MODERATE = "cdn-moderate"
CDN_AGGRESSIVE = "cdn-aggressive"
IDENTITY = "identity"

_CDN_KINDS = (CDN_MODERATE, CDN_AGGRESSIVE)
_ALL_KINDS = (MTC_ONE_INTERMEDIATE, MTC_TWO_INTERMEDIATES) + _CDN_KINDS + (IDENTITY,)


@dataclass(frozen=True)
class SizeOptimizer:
    kind: str
    factor: float | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if self.kind in _CDN_KINDS:
            if self.factor is None or not 0 < self.factor < 1:
                raise ConfigError(f"{self.kind} needs a factor in (0, 1)")
        elif self.factor is not None:
            raise ConfigError(f"{self.kind} takes no factor")

    @property
    def label(self) -> str:
        if self.kind in _CDN_KINDS:
            return f"{self.kind}-{round((1 - self.factor) * 100)}pct"
        return self.kind


def effective_size_kb(size_kb: float, optimizer: SizeOptimizer) -> float:
    """Chain size on the wire after applying one optimizer."""
    if size_kb < 0:
        raise ValueError(f"size must be >= 0, got {size_kb}")
    if optimizer.kind == MTC_ONE_INTERMEDIATE:
        return size_kb / 2 + 1
    if optimizer.kind == MTC_TWO_INTERMEDIATES:
        return size_kb / 3 + 1
    if optimizer.kind in _CDN_KINDS:
        return size_kb * optimizer.factor
    return size_kb


DEFAULT_OPTIMIZERS = (
    SizeOptimizer(MTC_ONE_INTERMEDIATE),
    SizeOptimizer(MTC_TWO_INTERMEDIATES),
    SizeOptimizer(CDN_MODERATE, factor=0.75),
    SizeOptimizer(CDN_AGGRESSIVE, factor=0.60),
)

DEFAULT_SCHEMES = {
    "ECDSA": SchemeProfile("ECDSA", leaf_kb=1.0, intermediate_kb=2.0),
    "ML-DSA": SchemeProfile("ML-DSA", leaf_kb=3.9, intermediate_kb=8.0, mtc_leaf_kb=4.8),
    "SLH-DSA": SchemeProfile("SLH-DSA", leaf_kb=16.6, intermediate_kb=32.1, mtc_leaf_kb=17.6),
    # hybrid = ML-DSA plus ~1 KB of classical material per certificate
    "Hybrid-ML-DSA": SchemeProfile("Hybrid-ML-DSA", leaf_kb=4.9, intermediate_kb=9.0, mtc_leaf_kb=5.8),
}

_SCHEME_ALIASES = {
    "ecdsa": "ECDSA",
    "ml-dsa": "ML-DSA",
    "mldsa": "ML-DSA",
    "slh-dsa": "SLH-DSA",
    "slhdsa": "SLH-DSA",
    "hybrid-ml-dsa": "Hybrid-ML-DSA",
    "hybrid": "Hybrid-ML-DSA",
}


def resolve_scheme(name: str, schemes: dict[str, SchemeProfile] | None = None) -> SchemeProfile:
    """Look up a scheme profile by exact or aliased name."""
    table = DEFAULT_SCHEMES if schemes is None else schemes
    if name in table:
        return table[name]
    canonical = _SCHEME_ALIASES.get(name.lower())
    if canonical is not None and canonical in table:
        return table[canonical]
    raise ConfigError(f"unknown scheme {name!r}; known: {', '.join(sorted(table))}")


def scheme_to_dict(profile: SchemeProfile) -> dict:
    d = {"leaf_kb": profile.leaf_kb, "intermediate_kb": profile.intermediate_kb}
    if profile.mtc_leaf_kb is not None:
        d["mtc_leaf_kb"] = profile.mtc_leaf_kb
    return d


def scheme_from_dict(name: str, d: dict) -> SchemeProfile:
    try:
        return SchemeProfile(
            name,
            leaf_kb=float(d["leaf_kb"]),
            intermediate_kb=float(d["intermediate_kb"]),
            mtc_leaf_kb=float(d["mtc_leaf_kb"]) if d.get("mtc_leaf_kb") is not None else None,
        )
    except KeyError as e:
        raise ConfigError(f"scheme {name!r} is missing field {e.args[0]!r}") from None


def load_scheme_profiles(path) -> dict[str, SchemeProfile]:
    """Read scheme profiles from a JSON object keyed by scheme name."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a JSON object of scheme profiles")
    return {name: scheme_from_dict(name, d) for name, d in raw.items()}


def save_scheme_profiles(profiles: dict[str, SchemeProfile], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({name: scheme_to_dict(p) for name, p in profiles.items()}, f, indent=2)
        f.write("\n")
