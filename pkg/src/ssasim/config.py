"""Experiment configuration records and their JSON round-trip.

A config file is UTF-8 JSON whose keys match WorldConfig field names
exactly; one file fully reproduces a run.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .latency import GammaParams

TIMING_MODES = ("slot", "distance", "slot_plus_distance")
RULE_KINDS = ("n_vehicles_informed", "coverage_threshold")
RELAY_MODES = ("chain", "flood")

SPEED_OF_LIGHT_MPS = 299_792_458.0


@dataclass(frozen=True)
class SsaCompletionRule:
    """Trial termination: either an informed-count target or a coverage level."""

    kind: str = "n_vehicles_informed"
    n: int | None = 4
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown completion rule kind {self.kind!r}")
        if self.kind == "n_vehicles_informed":
            if self.n is None or self.n < 1 or self.threshold is not None:
                raise ValueError("n_vehicles_informed needs n >= 1 and no threshold")
        else:
            if self.threshold is None or not 0 < self.threshold <= 1 or self.n is not None:
                raise ValueError("coverage_threshold needs threshold in (0, 1] and no n")


@dataclass(frozen=True)
class TimingModel:
    """Per-hop time accounting.

    slot: every hop costs one broadcast slot.
    distance: hop distance over signal_speed; if hop_law_ms is set, the hop
      time is instead drawn from that Gamma law (in milliseconds), which is
      how the analytic Gamma latency result is reproduced.
    slot_plus_distance: slot plus the propagation term.
    """

    mode: str = "slot_plus_distance"
    slot_ms: float = 100.0
    signal_speed_mps: float = SPEED_OF_LIGHT_MPS
    hop_law_ms: GammaParams | None = None

    def __post_init__(self):
        if self.mode not in TIMING_MODES:
            raise ValueError(f"unknown timing mode {self.mode!r}")
        if self.slot_ms < 0 or self.signal_speed_mps <= 0:
            raise ValueError("slot_ms must be >= 0 and signal_speed_mps > 0")
        if self.mode != "distance" and self.slot_ms <= 0:
            raise ValueError(f"mode {self.mode!r} requires slot_ms > 0")


@dataclass(frozen=True)
class WorldConfig:
    """Full parameterization of one experiment."""

    width_m: float = 1000.0
    depth_m: float = 1000.0
    intensity_per_m2: float = 100.0 / 1e6
    tx_range_m: float = 100.0
    timing: TimingModel = field(default_factory=TimingModel)
    rule: SsaCompletionRule = field(default_factory=SsaCompletionRule)
    relay: str = "chain"
    speed_range_mps: tuple = (0.0, 30.0)
    half_angle_range_rad: tuple = (math.pi / 12, math.pi / 3)
    sight_radius_range_m: tuple = (40.0, 100.0)
    target_radius_m: float = 75.0
    coverage_points: int = 2048
    max_stall_slots: int = 200
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.width_m <= 0 or self.depth_m <= 0:
            raise ValueError("world dimensions must be positive")
        if self.intensity_per_m2 < 0:
            raise ValueError("intensity must be >= 0")
        if self.tx_range_m <= 0 or self.target_radius_m <= 0:
            raise ValueError("tx_range_m and target_radius_m must be positive")
        if self.relay not in RELAY_MODES:
            raise ValueError(f"unknown relay mode {self.relay!r}")
        if self.relay == "flood" and self.timing.mode == "distance":
            raise ValueError("flood relay requires a slotted timing mode")
        for name in ("speed_range_mps", "half_angle_range_rad", "sight_radius_range_m"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a nonnegative (lo, hi) pair")
        if self.trials < 1 or self.max_stall_slots < 0 or self.coverage_points < 1000:
            raise ValueError("trials >= 1, max_stall_slots >= 0, coverage_points >= 1000 required")

    def expected_vehicles(self) -> float:
        return self.intensity_per_m2 * self.width_m * self.depth_m


def config_to_dict(config: WorldConfig) -> dict:
    d = asdict(config)
    d["timing"]["hop_law_ms"] = (
        None
        if config.timing.hop_law_ms is None
        else {"shape": config.timing.hop_law_ms.shape, "rate": config.timing.hop_law_ms.rate}
    )
    for name in ("speed_range_mps", "half_angle_range_rad", "sight_radius_range_m"):
        d[name] = list(d[name])
    return d


def config_from_dict(data: dict) -> WorldConfig:
    data = dict(data)
    known = set(WorldConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "timing" in data:
        t = dict(data["timing"])
        unknown = set(t) - set(TimingModel.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown timing keys: {sorted(unknown)}")
        if t.get("hop_law_ms") is not None:
            t["hop_law_ms"] = GammaParams(**t["hop_law_ms"])
        data["timing"] = TimingModel(**t)
    if "rule" in data:
        r = dict(data["rule"])
        unknown = set(r) - set(SsaCompletionRule.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown rule keys: {sorted(unknown)}")
        if r.get("kind") == "coverage_threshold":
            r.setdefault("n", None)
        data["rule"] = SsaCompletionRule(**r)
    for name in ("speed_range_mps", "half_angle_range_rad", "sight_radius_range_m"):
        if name in data:
            data[name] = tuple(data[name])
    return WorldConfig(**data)


def save_config(config: WorldConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")


def load_config(path) -> WorldConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
