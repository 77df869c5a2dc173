"""Monte Carlo engine for hazard-triggered SA dissemination.

A trial drops a hazard into a sampled vehicle field; the vehicle nearest
the hazard detects it and the fragment is handed first-neighbor to
first-neighbor until the completion rule is met or the chain stalls.
Vehicles move between slots and reflect off the world edges so density
stays constant during a run.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SsaCompletionRule, TimingModel, WorldConfig
from .coverage import SightArc, TargetDisk, arc_mask, disk_points
from .geometry import Position, VehicleField, nearest_neighbor
from .latency import gamma_sample
from .rng import make_rng, trial_seed
from .stats import EmpiricalDist


class EmptyDistributionError(RuntimeError):
    """Raised when every trial of a batch stalled."""

    def __init__(self, trials: int):
        super().__init__(f"all {trials} trials stalled; no latency samples collected")
        self.trials = trials


@dataclass(frozen=True)
class Vehicle:
    id: int
    position: Position
    heading: float
    speed: float
    tx_range: float
    sight: SightArc | None = None


@dataclass(frozen=True)
class Hazard:
    position: Position


@dataclass(frozen=True)
class HopRecord:
    from_id: int
    to_id: int
    distance_m: float
    hop_time_s: float
    cumulative_time_s: float


@dataclass(frozen=True)
class PropagationTrace:
    hops: tuple
    completed: bool
    informed_count: int
    total_latency: float | None  # seconds, valid iff completed


@dataclass(frozen=True)
class MobileField:
    """Vehicle field plus per-vehicle motion state (parallel arrays)."""

    field: VehicleField
    headings: np.ndarray
    speeds: np.ndarray

    def vehicle(self, vid: int, tx_range: float, sight: SightArc | None = None) -> Vehicle:
        x, y = self.field.positions[vid]
        return Vehicle(vid, Position(float(x), float(y)), float(self.headings[vid]), float(self.speeds[vid]), tx_range, sight)


def sample_mobile_field(config: WorldConfig, rng) -> MobileField:
    """PPP positions plus uniform headings and speeds from the config ranges."""
    from .geometry import AreaIntensity, WorldArea, sample_ppp

    area = WorldArea(config.width_m, config.depth_m)
    field = sample_ppp(AreaIntensity(config.intensity_per_m2), area, rng, cell_size=config.tx_range_m)
    n = len(field)
    headings = rng.uniform(0.0, 2.0 * math.pi, n)
    lo, hi = config.speed_range_mps
    speeds = rng.uniform(lo, hi, n) if hi > lo else np.full(n, float(lo))
    return MobileField(field, headings, speeds)


def step_mobility(mobile: MobileField, dt: float) -> MobileField:
    """Advance every vehicle speed*dt along its heading with specular
    reflection at the world edges (multiple bounces fold correctly)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0 or len(mobile.field) == 0:
        return mobile
    w, d = mobile.field.area.width, mobile.field.area.depth
    vx = np.cos(mobile.headings) * mobile.speeds
    vy = np.sin(mobile.headings) * mobile.speeds
    raw_x = mobile.field.positions[:, 0] + vx * dt
    raw_y = mobile.field.positions[:, 1] + vy * dt
    x, flip_x = _fold(raw_x, w)
    y, flip_y = _fold(raw_y, d)
    new_vx = np.where(flip_x, -vx, vx)
    new_vy = np.where(flip_y, -vy, vy)
    moving = mobile.speeds > 0
    headings = np.where(moving, np.mod(np.arctan2(new_vy, new_vx), 2.0 * math.pi), mobile.headings)
    field = VehicleField(np.column_stack((x, y)), mobile.field.area, mobile.field.cell_size)
    return MobileField(field, headings, mobile.speeds.copy())


def _fold(raw: np.ndarray, limit: float):
    """Reflect coordinates into [0, limit]; flip marks an odd bounce count."""
    m = np.mod(raw, 2.0 * limit)
    folded = np.where(m <= limit, m, 2.0 * limit - m)
    return folded, m > limit


def run_trial(
    config: WorldConfig,
    timing: TimingModel | None = None,
    rule: SsaCompletionRule | None = None,
    seed: int = 0,
    mobile: MobileField | None = None,
    hazard: Hazard | None = None,
) -> PropagationTrace:
    """One dissemination trial; deterministic given (config, seed).

    ``mobile`` and ``hazard`` override the sampled field for constructed
    scenarios (hand-traced chains in tests).
    """
    timing = timing or config.timing
    rule = rule or config.rule
    rng = make_rng(seed)
    if mobile is None:
        mobile = sample_mobile_field(config, rng)
    if hazard is None:
        # uniformly positioned obstacle; drawn after the field so the draw
        # order (and hence determinism per seed) is fixed
        hx = rng.uniform(0.0, config.width_m)
        hy = rng.uniform(0.0, config.depth_m)
        hazard = Hazard(Position(hx, hy))

    n = len(mobile.field)
    if n == 0:
        return PropagationTrace(hops=(), completed=False, informed_count=0, total_latency=None)

    cov = _CoverageTracker(config, rule, hazard, rng) if rule.kind == "coverage_threshold" else None

    dx = mobile.field.positions[:, 0] - hazard.position.x
    dy = mobile.field.positions[:, 1] - hazard.position.y
    detector = int(np.argmin(dx * dx + dy * dy))

    if config.relay == "flood":
        return _run_flood(config, timing, rule, rng, mobile, detector, cov)
    return _run_chain(config, timing, rule, rng, mobile, detector, cov)


def _hop_seconds(timing: TimingModel, distance_m: float, rng) -> float:
    if timing.mode == "slot":
        return timing.slot_ms / 1e3
    prop = (
        float(gamma_sample(timing.hop_law_ms, rng)) / 1e3
        if timing.hop_law_ms is not None
        else distance_m / timing.signal_speed_mps
    )
    if timing.mode == "distance":
        return prop
    return timing.slot_ms / 1e3 + prop


class _CoverageTracker:
    """Accumulates the time-union of informed vehicles' sight arcs over a
    hazard-centered target disk and reports the covered fraction."""

    def __init__(self, config: WorldConfig, rule: SsaCompletionRule, hazard: Hazard, rng):
        self.target = TargetDisk(hazard.position, config.target_radius_m)
        self.points = disk_points(self.target, config.coverage_points, rng)
        self.covered = np.zeros(config.coverage_points, dtype=bool)
        ha_lo, ha_hi = config.half_angle_range_rad
        sr_lo, sr_hi = config.sight_radius_range_m
        # sight parameters are drawn lazily, per vehicle, on first contact
        self.half_angles = {}
        self.sight_radii = {}
        self._rng = rng
        self._ha = (max(ha_lo, 1e-9), ha_hi)
        self._sr = (max(sr_lo, 1e-9), sr_hi)
        self.threshold = rule.threshold

    def arc_for(self, mobile: MobileField, vid: int) -> SightArc:
        if vid not in self.half_angles:
            lo, hi = self._ha
            self.half_angles[vid] = float(self._rng.uniform(lo, hi)) if hi > lo else lo
            lo, hi = self._sr
            self.sight_radii[vid] = float(self._rng.uniform(lo, hi)) if hi > lo else lo
        x, y = mobile.field.positions[vid]
        return SightArc(Position(float(x), float(y)), float(mobile.headings[vid]), self.half_angles[vid], self.sight_radii[vid])

    def absorb(self, mobile: MobileField, informed) -> float:
        for vid in informed:
            self.covered |= arc_mask(self.arc_for(mobile, vid), self.points)
        return float(self.covered.mean())


def _rule_met(rule: SsaCompletionRule, informed, cov, mobile) -> bool:
    if rule.kind == "n_vehicles_informed":
        return len(informed) >= rule.n
    return cov.absorb(mobile, informed) >= rule.threshold


def _run_chain(config, timing, rule, rng, mobile, detector, cov) -> PropagationTrace:
    slotted = timing.mode in ("slot", "slot_plus_distance")
    slot_s = timing.slot_ms / 1e3
    can_move = bool(np.any(mobile.speeds > 0))
    informed = [detector]
    informed_set = {detector}
    hops = []
    clock = 0.0
    if _rule_met(rule, informed, cov, mobile):
        return PropagationTrace(tuple(hops), True, len(informed), clock)
    frontier = detector
    stall_slots = 0
    while True:
        nb = nearest_neighbor(mobile.field, frontier, config.tx_range_m, frozenset(informed_set))
        if nb is None:
            if slotted and can_move and stall_slots < config.max_stall_slots:
                clock += slot_s
                mobile = step_mobility(mobile, slot_s)
                stall_slots += 1
                continue
            return PropagationTrace(tuple(hops), False, len(informed), None)
        stall_slots = 0
        fx, fy = mobile.field.positions[frontier]
        nx, ny = mobile.field.positions[nb]
        dist = math.hypot(nx - fx, ny - fy)
        dt = _hop_seconds(timing, dist, rng)
        clock += dt
        hops.append(HopRecord(frontier, nb, dist, dt, clock))
        informed.append(nb)
        informed_set.add(nb)
        frontier = nb
        if slotted and can_move:
            mobile = step_mobility(mobile, slot_s)
        if _rule_met(rule, informed, cov, mobile):
            return PropagationTrace(tuple(hops), True, len(informed), clock)


def _run_flood(config, timing, rule, rng, mobile, detector, cov) -> PropagationTrace:
    """Slot-synchronous flooding: each slot, every uninformed vehicle within
    range of any informed vehicle becomes informed. Sensitivity mode only."""
    slot_s = timing.slot_ms / 1e3
    can_move = bool(np.any(mobile.speeds > 0))
    informed_set = {detector}
    informed = [detector]
    hops = []
    clock = 0.0
    if _rule_met(rule, informed, cov, mobile):
        return PropagationTrace(tuple(hops), True, len(informed), clock)
    stall_slots = 0
    while True:
        pos = mobile.field.positions
        inf_ids = np.fromiter(informed_set, dtype=np.int64)
        uninf = np.setdiff1d(np.arange(len(mobile.field)), inf_ids, assume_unique=False)
        newly = []
        if uninf.size:
            d2 = (
                (pos[uninf, None, 0] - pos[None, inf_ids, 0]) ** 2
                + (pos[uninf, None, 1] - pos[None, inf_ids, 1]) ** 2
            )
            best = np.argmin(d2, axis=1)
            for row, (u, b) in enumerate(zip(uninf, best)):
                dist2 = float(d2[row, b])
                if dist2 <= config.tx_range_m**2:
                    newly.append((int(u), int(inf_ids[b]), math.sqrt(dist2)))
        if not newly:
            if can_move and stall_slots < config.max_stall_slots:
                clock += slot_s
                mobile = step_mobility(mobile, slot_s)
                stall_slots += 1
                continue
            return PropagationTrace(tuple(hops), False, len(informed), None)
        stall_slots = 0
        clock += slot_s
        for to_id, from_id, dist in sorted(newly):
            hops.append(HopRecord(from_id, to_id, dist, slot_s, clock))
            informed_set.add(to_id)
            informed.append(to_id)
            if _rule_met(rule, informed, cov, mobile):
                return PropagationTrace(tuple(hops), True, len(informed), clock)
        if can_move:
            mobile = step_mobility(mobile, slot_s)


def _trial_latency_ms(args) -> float:
    config, trial_index, root_seed = args
    trace = run_trial(config, seed=trial_seed(root_seed, trial_index))
    return trace.total_latency * 1e3 if trace.completed else math.nan


def run_batch(
    config: WorldConfig,
    trials: int | None = None,
    root_seed: int | None = None,
    workers: int = 1,
):
    """Run independent trials; returns (EmpiricalDist in ms, stall fraction).

    Each trial's RNG derives from (root_seed, trial_index), so the result is
    identical for any worker count.
    """
    trials = config.trials if trials is None else trials
    root_seed = config.seed if root_seed is None else root_seed
    if trials < 1:
        raise ValueError("trials must be >= 1")
    args = [(config, i, root_seed) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_trial_latency_ms, args, chunksize=max(1, trials // (4 * workers))))
    else:
        raw = [_trial_latency_ms(a) for a in args]
    latencies = np.asarray(raw, dtype=float)
    stalled = int(np.count_nonzero(np.isnan(latencies)))
    if stalled == trials:
        raise EmptyDistributionError(trials)
    dist = EmpiricalDist(latencies[~np.isnan(latencies)], unit="ms")
    return dist, stalled / trials


def trace_csv_rows(trial_id: int, trace: PropagationTrace):
    """CSV rows (trial_id, hop_idx, from_id, to_id, distance_m, hop_time_s, cumulative_s)."""
    for idx, hop in enumerate(trace.hops):
        yield (trial_id, idx, hop.from_id, hop.to_id, hop.distance_m, hop.hop_time_s, hop.cumulative_time_s)


TRACE_CSV_HEADER = "trial_id,hop_idx,from_id,to_id,distance_m,hop_time_s,cumulative_s"
