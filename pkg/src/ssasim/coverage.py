"""Monte Carlo coverage of a target disk by arc-shaped vision sectors.

The union of circular sectors clipped to a disk has no tractable closed
form, so coverage is estimated by uniform point sampling in the disk; a
shared point set keeps comparisons between arc subsets consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import Position
from .rng import make_rng

MIN_SAMPLE_POINTS = 1_000
MAX_COVER_ARCS = 22


class CapacityError(ValueError):
    """Input too large for exhaustive subset search."""


@dataclass(frozen=True)
class SightArc:
    """Circular sector: apex, central heading, half-angle, radius."""

    apex: Position
    heading: float
    half_angle: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("arc radius must be positive")
        if not 0 < self.half_angle <= math.pi:
            raise ValueError("half_angle must be in (0, pi]")


@dataclass(frozen=True)
class TargetDisk:
    center: Position
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("target radius must be positive")


@dataclass(frozen=True)
class CoverageEstimate:
    rate: float
    sample_points: int
    std_err: float


def disk_points(target: TargetDisk, n: int, seed) -> np.ndarray:
    """n uniform points in the disk, deterministic given seed."""
    rng = make_rng(seed)
    r = target.radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return np.column_stack((target.center.x + r * np.cos(theta), target.center.y + r * np.sin(theta)))


def arc_mask(arc: SightArc, points: np.ndarray) -> np.ndarray:
    """Boolean membership of each (x, y) point in the sector."""
    dx = points[:, 0] - arc.apex.x
    dy = points[:, 1] - arc.apex.y
    within_r = dx * dx + dy * dy <= arc.radius**2
    ang = np.arctan2(dy, dx) - arc.heading
    ang = np.mod(ang + math.pi, 2.0 * math.pi) - math.pi
    return within_r & (np.abs(ang) <= arc.half_angle)


def coverage_rate(arcs, target: TargetDisk, sample_points: int = 100_000, seed=0) -> CoverageEstimate:
    """Fraction of the target disk covered by the union of arcs."""
    if sample_points < MIN_SAMPLE_POINTS:
        raise ValueError(f"sample_points must be >= {MIN_SAMPLE_POINTS}")
    arcs = list(arcs)
    if not arcs:
        return CoverageEstimate(0.0, sample_points, 0.0)
    pts = disk_points(target, sample_points, seed)
    covered = np.zeros(sample_points, dtype=bool)
    for arc in arcs:
        covered |= arc_mask(arc, pts)
    rate = float(covered.mean())
    return CoverageEstimate(rate, sample_points, math.sqrt(rate * (1.0 - rate) / sample_points))


def accumulate_vision(steps):
    """Flatten per-time-step arc collections into one union collection."""
    acc = []
    for step in steps:
        acc.extend(step)
    return acc


def min_cover_subset(arcs, target: TargetDisk, threshold: float, sample_points: int = 100_000, seed=0):
    """Smallest arc subset whose union covers >= threshold of the disk.

    Exhaustive over subsets ordered by size then lexicographic index; all
    subsets are scored on one shared point set so the ordering cannot flip
    on sampling noise. Returns a tuple of arc indices, or None if even the
    full set falls short.
    """
    arcs = list(arcs)
    if len(arcs) > MAX_COVER_ARCS:
        raise CapacityError(f"exhaustive search capped at {MAX_COVER_ARCS} arcs, got {len(arcs)}")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    if sample_points < MIN_SAMPLE_POINTS:
        raise ValueError(f"sample_points must be >= {MIN_SAMPLE_POINTS}")
    pts = disk_points(target, sample_points, seed)
    masks = np.stack([arc_mask(a, pts) for a in arcs]) if arcs else np.zeros((0, sample_points), dtype=bool)
    for size in range(len(arcs) + 1):
        for combo in combinations(range(len(arcs)), size):
            if size == 0:
                rate = 0.0
            else:
                rate = float(np.any(masks[list(combo)], axis=0).mean())
            if rate >= threshold:
                return combo
    return None
