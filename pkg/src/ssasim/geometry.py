"""Poisson vehicle fields on a bounded rectangle.

Samples homogeneous Poisson point processes, answers disk-count and
nearest-neighbor queries through a uniform grid index, and evaluates the
exact planar nth-nearest-neighbor distance density.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .rng import make_rng


@dataclass(frozen=True)
class WorldArea:
    """Bounded rectangular world, in meters."""

    width: float
    depth: float

    def __post_init__(self):
        if self.width <= 0 or self.depth <= 0:
            raise ValueError(f"world dimensions must be positive, got {self.width}x{self.depth}")

    def area(self) -> float:
        return self.width * self.depth

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.depth


@dataclass(frozen=True)
class AreaIntensity:
    """Spatial density in vehicles per square meter.

    Distinct from a Gamma rate parameter; the two are never interconverted.
    """

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"intensity must be >= 0, got {self.value}")


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class VehicleField:
    """Point field with a lazily built uniform grid index.

    ``positions`` is an (n, 2) float array; vehicle ids are row indices.
    ``cell_size`` should equal the transmission range so any in-range
    neighbor lies within the 3x3 cell neighborhood of the query cell.
    """

    positions: np.ndarray
    area: WorldArea
    cell_size: float = 100.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if pos.size and (
            pos[:, 0].min() < 0
            or pos[:, 1].min() < 0
            or pos[:, 0].max() > self.area.width
            or pos[:, 1].max() > self.area.depth
        ):
            raise ValueError("vehicle positions must lie inside the world area")

    def __len__(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def _grid(self) -> dict:
        """cell (ix, iy) -> array of vehicle ids in that cell."""
        cells = np.floor_divide(self.positions, self.cell_size).astype(np.int64)
        grid: dict = {}
        for vid, (ix, iy) in enumerate(map(tuple, cells)):
            grid.setdefault((ix, iy), []).append(vid)
        return {k: np.asarray(v, dtype=np.int64) for k, v in grid.items()}


def sample_ppp(intensity: AreaIntensity, area: WorldArea, seed, cell_size: float = 100.0) -> VehicleField:
    """Homogeneous PPP on ``area``: Poisson count, i.i.d. uniform positions.

    Deterministic given ``seed``.
    """
    rng = make_rng(seed)
    n = int(rng.poisson(intensity.value * area.area()))
    xy = rng.random((n, 2))
    xy[:, 0] *= area.width
    xy[:, 1] *= area.depth
    return VehicleField(xy, area, cell_size)


def clipped_disk_area(area: WorldArea, center: Position, radius: float, n_grid: int = 400) -> float:
    """Area of disk ∩ world. Exact when fully interior, numeric otherwise."""
    if radius <= 0:
        return 0.0
    interior = (
        center.x - radius >= 0
        and center.y - radius >= 0
        and center.x + radius <= area.width
        and center.y + radius <= area.depth
    )
    if interior:
        return math.pi * radius * radius
    # midpoint grid over the disk bounding box, clipped to the world
    xs = np.linspace(center.x - radius, center.x + radius, n_grid, endpoint=False) + radius / n_grid
    ys = np.linspace(center.y - radius, center.y + radius, n_grid, endpoint=False) + radius / n_grid
    gx, gy = np.meshgrid(xs, ys)
    inside = ((gx - center.x) ** 2 + (gy - center.y) ** 2 <= radius**2) & (
        (gx >= 0) & (gx <= area.width) & (gy >= 0) & (gy <= area.depth)
    )
    cell = (2 * radius / n_grid) ** 2
    return float(inside.sum()) * cell


def count_in_disk(field: VehicleField, center: Position, radius: float) -> int:
    """Number of vehicles within Euclidean distance ``radius`` of ``center``."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if len(field) == 0:
        return 0
    dx = field.positions[:, 0] - center.x
    dy = field.positions[:, 1] - center.y
    return int(np.count_nonzero(dx * dx + dy * dy <= radius * radius))


def nearest_neighbor(field: VehicleField, from_id: int, range_m: float, exclude=frozenset()):
    """Id of the closest vehicle to ``from_id`` within ``range_m``, or None.

    Excludes ``from_id`` itself and any id in ``exclude``. Ties break toward
    the lowest id so results are reproducible.
    """
    if range_m <= 0:
        raise ValueError("range must be positive")
    n = len(field)
    if not 0 <= from_id < n:
        raise ValueError(f"unknown vehicle id {from_id}")
    px, py = field.positions[from_id]
    return nearest_to_point(field, px, py, range_m, exclude | {from_id})


def nearest_to_point(field: VehicleField, px: float, py: float, range_m: float, exclude=frozenset()):
    """Grid ring search for the nearest vehicle to (px, py) within range."""
    cs = field.cell_size
    grid = field._grid
    cx, cy = int(px // cs), int(py // cs)
    max_ring = int(math.ceil(range_m / cs)) + 1
    r2 = range_m * range_m
    best = None  # (d2, id)
    pos = field.positions
    for ring in range(max_ring + 1):
        # cells in previous rings already searched; points in ring r are at
        # distance >= (r-1)*cs from the query, so stop once that beats best
        if best is not None and (ring - 1) * cs > math.sqrt(best[0]):
            break
        for ix, iy in _ring_cells(cx, cy, ring):
            ids = grid.get((ix, iy))
            if ids is None:
                continue
            dx = pos[ids, 0] - px
            dy = pos[ids, 1] - py
            d2 = dx * dx + dy * dy
            # stable sort: equal distances stay in ascending-id order
            for j in np.argsort(d2, kind="stable"):
                vid = int(ids[j])
                if vid in exclude:
                    continue
                dj = float(d2[j])
                if dj <= r2 and (best is None or (dj, vid) < best):
                    best = (dj, vid)
                break  # first non-excluded candidate is the cell minimum
    return None if best is None else best[1]


def _ring_cells(cx: int, cy: int, ring: int):
    if ring == 0:
        yield (cx, cy)
        return
    for ix in range(cx - ring, cx + ring + 1):
        yield (ix, cy - ring)
        yield (ix, cy + ring)
    for iy in range(cy - ring + 1, cy + ring):
        yield (cx - ring, iy)
        yield (cx + ring, iy)


def nearest_neighbor_brute(field: VehicleField, from_id: int, range_m: float, exclude=frozenset()):
    """O(n) scan; the oracle nearest_neighbor is checked against."""
    px, py = field.positions[from_id]
    skip = set(exclude) | {from_id}
    best = None
    for vid in range(len(field)):
        if vid in skip:
            continue
        d2 = float((field.positions[vid, 0] - px) ** 2 + (field.positions[vid, 1] - py) ** 2)
        if d2 <= range_m * range_m and (best is None or (d2, vid) < best):
            best = (d2, vid)
    return None if best is None else best[1]


def nn_distance_pdf(n: int, intensity: AreaIntensity, r) -> np.ndarray | float:
    """Exact density of the distance to the nth neighbor in a planar PPP.

    f(r) = 2 (pi L)^n r^(2n-1) exp(-pi L r^2) / (n-1)!  with L the intensity.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"neighbor order must be a positive integer, got {n}")
    if intensity.value <= 0:
        raise ValueError("intensity must be positive")
    lam = intensity.value
    r_arr = np.asarray(r, dtype=float)
    out = (
        2.0
        * (math.pi * lam) ** n
        * np.power(r_arr, 2 * n - 1, where=r_arr > 0, out=np.zeros_like(r_arr))
        * np.exp(-math.pi * lam * r_arr**2)
        / math.factorial(n - 1)
    )
    if n == 1:
        # r^(2n-1) = r is fine at 0; the where-guard above zeroes it anyway
        out = np.where(r_arr == 0.0, 0.0, out)
    return out if out.ndim else float(out)
