"""Closed-form Gamma algebra for multi-hop relay latency.

Everything is parameterized as Gamma(shape, rate) with density
rate^shape / Gamma(shape) * x^(shape-1) * exp(-rate * x). This is the
rate convention (NOT scale); keep it in mind when comparing against
libraries that default to scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln

from .rng import make_rng


@dataclass(frozen=True)
class GammaParams:
    """Shape/rate pair. The rate's unit (per-ms, per-m, ...) is the caller's."""

    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError(f"shape and rate must be positive, got ({self.shape}, {self.rate})")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2


@dataclass(frozen=True)
class HopTime:
    """One hop's traversal time in seconds."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("hop time must be >= 0")


@dataclass(frozen=True)
class SsaLatencyLaw:
    """Per-hop law plus the closed-form law of the N-hop sum."""

    hops: int
    per_hop: GammaParams
    total: GammaParams


def gamma_pdf(params: GammaParams, x):
    """Gamma density at x >= 0 (scalar or array)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("gamma_pdf domain is x >= 0")
    k, r = params.shape, params.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = k * math.log(r) + (k - 1) * np.log(x_arr) - r * x_arr - gammaln(k)
    out = np.exp(logpdf)
    if k == 1:
        out = np.where(x_arr == 0.0, r, out)
    elif k > 1:
        out = np.where(x_arr == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def gamma_cdf(params: GammaParams, x):
    """Regularized lower incomplete gamma at rate*x."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("gamma_cdf domain is x >= 0")
    out = gammainc(params.shape, params.rate * x_arr)
    return out if out.ndim else float(out)


def gamma_ppf(params: GammaParams, q):
    """Inverse CDF for q in [0, 1)."""
    return gammaincinv(params.shape, q) / params.rate


def gamma_sample(params: GammaParams, seed, size=None):
    """Exact Gamma draws, deterministic given the seed.

    shape == 1 goes through the inverse-CDF exponential so the special case
    is exactly -log(1 - U) / rate on the seed's uniform stream.
    """
    rng = make_rng(seed)
    if params.shape == 1:
        u = rng.random(size)
        return -np.log1p(-u) / params.rate
    return rng.gamma(params.shape, 1.0 / params.rate, size)


def scale_hop(distance_law: GammaParams, speed: float) -> GammaParams:
    """Law of D / speed when D ~ Gamma(shape, rate): Gamma(shape, rate * speed)."""
    if speed <= 0:
        raise ValueError(f"speed must be positive, got {speed}")
    return GammaParams(distance_law.shape, distance_law.rate * speed)


def gamma_mgf(params: GammaParams, t: float) -> float:
    """E[e^(tX)] = (rate / (rate - t))^shape, defined for t < rate."""
    if t >= params.rate:
        raise ValueError(f"MGF diverges for t >= rate ({t} >= {params.rate})")
    log_mgf = params.shape * math.log(params.rate / (params.rate - t))
    if log_mgf > 709.0:  # exp overflow; the MGF value is effectively infinite
        return math.inf
    return (params.rate / (params.rate - t)) ** params.shape


def sum_hops_law(n_hops: int, per_hop: GammaParams) -> SsaLatencyLaw:
    """Law of the sum of n_hops i.i.d. per-hop Gammas: shapes add, rate fixed.

    Cross-checks the MGF product identity M_total(t) = M_per_hop(t)^n on a
    small t grid before returning.
    """
    if n_hops < 1 or int(n_hops) != n_hops:
        raise ValueError(f"hop count must be a positive integer, got {n_hops}")
    total = GammaParams(n_hops * per_hop.shape, per_hop.rate)
    for frac in (0.25, 0.5, 0.75):
        t = frac * per_hop.rate
        lhs = gamma_mgf(total, t)
        try:
            rhs = gamma_mgf(per_hop, t) ** n_hops
        except OverflowError:
            rhs = math.inf
        if lhs == rhs == math.inf:
            # both beyond float range; compare log-MGFs instead
            base = math.log(per_hop.rate / (per_hop.rate - t))
            lhs, rhs = total.shape * base, n_hops * per_hop.shape * base
        if not math.isclose(lhs, rhs, rel_tol=1e-9):
            raise AssertionError(f"MGF product identity violated at t={t}: {lhs} vs {rhs}")
    return SsaLatencyLaw(hops=int(n_hops), per_hop=per_hop, total=total)


def hop_time(distance: float, speed: float) -> HopTime:
    """Signal traversal time of one hop."""
    if distance < 0:
        raise ValueError("distance must be >= 0")
    if speed <= 0:
        raise ValueError("speed must be positive")
    return HopTime(distance / speed)
