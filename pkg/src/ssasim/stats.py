"""Empirical-distribution machinery: ECDF, histograms, fits, GOF tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import chi2 as _chi2
from scipy.stats import poisson as _poisson

from .latency import GammaParams, gamma_cdf


@dataclass(frozen=True)
class EmpiricalDist:
    """Sorted nonnegative samples with a declared time unit."""

    samples: np.ndarray
    unit: str = "ms"

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        if s[0] < 0:
            raise ValueError("samples must be nonnegative")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class GofReport:
    statistic: float
    p_value: float
    n: int
    reject_at_01: bool

    @classmethod
    def from_stat(cls, statistic: float, p_value: float, n: int) -> "GofReport":
        p = float(min(1.0, max(0.0, p_value)))
        return cls(float(statistic), p, int(n), p < 0.01)


def empirical_cdf(dist: EmpiricalDist, x):
    """Right-continuous ECDF: fraction of samples <= x."""
    x_arr = np.asarray(x, dtype=float)
    out = np.searchsorted(dist.samples, x_arr, side="right") / len(dist)
    return out if out.ndim else float(out)


def quantile(dist: EmpiricalDist, q: float) -> float:
    return float(np.quantile(dist.samples, q))


def histogram(dist: EmpiricalDist, bins: int):
    """Equal-width bins over [0, max]; densities integrate to 1."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    hi = float(dist.samples[-1])
    if hi <= 0:
        hi = 1.0
    dens, edges = np.histogram(dist.samples, bins=bins, range=(0.0, hi), density=True)
    return edges, dens


def ks_test(dist: EmpiricalDist, law: GammaParams) -> GofReport:
    """One-sample Kolmogorov–Smirnov against a Gamma law.

    p-value from the asymptotic Kolmogorov distribution; callers are
    expected to bring n >= 1e3 for it to be trustworthy.
    """
    n = len(dist)
    if n < 10:
        raise ValueError(f"ks_test needs at least 10 samples, got {n}")
    f = gamma_cdf(law, dist.samples)
    i = np.arange(1, n + 1)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    d = max(d_plus, d_minus)
    return GofReport.from_stat(d, kolmogorov_sf(math.sqrt(n) * d), n)


def kolmogorov_sf(x: float) -> float:
    """Survival function of the Kolmogorov distribution, 2*sum (-1)^(j-1) e^(-2 j^2 x^2)."""
    if x <= 0.05:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * x * x)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, total))


def chi_square_poisson(counts, mean: float) -> GofReport:
    """Chi-square GOF of integer counts against Poisson(mean).

    Bins are pooled from both tails until every expected count is >= 5;
    degrees of freedom = pooled bins - 1 (the mean is given, not fitted).
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size == 0:
        raise ValueError("chi_square_poisson needs a nonempty count collection")
    if mean <= 0:
        raise ValueError("mean must be positive")
    n = counts.size
    kmax = int(counts.max())
    ks = np.arange(kmax + 1)
    probs = _poisson.pmf(ks, mean)
    probs = np.append(probs, max(0.0, 1.0 - probs.sum()))  # tail bin k > kmax
    observed = np.append(np.bincount(counts, minlength=kmax + 1), 0)
    expected = probs * n

    obs_p, exp_p = _pool_bins(observed, expected, min_expected=5.0)
    if len(obs_p) < 2:
        raise ValueError("too few samples to form at least two pooled bins")
    stat = float(np.sum((obs_p - exp_p) ** 2 / exp_p))
    dof = len(obs_p) - 1
    return GofReport.from_stat(stat, float(_chi2.sf(stat, dof)), n)


def _pool_bins(observed, expected, min_expected: float):
    obs = list(np.asarray(observed, dtype=float))
    exp = list(np.asarray(expected, dtype=float))
    # pool from the right tail inward, then the left
    while len(exp) > 1 and exp[-1] < min_expected:
        e, o = exp.pop(), obs.pop()
        exp[-1] += e
        obs[-1] += o
    while len(exp) > 1 and exp[0] < min_expected:
        e, o = exp.pop(0), obs.pop(0)
        exp[0] += e
        obs[0] += o
    return np.asarray(obs), np.asarray(exp)


def fit_gamma_moments(dist: EmpiricalDist) -> GammaParams:
    """Method-of-moments Gamma fit: shape = m^2/v, rate = m/v."""
    m = float(np.mean(dist.samples))
    v = float(np.var(dist.samples, ddof=1)) if len(dist) > 1 else 0.0
    if v <= 0:
        raise ValueError("degenerate distribution: zero variance")
    return GammaParams(shape=m * m / v, rate=m / v)


def save_samples_csv(dist: EmpiricalDist, path) -> None:
    """One value per line, header names the unit."""
    path = Path(path)
    lines = [f"latency_{dist.unit}"]
    lines.extend(repr(float(s)) for s in dist.samples)
    path.write_text("\n".join(lines) + "\n")


def load_samples_csv(path) -> EmpiricalDist:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0]
    if not header.startswith("latency_"):
        raise ValueError(f"unrecognized samples header: {header!r}")
    unit = header[len("latency_") :]
    return EmpiricalDist(np.asarray([float(v) for v in lines[1:]]), unit=unit)
