"""Stochastic-geometry simulator and closed-form analytics for the latency
of building a shared situation awareness among connected vehicles."""

from .config import SsaCompletionRule, TimingModel, WorldConfig
from .coverage import CoverageEstimate, SightArc, TargetDisk, coverage_rate, min_cover_subset
from .geometry import (
    AreaIntensity,
    Position,
    VehicleField,
    WorldArea,
    count_in_disk,
    nearest_neighbor,
    nn_distance_pdf,
    sample_ppp,
)
from .latency import (
    GammaParams,
    HopTime,
    SsaLatencyLaw,
    gamma_cdf,
    gamma_mgf,
    gamma_pdf,
    gamma_sample,
    hop_time,
    scale_hop,
    sum_hops_law,
)
from .propagation import (
    EmptyDistributionError,
    Hazard,
    MobileField,
    PropagationTrace,
    Vehicle,
    run_batch,
    run_trial,
    step_mobility,
)
from .stats import (
    EmpiricalDist,
    GofReport,
    chi_square_poisson,
    empirical_cdf,
    fit_gamma_moments,
    histogram,
    ks_test,
)

__version__ = "0.1.0"
