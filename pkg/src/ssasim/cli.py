"""Experiment orchestration and the ``ssasim`` command-line interface.

Subcommands: analytic, simulate, sweep, coverage, thinning. CSV files are
the contract (headers name units); SVG charts are emitted alongside as a
convenience. Exit codes: 0 success, 1 runtime/statistical warning, 2
invalid config or arguments.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import stats as st
from .config import WorldConfig, load_config
from .geometry import AreaIntensity, Position, WorldArea, clipped_disk_area, count_in_disk, sample_ppp
from .latency import GammaParams, gamma_cdf, gamma_pdf, gamma_ppf, sum_hops_law
from .propagation import EmptyDistributionError, run_batch
from .rng import trial_seed

EXIT_OK = 0
EXIT_WARN = 1
EXIT_CONFIG = 2

STALL_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class SaeRequirement:
    use_case: str
    latency_ms: float

    def __post_init__(self):
        if self.latency_ms <= 0:
            raise ValueError("latency threshold must be positive")


# SAE J2735 safety-application latency requirements, in milliseconds.
SAE_REQUIREMENTS = (
    SaeRequirement("forward_collision_warning", 100.0),
    SaeRequirement("emergency_stop", 100.0),
    SaeRequirement("cooperative_collision_avoidance", 100.0),
    SaeRequirement("see_through", 50.0),
    SaeRequirement("pre_crash_sensing_warning", 20.0),
    SaeRequirement("automated_overtake", 10.0),
    SaeRequirement("high_density_platooning", 10.0),
)

# Density sweep used for the CDF-vs-density experiment, in vehicles/m^2.
DEFAULT_DENSITY_GRID = (1 / 110, 1 / 90, 1 / 70, 1 / 50, 1 / 30, 1 / 10)


@dataclass(frozen=True)
class DensityGrid:
    intensities: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.intensities)
        if not vals or any(v <= 0 for v in vals):
            raise ValueError("density grid must be nonempty and positive")
        diffs = np.diff(vals)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("density grid must be strictly ordered")
        object.__setattr__(self, "intensities", vals)

    def ascending(self) -> tuple:
        return tuple(sorted(self.intensities))


def density_to_line_equivalent(intensity_per_m2: float) -> float:
    """Vehicles per 1-km line segment equivalent to an areal density:
    the square root of the expected count in a 1 km x 1 km region."""
    if intensity_per_m2 < 0:
        raise ValueError("intensity must be >= 0")
    return math.sqrt(intensity_per_m2 * 1e6)


def analytic_table(per_hop: GammaParams, n_hops: int, x_max: float | None = None, points: int = 512):
    """(x, pdf, cdf) arrays for the N-hop total law Gamma(N*shape, rate)."""
    law = sum_hops_law(n_hops, per_hop).total
    if x_max is None:
        x_max = float(gamma_ppf(law, 0.9999))
    x = np.linspace(0.0, x_max, points)
    return x, gamma_pdf(law, x), gamma_cdf(law, x), law


def _write_csv(path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _save_svg(path, draw) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------- analytic


def cmd_analytic(args) -> int:
    try:
        per_hop = GammaParams(args.shape, args.rate)
        x, pdf, cdf, law = analytic_table(per_hop, args.hops, args.x_max, args.points)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    _write_csv(out, "x,pdf,cdf", zip(x.tolist(), pdf.tolist(), cdf.tolist()))
    _save_svg(out.with_suffix(".svg"), lambda ax: (ax.plot(x, pdf), ax.set_xlabel("latency"), ax.set_ylabel("density")))
    print(f"wrote {out} for Gamma({law.shape:g}, {law.rate:g})")
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def analytic_law_for(config: WorldConfig) -> GammaParams | None:
    """Closed-form latency law implied by the config, when one exists:
    a per-hop Gamma law in distance mode with an informed-count rule."""
    t, r = config.timing, config.rule
    if t.mode == "distance" and t.hop_law_ms is not None and r.kind == "n_vehicles_informed" and r.n >= 2:
        return sum_hops_law(r.n - 1, t.hop_law_ms).total
    return None


def run_simulate(config: WorldConfig, workers: int = 1):
    """run_batch plus fit and GOF against the analytic law (if derivable)."""
    dist, stall_fraction = run_batch(config, workers=workers)
    law = analytic_law_for(config)
    fitted = st.fit_gamma_moments(dist) if len(dist) > 1 and float(np.var(dist.samples)) > 0 else None
    ks = None
    ks_target = law if law is not None else fitted
    if ks_target is not None and len(dist) >= 10:
        ks = st.ks_test(dist, ks_target)
    return dist, stall_fraction, law, fitted, ks


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    config = _apply_overrides(config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        dist, stall_fraction, law, fitted, ks = run_simulate(config, workers=args.workers)
    except EmptyDistributionError as exc:
        report = {"trials": config.trials, "stall_fraction": 1.0, "samples": 0, "error": str(exc)}
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        print(f"warning: {exc}", file=sys.stderr)
        return EXIT_WARN

    st.save_samples_csv(dist, out / "samples.csv")
    edges, dens = st.histogram(dist, bins=args.bins)
    _write_csv(
        out / "histogram.csv",
        f"bin_left_{dist.unit},bin_right_{dist.unit},density",
        zip(edges[:-1].tolist(), edges[1:].tolist(), dens.tolist()),
    )
    report = {
        "trials": config.trials,
        "samples": len(dist),
        "unit": dist.unit,
        "stall_fraction": stall_fraction,
        "analytic_law": None if law is None else {"shape": law.shape, "rate": law.rate},
        "fitted_law": None if fitted is None else {"shape": fitted.shape, "rate": fitted.rate},
        "ks": None if ks is None else {"D": ks.statistic, "p_value": ks.p_value, "reject_at_01": ks.reject_at_01},
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")

    def draw(ax):
        mids = 0.5 * (edges[:-1] + edges[1:])
        ax.bar(mids, dens, width=edges[1] - edges[0], alpha=0.5, label="simulation")
        if law is not None:
            xs = np.linspace(0, edges[-1], 400)
            ax.plot(xs, gamma_pdf(law, xs), "k-", label=f"Gamma({law.shape:g}, {law.rate:g})")
        ax.set_xlabel(f"latency ({dist.unit})")
        ax.set_ylabel("density")
        ax.legend()

    _save_svg(out / "pdf.svg", draw)
    print(f"wrote {out}/samples.csv ({len(dist)} samples, stall fraction {stall_fraction:.3g})")
    return EXIT_WARN if stall_fraction > STALL_WARN_FRACTION else EXIT_OK


# ---------------------------------------------------------------- sweep


def run_sweep(config: WorldConfig, grid: DensityGrid, workers: int = 1):
    """Batch per density; per-density quantiles, stall fractions, and SAE
    feasibility fractions (the ECDF evaluated at each threshold)."""
    results = []
    for lam in grid.ascending():
        # common random numbers across densities: every density batch runs
        # from the same root seed, which also makes a single-density sweep
        # identical to a plain simulate run
        cfg = replace(config, intensity_per_m2=lam)
        dist, stall = run_batch(cfg, workers=workers)
        feas = {req.use_case: float(st.empirical_cdf(dist, req.latency_ms)) for req in SAE_REQUIREMENTS}
        results.append(
            {
                "intensity_per_m2": lam,
                "line_equivalent_per_km": density_to_line_equivalent(lam),
                "dist": dist,
                "stall_fraction": stall,
                "quantiles_ms": {q: st.quantile(dist, q) for q in (0.25, 0.5, 0.75)},
                "feasibility": feas,
            }
        )
    return results


def sweep_checks(results) -> dict:
    """Quantile/feasibility ordering across ascending densities."""
    out = {}
    for q in (0.25, 0.5, 0.75):
        vals = [r["quantiles_ms"][q] for r in results]
        out[f"quantile_{q}_nonincreasing"] = all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    feas100 = [r["feasibility"]["forward_collision_warning"] for r in results]
    out["feasibility_100ms_nondecreasing"] = all(b >= a - 1e-12 for a, b in zip(feas100, feas100[1:]))
    return out


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    config = _apply_overrides(config, args)
    if args.scale == "desk":
        config = replace(config, width_m=200.0, depth_m=200.0)
    grid = DensityGrid(tuple(float(v) for v in args.grid.split(","))) if args.grid else DensityGrid(DEFAULT_DENSITY_GRID)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        results = run_sweep(config, grid, workers=args.workers)
    except EmptyDistributionError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return EXIT_WARN

    for r in results:
        tag = f"{r['intensity_per_m2']:.6g}".replace("/", "_")
        samples = r["dist"].samples
        cdf = np.arange(1, samples.size + 1) / samples.size
        _write_csv(out / f"cdf_lambda_{tag}.csv", "latency_ms,cdf", zip(samples.tolist(), cdf.tolist()))
    _write_csv(
        out / "quantiles.csv",
        "intensity_per_m2,line_equivalent_per_km,q25_ms,q50_ms,q75_ms,stall_fraction",
        (
            (
                r["intensity_per_m2"],
                r["line_equivalent_per_km"],
                r["quantiles_ms"][0.25],
                r["quantiles_ms"][0.5],
                r["quantiles_ms"][0.75],
                r["stall_fraction"],
            )
            for r in results
        ),
    )
    _write_csv(
        out / "feasibility.csv",
        "use_case,threshold_ms,intensity_per_m2,feasible_fraction",
        (
            (req.use_case, req.latency_ms, r["intensity_per_m2"], r["feasibility"][req.use_case])
            for req in SAE_REQUIREMENTS
            for r in results
        ),
    )
    checks = sweep_checks(results)
    (out / "report.json").write_text(json.dumps(checks, indent=2) + "\n")

    def draw(ax):
        for r in results:
            s = r["dist"].samples
            ax.plot(s, np.arange(1, s.size + 1) / s.size, label=f"λ={r['intensity_per_m2']:.4g}/m²")
        for req_ms in sorted({req.latency_ms for req in SAE_REQUIREMENTS}):
            ax.axvline(req_ms, color="gray", lw=0.5, ls="--")
        ax.set_xlabel("latency (ms)")
        ax.set_ylabel("CDF")
        ax.legend(fontsize=7)

    _save_svg(out / "sweep.svg", draw)
    ok = all(checks.values())
    max_stall = max(r["stall_fraction"] for r in results)
    print(f"wrote sweep to {out} (ordering checks {'pass' if ok else 'FAIL'})")
    return EXIT_OK if ok and max_stall <= STALL_WARN_FRACTION else EXIT_WARN


# ---------------------------------------------------------------- coverage


def load_scenario(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    t = data["target"]
    target = cov.TargetDisk(Position(t["x"], t["y"]), t["radius"])
    arcs = [
        cov.SightArc(Position(a["x"], a["y"]), a["heading"], a["half_angle"], a["radius"])
        for a in data.get("arcs", [])
    ]
    return arcs, target, data


def cmd_coverage(args) -> int:
    try:
        arcs, target, data = load_scenario(args.scenario)
    except (KeyError, ValueError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sample_points = int(data.get("sample_points", 100_000))
    seed = int(data.get("seed", args.seed))
    estimate = cov.coverage_rate(arcs, target, sample_points, seed)
    report = {
        "rate": estimate.rate,
        "std_err": estimate.std_err,
        "sample_points": estimate.sample_points,
        "subset": None,
    }
    threshold = data.get("min_cover_threshold", args.min_cover)
    if threshold is not None:
        subset = cov.min_cover_subset(arcs, target, float(threshold), sample_points, seed)
        report["subset"] = None if subset is None else list(subset)
    Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    print(f"coverage rate {estimate.rate:.4f} ± {estimate.std_err:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- thinning


def run_thinning(config: WorldConfig, n_seeds: int | None = None, center: Position | None = None):
    """Counts in a tx-range disk over many seeded fields vs Poisson(rho * mean).

    The disk is clipped at the world edge; rho uses the clipped area.
    """
    n_seeds = config.trials if n_seeds is None else n_seeds
    area = WorldArea(config.width_m, config.depth_m)
    center = center or Position(config.width_m / 2.0, config.depth_m / 2.0)
    rho = clipped_disk_area(area, center, config.tx_range_m) / area.area()
    mean = rho * config.intensity_per_m2 * area.area()
    intensity = AreaIntensity(config.intensity_per_m2)
    counts = np.empty(n_seeds, dtype=np.int64)
    for i in range(n_seeds):
        field = sample_ppp(intensity, area, trial_seed(config.seed, i), cell_size=config.tx_range_m)
        counts[i] = count_in_disk(field, center, config.tx_range_m)
    report = st.chi_square_poisson(counts, mean)
    return counts, mean, rho, report


def cmd_thinning(args) -> int:
    config = load_config(args.config)
    config = _apply_overrides(config, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    counts, mean, rho, report = run_thinning(config)
    from scipy.stats import poisson as _poisson

    kmax = int(counts.max())
    ks = np.arange(kmax + 1)
    observed = np.bincount(counts, minlength=kmax + 1) / counts.size
    pmf = _poisson.pmf(ks, mean)
    _write_csv(out / "counts.csv", "k,observed_fraction,poisson_pmf", zip(ks.tolist(), observed.tolist(), pmf.tolist()))
    (out / "report.json").write_text(
        json.dumps(
            {
                "rho": rho,
                "mean": mean,
                "seeds": counts.size,
                "chi_square": report.statistic,
                "p_value": report.p_value,
                "reject_at_01": report.reject_at_01,
            },
            indent=2,
        )
        + "\n"
    )

    def draw(ax):
        ax.bar(ks, observed, alpha=0.5, label="sampled")
        ax.plot(ks, pmf, "ko-", ms=3, label=f"Poisson({mean:.3g})")
        ax.set_xlabel("vehicles in transmission disk")
        ax.set_ylabel("probability")
        ax.legend()

    _save_svg(out / "thinning.svg", draw)
    print(f"thinning check: p = {report.p_value:.4f} over {counts.size} seeds")
    return EXIT_OK if not report.reject_at_01 else EXIT_WARN


# ---------------------------------------------------------------- wiring


def _apply_overrides(config: WorldConfig, args) -> WorldConfig:
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        config = replace(config, trials=args.trials)
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssasim", description="SSA latency simulator and analytics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="PDF/CDF table of the N-hop Gamma law")
    p.add_argument("--shape", type=float, required=True, help="per-hop Gamma shape")
    p.add_argument("--rate", type=float, required=True, help="per-hop Gamma rate")
    p.add_argument("--hops", type=int, default=1)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analytic)

    for name, fn in (("simulate", cmd_simulate), ("sweep", cmd_sweep), ("thinning", cmd_thinning)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config (WorldConfig schema)")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        if name == "simulate":
            p.add_argument("--bins", type=int, default=40)
        if name == "sweep":
            p.add_argument("--grid", default=None, help="comma-separated intensities per m^2")
            p.add_argument("--scale", choices=("desk", "full"), default="desk")
        p.set_defaults(func=fn)

    p = sub.add_parser("coverage", help="coverage rate of a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-cover", type=float, default=None)
    p.set_defaults(func=cmd_coverage)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
