#!/usr/bin/env python3
"""Reproduce the three headline experiments and drop their artifacts under out/.

1. thinning:  empirical count histogram in a transmission-range disk vs the
   Poisson law predicted by independent thinning.
2. fig_latency: simulated end-to-end relay latency for a 4-hop completion rule
   vs the closed-form Gamma(4, 1/50 ms^-1) law.
3. sweep: latency quantiles and per-use-case feasibility across the default
   vehicle density grid at desk scale.

Usage: python3 scripts/reproduce_figures.py [--out out] [--trials N]
"""
import argparse
import json
import sys
from pathlib import Path

from ssasim.cli import main as cli_main
from ssasim.config import SsaCompletionRule, TimingModel, WorldConfig, save_config
from ssasim.latency import GammaParams


def thinning_config(trials: int) -> WorldConfig:
    return WorldConfig(trials=trials, seed=101)


def latency_config(trials: int) -> WorldConfig:
    # 60 vehicles on 300x300 m, per-hop Gamma(1, 1/50) in ms, done after 5
    # vehicles (4 hops) are informed; total law is then Gamma(4, 1/50).
    return WorldConfig(
        width_m=300.0,
        depth_m=300.0,
        intensity_per_m2=60 / 9e4,
        tx_range_m=100.0,
        timing=TimingModel(mode="distance", hop_law_ms=GammaParams(1.0, 1 / 50)),
        rule=SsaCompletionRule(kind="n_vehicles_informed", n=5),
        trials=trials,
        seed=202,
    )


def sweep_config(trials: int) -> WorldConfig:
    return WorldConfig(
        tx_range_m=75.0,
        timing=TimingModel(mode="distance", signal_speed_mps=500.0),
        rule=SsaCompletionRule(kind="n_vehicles_informed", n=20),
        trials=trials,
        seed=303,
    )


def run(out_root: Path, trials: int) -> int:
    out_root.mkdir(parents=True, exist_ok=True)
    worst = 0

    cfg_path = out_root / "thinning_config.json"
    save_config(thinning_config(max(trials, 2000)), cfg_path)
    worst = max(worst, cli_main(["thinning", "--config", str(cfg_path), "--out", str(out_root / "thinning")]))

    cfg_path = out_root / "latency_config.json"
    save_config(latency_config(trials), cfg_path)
    worst = max(worst, cli_main(["simulate", "--config", str(cfg_path), "--out", str(out_root / "fig_latency")]))

    cfg_path = out_root / "sweep_config.json"
    save_config(sweep_config(max(trials // 4, 100)), cfg_path)
    worst = max(
        worst,
        cli_main(["sweep", "--config", str(cfg_path), "--out", str(out_root / "sweep"), "--scale", "desk"]),
    )

    summary = {
        name: json.loads((out_root / name / "report.json").read_text())
        for name in ("thinning", "fig_latency", "sweep")
    }
    (out_root / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"artifacts under {out_root}/ (thinning, fig_latency, sweep, summary.json)")
    return worst


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--trials", type=int, default=4000)
    args = parser.parse_args()
    sys.exit(run(args.out, args.trials))
