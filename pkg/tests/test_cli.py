import json
import math

import numpy as np
import pytest

from ssasim.cli import (
    DEFAULT_DENSITY_GRID,
    SAE_REQUIREMENTS,
    DensityGrid,
    SaeRequirement,
    analytic_law_for,
    density_to_line_equivalent,
    main,
)
from ssasim.config import SsaCompletionRule, TimingModel, WorldConfig, save_config
from ssasim.latency import GammaParams
from ssasim.stats import load_samples_csv


def fig4_config(trials=200, seed=42):
    return WorldConfig(
        width_m=300.0,
        depth_m=300.0,
        intensity_per_m2=60 / 9e4,
        tx_range_m=100.0,
        timing=TimingModel(mode="distance", hop_law_ms=GammaParams(1.0, 1 / 50)),
        rule=SsaCompletionRule(kind="n_vehicles_informed", n=5),
        trials=trials,
        seed=seed,
    )


class TestSaeTable:
    def test_thresholds(self):
        by_case = {r.use_case: r.latency_ms for r in SAE_REQUIREMENTS}
        assert by_case["forward_collision_warning"] == 100.0
        assert by_case["emergency_stop"] == 100.0
        assert by_case["cooperative_collision_avoidance"] == 100.0
        assert by_case["see_through"] == 50.0
        assert by_case["pre_crash_sensing_warning"] == 20.0
        assert by_case["automated_overtake"] == 10.0
        assert by_case["high_density_platooning"] == 10.0

    def test_invalid_threshold(self):
        with pytest.raises(ValueError):
            SaeRequirement("x", 0.0)


class TestDensityGrid:
    def test_default_matches_sweep_densities(self):
        assert set(DEFAULT_DENSITY_GRID) == {1 / 10, 1 / 30, 1 / 50, 1 / 70, 1 / 90, 1 / 110}

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            DensityGrid((0.1, 0.3, 0.2))
        with pytest.raises(ValueError):
            DensityGrid(())


class TestDensityToLineEquivalent:
    @pytest.mark.parametrize(
        "lam,expect",
        [(1 / 10, 316.23), (1 / 30, 182.5741), (1 / 50, 141.4215), (1 / 70, 119.5228), (1 / 90, 105.4092), (1 / 110, 95.3462)],
    )
    def test_published_grid(self, lam, expect):
        assert density_to_line_equivalent(lam) == pytest.approx(expect, abs=0.01)

    def test_unit_density(self):
        assert density_to_line_equivalent(1.0) == pytest.approx(1000.0)


class TestAnalyticCommand:
    def test_table_peaks_at_150(self, tmp_path):
        out = tmp_path / "analytic.csv"
        code = main(["analytic", "--shape", "1", "--rate", "0.02", "--hops", "4", "--out", str(out)])
        assert code == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        x, pdf, cdf = rows[:, 0], rows[:, 1], rows[:, 2]
        assert abs(x[np.argmax(pdf)] - 150.0) < 5.0
        assert np.all(np.diff(cdf) >= -1e-15)
        assert cdf[0] == 0.0 and cdf[-1] > 0.999

    def test_single_hop_is_per_hop_law(self, tmp_path):
        out = tmp_path / "one.csv"
        assert main(["analytic", "--shape", "1", "--rate", "0.1", "--hops", "1", "--out", str(out)]) == 0
        rows = np.loadtxt(out, delimiter=",", skiprows=1)
        assert rows[0, 1] == pytest.approx(0.1)  # exponential pdf at 0

    def test_invalid_rate_exit_2(self, tmp_path):
        assert main(["analytic", "--shape", "1", "--rate", "-1", "--out", str(tmp_path / "x.csv")]) == 2


class TestSimulateCommand:
    def test_writes_artifacts_and_ks(self, tmp_path):
        cfg = fig4_config(trials=400)
        save_config(cfg, tmp_path / "cfg.json")
        out = tmp_path / "sim"
        code = main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["analytic_law"] == {"shape": 4.0, "rate": 1 / 50}
        assert not report["ks"]["reject_at_01"]
        dist = load_samples_csv(out / "samples.csv")
        assert dist.unit == "ms"
        assert len(dist) == report["samples"]
        assert (out / "histogram.csv").exists() and (out / "pdf.svg").exists()

    def test_single_trial(self, tmp_path):
        save_config(fig4_config(trials=1), tmp_path / "cfg.json")
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(out)]) == 0
        assert len(load_samples_csv(out / "samples.csv")) == 1

    def test_impossible_config_warns(self, tmp_path):
        cfg = WorldConfig(
            intensity_per_m2=0.0,
            rule=SsaCompletionRule(kind="n_vehicles_informed", n=2),
            trials=5,
            speed_range_mps=(0.0, 0.0),
        )
        save_config(cfg, tmp_path / "cfg.json")
        code = main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "sim")])
        assert code == 1
        report = json.loads((tmp_path / "sim" / "report.json").read_text())
        assert report["stall_fraction"] == 1.0

    def test_malformed_config_exit_2(self, tmp_path):
        (tmp_path / "cfg.json").write_text('{"bogus_key": 1}')
        assert main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "o")]) == 2

    def test_deterministic_bytes(self, tmp_path):
        save_config(fig4_config(trials=60), tmp_path / "cfg.json")
        for name in ("a", "b"):
            main(["simulate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / name)])
        assert (tmp_path / "a" / "samples.csv").read_bytes() == (tmp_path / "b" / "samples.csv").read_bytes()


def sweep_config(trials=40, seed=3):
    return WorldConfig(
        tx_range_m=75.0,
        timing=TimingModel(mode="distance", signal_speed_mps=500.0),
        rule=SsaCompletionRule(kind="n_vehicles_informed", n=8),
        trials=trials,
        seed=seed,
    )


class TestSweepCommand:
    def test_writes_tables(self, tmp_path):
        save_config(sweep_config(), tmp_path / "cfg.json")
        out = tmp_path / "sw"
        code = main(
            ["sweep", "--config", str(tmp_path / "cfg.json"), "--out", str(out), "--grid", "0.01,0.02,0.05", "--scale", "desk"]
        )
        assert code in (0, 1)
        feas = (out / "feasibility.csv").read_text().splitlines()
        assert feas[0] == "use_case,threshold_ms,intensity_per_m2,feasible_fraction"
        assert len(feas) == 1 + len(SAE_REQUIREMENTS) * 3
        quant = (out / "quantiles.csv").read_text().splitlines()
        assert len(quant) == 4
        assert (out / "sweep.svg").exists()

    def test_single_density_matches_simulate(self, tmp_path):
        cfg = sweep_config()
        lam = 0.02
        save_config(cfg, tmp_path / "cfg.json")
        out_sw = tmp_path / "sw"
        main(["sweep", "--config", str(tmp_path / "cfg.json"), "--out", str(out_sw), "--grid", str(lam), "--scale", "desk"])
        from dataclasses import replace

        from ssasim.propagation import run_batch

        dist, _ = run_batch(replace(cfg, intensity_per_m2=lam, width_m=200.0, depth_m=200.0))
        cdf_files = list(out_sw.glob("cdf_lambda_*.csv"))
        assert len(cdf_files) == 1
        rows = np.loadtxt(cdf_files[0], delimiter=",", skiprows=1)
        assert np.allclose(rows[:, 0], dist.samples)

    def test_feasibility_equals_ecdf_at_thresholds(self, tmp_path):
        from ssasim.cli import run_sweep
        from ssasim.stats import empirical_cdf

        results = run_sweep(sweep_config(trials=30), DensityGrid((0.02, 0.05)))
        for r in results:
            for req in SAE_REQUIREMENTS:
                assert r["feasibility"][req.use_case] == empirical_cdf(r["dist"], req.latency_ms)


class TestCoverageCommand:
    def test_scenario_roundtrip(self, tmp_path):
        scen = {
            "target": {"x": 0, "y": 0, "radius": 75},
            "arcs": [
                {"x": -60, "y": -20, "heading": 0.3, "half_angle": math.pi / 3, "radius": 75},
                {"x": 50, "y": -55, "heading": 2.2, "half_angle": math.pi / 4, "radius": 75},
                {"x": 10, "y": 70, "heading": -1.8, "half_angle": math.pi / 3, "radius": 75},
            ],
            "sample_points": 20000,
            "seed": 4,
        }
        (tmp_path / "scen.json").write_text(json.dumps(scen))
        out = tmp_path / "cov.json"
        assert main(["coverage", "--scenario", str(tmp_path / "scen.json"), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert 0.0 < report["rate"] < 1.0

    def test_empty_scenario_rate_zero(self, tmp_path):
        scen = {"target": {"x": 0, "y": 0, "radius": 75}, "arcs": [], "sample_points": 2000}
        (tmp_path / "scen.json").write_text(json.dumps(scen))
        out = tmp_path / "cov.json"
        assert main(["coverage", "--scenario", str(tmp_path / "scen.json"), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["rate"] == 0.0

    def test_full_containment_with_subset(self, tmp_path):
        scen = {
            "target": {"x": 0, "y": 0, "radius": 50},
            "arcs": [{"x": 0, "y": 0, "heading": 0.0, "half_angle": math.pi, "radius": 60}],
            "sample_points": 5000,
            "min_cover_threshold": 1.0,
        }
        (tmp_path / "scen.json").write_text(json.dumps(scen))
        out = tmp_path / "cov.json"
        assert main(["coverage", "--scenario", str(tmp_path / "scen.json"), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["rate"] == 1.0
        assert report["subset"] == [0]

    def test_bad_scenario_exit_2(self, tmp_path):
        (tmp_path / "scen.json").write_text('{"arcs": []}')
        assert main(["coverage", "--scenario", str(tmp_path / "scen.json"), "--out", str(tmp_path / "o.json")]) == 2


class TestThinningCommand:
    def test_interior_disk_passes(self, tmp_path):
        save_config(WorldConfig(trials=3000, seed=4), tmp_path / "cfg.json")
        out = tmp_path / "thin"
        code = main(["thinning", "--config", str(tmp_path / "cfg.json"), "--out", str(out)])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["p_value"] > 0.01
        assert report["rho"] == pytest.approx(math.pi * 100**2 / 1e6)
        lines = (out / "counts.csv").read_text().splitlines()
        assert lines[0] == "k,observed_fraction,poisson_pmf"


def test_analytic_law_for_requires_distance_hop_law():
    assert analytic_law_for(fig4_config()) == GammaParams(4.0, 1 / 50)
    assert analytic_law_for(WorldConfig()) is None
