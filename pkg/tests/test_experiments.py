import json

import pytest

from pmlab import experiments
from pmlab.errors import BadParam


def rate_config(**overrides):
    cfg = {
        "name": "tiny-rate", "scenario": "rate",
        "channel": {"type": "bsc", "p": 0.2}, "flavor": "cdf1d",
        "seed": 1, "eps": 0.1, "n_max": 100, "trials": 3,
    }
    cfg.update(overrides)
    return cfg


class TestConfigValidation:
    def test_accepts_minimal(self):
        cfg = experiments.validate_config(rate_config())
        assert cfg["eps"] == 0.1

    def test_fills_defaults(self):
        cfg = {"name": "x", "scenario": "rate",
               "channel": {"type": "bsc", "p": 0.2}, "flavor": "cdf1d",
               "seed": 3}
        assert experiments.validate_config(cfg)["trials"] == 20

    def test_rejects_unknown_fields(self):
        with pytest.raises(BadParam):
            experiments.validate_config(rate_config(bogus=1))

    def test_rejects_missing_seed(self):
        cfg = rate_config()
        del cfg["seed"]
        with pytest.raises(BadParam):
            experiments.validate_config(cfg)

    def test_rejects_bad_channel(self):
        with pytest.raises(BadParam):
            experiments.validate_config(rate_config(channel={"type": "zzz"}))

    def test_rejects_bad_eps(self):
        with pytest.raises(BadParam):
            experiments.validate_config(rate_config(eps=0.7))

    def test_prior_scenario_needs_prior(self):
        cfg = rate_config(scenario="prior-sensitivity")
        with pytest.raises(BadParam):
            experiments.validate_config(cfg)


class TestRunArtifacts:
    def test_rate_run_writes_everything(self, tmp_path):
        out = tmp_path / "run"
        summary = experiments.run_experiment(rate_config(), out)
        assert (out / "trace.csv").exists()
        assert (out / "plot.svg").exists()
        disk = json.loads((out / "summary.json").read_text())
        assert disk["mean_rate_bits"] == summary["mean_rate_bits"]
        assert disk["capacity_bits"] == pytest.approx(0.278071905113)
        assert abs(summary["mean_rate_bits"] - 0.278) < 0.15

    def test_replay_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        experiments.run_experiment(rate_config(), a)
        experiments.run_experiment(rate_config(), b)
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
        assert (a / "plot.svg").read_bytes() == (b / "plot.svg").read_bytes()

    def test_different_seed_changes_trace(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        experiments.run_experiment(rate_config(), a)
        experiments.run_experiment(rate_config(seed=2), b)
        assert (a / "trace.csv").read_bytes() != (b / "trace.csv").read_bytes()

    def test_bit_error_run(self, tmp_path):
        cfg = rate_config(scenario="bit-error", n_max=200, trials=5,
                          rate_factor=0.5)
        summary = experiments.run_experiment(cfg, tmp_path / "be")
        assert summary["block_bits"] == round(0.5 * 0.27807190511263774 * 200)
        assert 0.0 <= summary["error_rate"] <= 1.0

    def test_prior_run(self, tmp_path):
        cfg = rate_config(scenario="prior-sensitivity", n_max=50, trials=3)
        cfg["prior"] = {"breakpoints": [0.0, 0.5, 1.0],
                       "densities": [1.5, 0.5]}
        summary = experiments.run_experiment(cfg, tmp_path / "pr")
        assert summary["final_tv"] < 0.25

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(BadParam):
            experiments.load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        with pytest.raises(BadParam):
            experiments.load_config(bad)


class TestShippedConfigs:
    def test_all_shipped_configs_validate(self):
        import glob
        import os
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        paths = sorted(glob.glob(os.path.join(root, "*.json")))
        assert len(paths) >= 10
        for p in paths:
            experiments.validate_config(experiments.load_config(p))
