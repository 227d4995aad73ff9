import json

import pytest

from src.config import MAX_SEED, BnnExperimentConfig, ExperimentConfig, GaussSamplingConfig, ToyConfig
from src.core.errors import ConfigError


class TestExperimentConfig:
    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.experiment == "toy1d"
        assert cfg.seed == 0
        assert not cfg.record_wallclock

    def test_sections_from_dict(self):
        cfg = ExperimentConfig.from_dict(
            {
                "experiment": "svgd-gauss",
                "seed": 3,
                "hklearn": {"alpha": 1.0, "beta": 5.0, "lambda": 0.1},
                "svgd": {"step_size": 0.05, "iterations": 500},
            }
        )
        assert cfg.hklearn.lam == 0.1
        assert cfg.svgd.iterations == 500
        assert cfg.to_dict()["hklearn"]["lambda"] == 0.1

    def test_dict_round_trip(self):
        cfg = ExperimentConfig(experiment="gan2d", seed=7, gan_target="gaussian")
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize(
        "record",
        [
            {"experiments": "toy1d"},
            {"hklearn": {"gamma": 1.0}},
            {"svgd": [1, 2]},
            {"experiment": "mcmc"},
            {"gan_target": "spiral"},
        ],
    )
    def test_invalid_documents(self, record):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(record)

    @pytest.mark.parametrize("seed", [-1, MAX_SEED + 1, True, 1.5])
    def test_seed_range(self, seed):
        with pytest.raises(ConfigError):
            ExperimentConfig(seed=seed)

    def test_largest_seed(self):
        assert ExperimentConfig(seed=MAX_SEED).seed == MAX_SEED

    def test_overrides_ignore_none(self, tmp_path):
        cfg = ExperimentConfig(seed=4).with_overrides(experiment="svgd-bnn", out_dir=tmp_path)
        assert (cfg.experiment, cfg.seed, cfg.out_dir) == ("svgd-bnn", 4, str(tmp_path))

    def test_overrides_are_validated(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(seed=-3)


class TestConfigFile:
    def test_from_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"experiment": "gan2d", "seed": 2}))
        cfg = ExperimentConfig.from_file(path)
        assert (cfg.experiment, cfg.seed) == ("gan2d", 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.json"):
            ExperimentConfig.from_file(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{seed: 1")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(path)


class TestSectionConfigs:
    def test_toy_checkpoints_are_sorted(self):
        cfg = ToyConfig(checkpoints=[10, 1, 10, 5])
        assert cfg.checkpoints == [1, 5, 10]
        assert cfg.iterations == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"domain": (1.0, -1.0)},
            {"num_points": 1},
            {"checkpoints": []},
            {"checkpoints": [0, 3]},
            {"grid_step": 0.0},
            {"hidden": [0]},
            {"batch_size": 1},
            {"sinkhorn_iters": 0},
            {"init_time": 0.0},
        ],
    )
    def test_invalid_toy_settings(self, kwargs):
        with pytest.raises(ConfigError):
            ToyConfig(**kwargs)

    @pytest.mark.parametrize(
        "kwargs", [{"methods": ["langevin"]}, {"kernel_hidden": []}, {"sinkhorn_iters": 0}]
    )
    def test_invalid_gauss_settings(self, kwargs):
        with pytest.raises(ConfigError):
            GaussSamplingConfig(**kwargs)

    def test_toy_batch_can_be_full(self):
        assert ToyConfig(batch_size=None).to_dict()["batch_size"] is None

    def test_bnn_dataset_must_be_synthetic(self):
        with pytest.raises(ConfigError):
            BnnExperimentConfig(dataset="boston")

    def test_bnn_spec_kwargs(self):
        kwargs = BnnExperimentConfig(hidden_units=7).spec_kwargs()
        assert kwargs["hidden_units"] == 7
