import numpy as np
import pytest

from src.config import ExperimentConfig
from src.core.nn import MlpSpec
from src.kernels.deep_rbf import DeepRbfKernel


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def deep_rbf(rng):
    """Small tanh deep RBF kernel on 2-D inputs."""
    return DeepRbfKernel(MlpSpec.make(2, [8], 3, activation="tanh"), rng)


@pytest.fixture
def tiny_config(tmp_path):
    """Experiment configuration small enough for unit tests."""

    def make(experiment: str, seed: int = 0, **sections) -> ExperimentConfig:
        record = {
            "experiment": experiment,
            "seed": seed,
            "out_dir": str(tmp_path / experiment),
            "hklearn": {"inner_steps": 2, "sinkhorn_iters": 30},
            "svgd": {"iterations": 3, "step_size": 0.05},
            "toy1d": {
                "num_points": 24,
                "hidden": [8],
                "feature_dim": 2,
                "checkpoints": [1, 2],
                "grid_step": 0.5,
            },
            "svgd_gauss": {"particles": 4},
            "bnn": {
                "samples": 20,
                "hidden_units": 4,
                "particles": 3,
                "kernel_hidden": [4],
                "iterations": 2,
            },
            "gan": {
                "generator_steps": 2,
                "kernel_steps": 1,
                "batch_size": 8,
                "eval_samples": 16,
                "generator_hidden": [8],
                "kernel_hidden": [8],
                "feature_dim": 2,
                "sinkhorn_iters": 20,
            },
        }
        for name, overrides in sections.items():
            record[name] = dict(record.get(name, {}), **overrides)
        return ExperimentConfig.from_dict(record)

    return make
