"""Bayesian neural network regression runs, one per configured method."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from src.artifacts import RunManifest
from src.config import ExperimentConfig
from src.controllers.run_context import RunContext
from src.hklearn.learner import Trajectory
from src.svgd.bnn import BnnResult, BnnSpec, bnn_regression
from src.svgd.datasets import RegressionDataset, load_csv_dataset, make_dataset


@dataclass
class BnnRunResult:
    dataset: str
    results: Dict[str, BnnResult] = field(default_factory=dict)
    manifest: Optional[RunManifest] = None

    def rmse(self, method: str) -> float:
        return self.results[method].rmse

    @property
    def diverged(self) -> List[str]:
        return [m for m, r in self.results.items() if r.diverged]


class BnnController:
    """Controller for particle BNN regression."""

    def __init__(self, debug: bool = False):
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        if debug:
            self.logger.setLevel(logging.DEBUG)

    def load_dataset(
        self, cfg: ExperimentConfig, dataset_path: Optional[Union[str, Path]] = None
    ) -> RegressionDataset:
        """
        The CSV at ``dataset_path`` or the configured synthetic generator.

        Raises:
            FileNotFoundError: If ``dataset_path`` does not exist.
        """
        if dataset_path is not None:
            return load_csv_dataset(dataset_path)
        bnn = cfg.bnn
        return make_dataset(bnn.dataset, np.random.default_rng([cfg.seed, 0]), n=bnn.samples)

    def run_bnn(
        self,
        cfg: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        dataset_path: Optional[Union[str, Path]] = None,
    ) -> BnnRunResult:
        """
        Fit every configured method on the same split and initialization.

        Args:
            cfg: Experiment configuration (``bnn`` and ``hklearn`` sections).
            out_dir: Run directory; ``cfg.out_dir`` when omitted.
            dataset_path: Optional CSV (features, then target).

        Returns:
            BnnRunResult keyed by method. A diverged method keeps NaN metrics
            and marks the manifest.
        """
        dataset = self.load_dataset(cfg, dataset_path)
        bnn = cfg.bnn
        run = RunContext(out_dir or cfg.out_dir, cfg.to_dict(), self.logger)
        spec = BnnSpec(input_dim=dataset.input_dim, **bnn.spec_kwargs())
        hk_cfg = replace(cfg.hklearn, outer_steps=1)
        outcome = BnnRunResult(dataset.name)
        records = []
        for method in bnn.methods:
            rng = np.random.default_rng([cfg.seed, 1])
            started = run.elapsed
            result = bnn_regression(
                dataset, spec, method, rng, bnn.svgd_config(), hk_cfg, bnn.train_fraction
            )
            outcome.results[method] = result
            record = dict(result.metrics(), seed=cfg.seed, diverged=result.diverged)
            if cfg.record_wallclock:
                record["wallclock_s"] = run.elapsed - started
            records.append(record)
            if result.trajectory is not None:
                run.csv(f"trajectory_{method}.csv", Trajectory.COLUMNS, result.trajectory.to_rows())

        run.json(
            "metrics.json",
            {"experiment": "svgd-bnn", "seed": cfg.seed, "dataset": dataset.name, "results": records},
        )
        if outcome.diverged:
            outcome.manifest = run.finish("error", f"diverged: {outcome.diverged}")
        else:
            outcome.manifest = run.finish()
        return outcome
