"""2-D generative training with a learned kernel."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from src.artifacts import RunManifest
from src.config import ExperimentConfig
from src.controllers.run_context import RunContext
from src.genmodel.toys import ring_centers, toy_sampler
from src.genmodel.trainer import GanEvaluation, GanTrajectory, evaluate_generator, train_dgm


@dataclass
class GanResult:
    trajectory: GanTrajectory
    evaluation: Optional[GanEvaluation] = None
    manifest: Optional[RunManifest] = None

    @property
    def aborted(self) -> bool:
        return self.trajectory.aborted

    @property
    def mmd2(self) -> float:
        return self.evaluation.mmd2 if self.evaluation is not None else float("nan")

    def metrics(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "epochs": len(self.trajectory),
            "aborted": self.aborted,
            "mmd2": self.mmd2,
        }
        coverage = self.evaluation.coverage if self.evaluation is not None else None
        if coverage is not None:
            record["mode_fractions"] = coverage.fractions.tolist()
            record["modes_covered"] = coverage.covered
            record["all_modes_covered"] = coverage.all_covered
        return record


class GanController:
    """Controller for the 2-D toy generative experiments."""

    def __init__(self, debug: bool = False):
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        if debug:
            self.logger.setLevel(logging.DEBUG)

    def run_gan2d(
        self, cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None
    ) -> GanResult:
        """
        Train a generator on ``cfg.gan_target`` and score held-out samples.

        Writes the per-epoch training CSV, the generated sample dump and the
        metrics record. Mode coverage is reported for the ring target.
        """
        run = RunContext(out_dir or cfg.out_dir, cfg.to_dict(), self.logger)
        rng = np.random.default_rng(cfg.seed)
        sampler = toy_sampler(cfg.gan_target)
        self.logger.info(
            f"Training on '{cfg.gan_target}' for {cfg.gan.generator_steps} generator steps "
            f"({cfg.gan.kernel_family} kernel, {cfg.gan.loss} loss)"
        )
        generator, _, trajectory = train_dgm(sampler, cfg.gan, rng)
        result = GanResult(trajectory)
        run.csv("training.csv", GanTrajectory.COLUMNS, trajectory.to_rows())
        if not trajectory.aborted:
            centers = ring_centers() if cfg.gan_target == "ring" else None
            result.evaluation = evaluate_generator(
                generator, sampler, rng, cfg.gan.eval_samples, centers
            )
            run.csv("samples.csv", ("x", "y"), result.evaluation.samples.tolist())
            self.logger.info(f"Held-out MMD^2 {result.mmd2:.5f}")

        metrics = dict(result.metrics(), experiment="gan2d", seed=cfg.seed, target=cfg.gan_target)
        if cfg.record_wallclock:
            metrics["wallclock_s"] = run.elapsed
        run.json("metrics.json", metrics)
        result.manifest = run.finish(
            "aborted" if trajectory.aborted else "ok", trajectory.error
        )
        return result
