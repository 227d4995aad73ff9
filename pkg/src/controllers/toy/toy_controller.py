"""
Heat kernel recovery on the real line.

Samples uniform points on an interval, runs JKO steps on a deep RBF kernel
and, at each checkpoint iteration, compares the learned kernel scaled by the
line kernel's peak a^t against the closed form at t = iteration * dt.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from src.artifacts import RunManifest
from src.config import ExperimentConfig, ToyConfig
from src.constants import NORM_FLOOR, TOY_MSE_GATE
from src.controllers.run_context import RunContext
from src.core.errors import DomainError
from src.core.nn import MlpSpec
from src.hklearn.config import HkConfig
from src.hklearn.learner import HeatKernelLearner, Trajectory
from src.kernels.deep_rbf import DeepRbfKernel
from src.oracles.heat import a_t_line, heat_kernel_line, l2_kernel_distance


@dataclass
class ToyCheckpoint:
    iteration: int
    t: float
    l2_distance: float
    mse: float


@dataclass
class ToyResult:
    checkpoints: List[ToyCheckpoint]
    trajectory: Trajectory
    manifest: Optional[RunManifest] = None
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def aborted(self) -> bool:
        return self.trajectory.aborted

    def l2_distances(self) -> Dict[int, float]:
        return {c.iteration: c.l2_distance for c in self.checkpoints}

    @property
    def final_mse(self) -> float:
        return self.checkpoints[-1].mse if self.checkpoints else float("nan")

    @property
    def recovered(self) -> bool:
        """Final MSE under the gate and the L2 distance shrank since the first checkpoint."""
        if len(self.checkpoints) < 2:
            return False
        first, last = self.checkpoints[0], self.checkpoints[-1]
        return last.l2_distance < first.l2_distance and last.mse <= TOY_MSE_GATE


class ToyController:
    """Controller for the 1-D heat kernel recovery experiment."""

    def __init__(self, debug: bool = False):
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        if debug:
            self.logger.setLevel(logging.DEBUG)

    def build_kernel(self, toy: ToyConfig, X: np.ndarray, rng: np.random.Generator) -> DeepRbfKernel:
        """Tanh feature net on standardized inputs, calibrated to ``toy.init_time``."""
        spec = MlpSpec.make(1, toy.hidden, toy.feature_dim, activation="tanh")
        kernel = DeepRbfKernel(spec, rng)
        kernel.fit_input_scaling(X)
        factor = self.calibrate_bandwidth(kernel, toy.init_time)
        self.logger.debug(f"Output layer scaled by {factor:.4g} for t={toy.init_time}")
        return kernel

    @staticmethod
    def calibrate_bandwidth(kernel: DeepRbfKernel, t: float) -> float:
        """
        Scale the output layer so that -log k(0, x) ~ x^2 / (4 t) near the origin.

        Returns:
            The factor applied to the output weights.

        Raises:
            DomainError: If the feature net is flat at the origin.
        """
        _, jac = kernel.features_with_jacobian(np.zeros((1, kernel.input_dim)))
        curvature = float(np.sum(jac.data**2))
        if curvature <= NORM_FLOOR:
            raise DomainError("Feature net has a vanishing Jacobian at the origin")
        factor = math.sqrt(1.0 / (4.0 * t * curvature))
        weight = kernel.params[kernel.net.weight_name(kernel.net.spec.num_layers - 1)]
        weight.data = weight.data * factor
        return factor

    def hk_config(self, cfg: ExperimentConfig) -> HkConfig:
        """``cfg.hklearn`` with the toy's batch size and Sinkhorn cap."""
        toy = cfg.toy1d
        return replace(cfg.hklearn, batch_size=toy.batch_size, sinkhorn_iters=toy.sinkhorn_iters)

    @staticmethod
    def kernel_curves(kernel, t: float, grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(a^t k(0, x), heat_kernel_line(t, 0, x)) on ``grid``."""
        learned = a_t_line(t) * kernel.matrix(np.zeros((1, 1)), grid[:, None]).data[0]
        return learned, np.asarray(heat_kernel_line(t, 0.0, grid))

    def run_toy1d(
        self, cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None
    ) -> ToyResult:
        """
        Train on uniform samples and write one kernel CSV per checkpoint.

        Args:
            cfg: Experiment configuration (``toy1d`` and ``hklearn`` sections).
            out_dir: Run directory; ``cfg.out_dir`` when omitted.

        Returns:
            ToyResult with per-checkpoint distances and the run manifest.
        """
        toy = cfg.toy1d
        run = RunContext(out_dir or cfg.out_dir, cfg.to_dict(), self.logger)
        rng = np.random.default_rng(cfg.seed)
        lo, hi = toy.domain
        X = rng.uniform(lo, hi, size=(toy.num_points, 1))
        kernel = self.build_kernel(toy, X, rng)
        learner = HeatKernelLearner(kernel, self.hk_config(cfg), rng)
        grid = np.arange(lo, hi + 0.5 * toy.grid_step, toy.grid_step)

        trajectory = Trajectory()
        checkpoints: List[ToyCheckpoint] = []
        self.logger.info(
            f"Toy run: {toy.num_points} points on [{lo}, {hi}], {toy.iterations} iterations"
        )
        for iteration in range(1, toy.iterations + 1):
            step = learner.run(X, steps=1)
            trajectory.records.extend(step.records)
            if step.aborted:
                trajectory.aborted, trajectory.error = True, step.error
                break
            if iteration not in toy.checkpoints:
                continue
            t = iteration * toy.time_per_iteration
            learned, oracle = self.kernel_curves(kernel, t, grid)
            point = ToyCheckpoint(
                iteration,
                t,
                l2_kernel_distance(learned, oracle, grid),
                float(np.mean((learned - oracle) ** 2)),
            )
            checkpoints.append(point)
            run.csv(
                f"kernel_iter{iteration:03d}.csv",
                ("x", "learned", "oracle"),
                np.column_stack([grid, learned, oracle]).tolist(),
            )
            self.logger.debug(
                f"Iteration {iteration} (t={t:.2f}): L2 {point.l2_distance:.4e}, MSE {point.mse:.4e}"
            )

        run.csv("trajectory.csv", Trajectory.COLUMNS, trajectory.to_rows())
        run.csv(
            "checkpoints.csv",
            ("iteration", "t", "l2_distance", "mse"),
            [[c.iteration, c.t, c.l2_distance, c.mse] for c in checkpoints],
        )
        result = ToyResult(checkpoints, trajectory, grid=grid)
        metrics = {
            "experiment": "toy1d",
            "seed": cfg.seed,
            "l2_distance": {str(c.iteration): c.l2_distance for c in checkpoints},
            "mse": {str(c.iteration): c.mse for c in checkpoints},
            "aborted": trajectory.aborted,
            "recovered": result.recovered,
        }
        if cfg.record_wallclock:
            metrics["wallclock_s"] = run.elapsed
        run.json("metrics.json", metrics)
        result.manifest = run.finish("aborted" if trajectory.aborted else "ok", trajectory.error)
        return result
