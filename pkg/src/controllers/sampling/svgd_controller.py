"""Paired vanilla / heat-kernel SVGD runs on a Gaussian target."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from src.artifacts import RunManifest
from src.config import ExperimentConfig
from src.controllers.run_context import RunContext
from src.core.errors import DomainError, NonFiniteError
from src.hklearn.learner import Trajectory
from src.svgd.stein import GaussianTarget, ParticleSet, hk_svgd, make_learned_kernel, svgd


@dataclass
class SamplingOutcome:
    """Final particles of one method."""

    method: str
    particles: ParticleSet
    trajectory: Optional[Trajectory] = None

    @property
    def mean(self) -> np.ndarray:
        return self.particles.mean()

    @property
    def variance(self) -> np.ndarray:
        return self.particles.variance()

    @property
    def aborted(self) -> bool:
        return self.trajectory is not None and self.trajectory.aborted

    def within(self, mean_tol: float = 0.2, var_range=(0.5, 1.5)) -> bool:
        """Mean and variance gate for a standard normal target."""
        lo, hi = var_range
        return bool(
            np.all(np.abs(self.mean) <= mean_tol)
            and np.all((self.variance >= lo) & (self.variance <= hi))
        )

    def metrics(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "mean": self.mean.tolist(),
            "variance": self.variance.tolist(),
            "iterations": self.particles.iteration,
            "aborted": self.aborted,
        }


@dataclass
class SvgdResult:
    outcomes: Dict[str, SamplingOutcome] = field(default_factory=dict)
    manifest: Optional[RunManifest] = None

    def __getitem__(self, method: str) -> SamplingOutcome:
        return self.outcomes[method]


class SvgdController:
    """Controller for the Gaussian-target sampler comparison."""

    def __init__(self, debug: bool = False):
        self.debug = debug
        self.logger = logging.getLogger(__name__)
        if debug:
            self.logger.setLevel(logging.DEBUG)

    @staticmethod
    def initial_particles(cfg: ExperimentConfig) -> np.ndarray:
        """Every method starts from the same seeded draw."""
        gauss = cfg.svgd_gauss
        rng = np.random.default_rng([cfg.seed, 0])
        return gauss.init_mean + gauss.init_std * rng.standard_normal((gauss.particles, gauss.dim))

    def run_method(self, cfg: ExperimentConfig, method: str, start: np.ndarray) -> SamplingOutcome:
        """Run ``method`` from ``start``; hk-svgd caps Sinkhorn at ``svgd_gauss.sinkhorn_iters``."""
        target = GaussianTarget(np.zeros(start.shape[1]), 1.0)
        particles = ParticleSet(start)
        if method == "svgd":
            return SamplingOutcome(method, svgd(target, particles, cfg.svgd))
        rng = np.random.default_rng([cfg.seed, 1])
        gauss = cfg.svgd_gauss
        kernel = make_learned_kernel(start.shape[1], rng, hidden=gauss.kernel_hidden)
        hk_cfg = replace(cfg.hklearn, sinkhorn_iters=gauss.sinkhorn_iters)
        final, trajectory = hk_svgd(target, particles, hk_cfg, cfg.svgd, kernel, rng)
        return SamplingOutcome(method, final, trajectory)

    def run_svgd(
        self, cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None
    ) -> SvgdResult:
        """
        Run every configured method from shared initial particles.

        Args:
            cfg: Experiment configuration (``svgd_gauss``, ``svgd``, ``hklearn``).
            out_dir: Run directory; ``cfg.out_dir`` when omitted.

        Returns:
            SvgdResult keyed by method.
        """
        run = RunContext(out_dir or cfg.out_dir, cfg.to_dict(), self.logger)
        start = self.initial_particles(cfg)
        result = SvgdResult()
        records: List[Dict[str, object]] = []
        errors: List[str] = []
        for method in cfg.svgd_gauss.methods:
            try:
                outcome = self.run_method(cfg, method, start)
            except (NonFiniteError, DomainError) as exc:
                self.logger.error(f"{method} diverged: {exc}")
                errors.append(f"{method}: {exc}")
                records.append({"method": method, "seed": cfg.seed, "error": str(exc)})
                continue
            result.outcomes[method] = outcome
            columns = [f"x{i}" for i in range(outcome.particles.dim)]
            run.csv(f"particles_{method}.csv", columns, outcome.particles.positions.tolist())
            if outcome.trajectory is not None:
                run.csv(
                    f"trajectory_{method}.csv", Trajectory.COLUMNS, outcome.trajectory.to_rows()
                )
            record = dict(outcome.metrics(), seed=cfg.seed)
            records.append(record)
            self.logger.info(
                f"{method}: mean {outcome.mean.round(4).tolist()}, "
                f"variance {outcome.variance.round(4).tolist()}"
            )

        metrics: Dict[str, object] = {"experiment": "svgd-gauss", "seed": cfg.seed, "results": records}
        if cfg.record_wallclock:
            metrics["wallclock_s"] = run.elapsed
        run.json("metrics.json", metrics)
        aborted = [m for m, o in result.outcomes.items() if o.aborted]
        if errors:
            result.manifest = run.finish("error", "; ".join(errors))
        elif aborted:
            result.manifest = run.finish("aborted", f"kernel learning aborted for {aborted}")
        else:
            result.manifest = run.finish()
        return result
