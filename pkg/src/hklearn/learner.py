"""
JKO-style heat kernel learning loop.

Each outer step fixes a batch, snapshots the previous measure on it, and
runs a few Adam steps on the objective. The snapshot is detached, so the
optimizer only moves the current measure.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Dict, List, Optional, Tuple

import numpy as np

from src.core import autodiff as ad
from src.core.autodiff import Tape, Tensor
from src.core.errors import DomainError, NonFiniteError
from src.core.optim import AdamState, adam_step
from src.hklearn.config import HkConfig
from src.hklearn.measures import MeasureSnapshot, to_simplex, uniform_measure
from src.hklearn.objective import ObjectiveTerms, batch_weights, hk_objective_terms
from src.transport.sinkhorn import cost_matrix, default_eps

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryRecord:
    """Summary of one outer step."""

    step: int
    objective: float
    entropy: float
    wasserstein: float
    penalty: float
    weights: np.ndarray
    start_objective: float
    reverted: bool = False
    sinkhorn_converged: bool = True


@dataclass
class Trajectory:
    """Ordered outer-step records; ``aborted`` marks an early stop."""

    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "step",
        "objective",
        "entropy",
        "wasserstein",
        "penalty",
    )

    records: List[TrajectoryRecord] = field(default_factory=list)
    aborted: bool = False
    error: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)

    def to_rows(self) -> List[List[float]]:
        return [
            [r.step, r.objective, r.entropy, r.wasserstein, r.penalty]
            for r in self.records
        ]

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])


class HeatKernelLearner:
    """
    Runs outer JKO steps on a kernel in place.

    Args:
        kernel: Kernel whose ``params`` are optimized.
        cfg: Objective weights and schedule.
        rng: Batch sampling source.
        optimizer: Adam state to continue from (fresh if omitted).
    """

    def __init__(
        self,
        kernel,
        cfg: HkConfig,
        rng: np.random.Generator,
        optimizer: Optional[AdamState] = None,
    ):
        self.kernel = kernel
        self.cfg = cfg
        self.rng = rng
        self.optimizer = optimizer or AdamState.for_params(kernel.params, cfg.learning_rate)
        self.initial_params = kernel.params.snapshot()
        self.steps_done = 0

    def _batch(self, X: np.ndarray) -> np.ndarray:
        size = self.cfg.batch_size
        if size is None or size >= X.shape[0]:
            return X
        index = np.sort(self.rng.choice(X.shape[0], size=size, replace=False))
        return X[index]

    def _reference_gram(self, X: np.ndarray) -> Optional[np.ndarray]:
        """Gram matrix of the initial kernel, for the unnormalized measure."""
        if self.cfg.measure_mode != "unnormalized":
            return None
        current = self.kernel.params.snapshot()
        self.kernel.params.restore(self.initial_params)
        try:
            return self.kernel.matrix(X).data.copy()
        finally:
            self.kernel.params.restore(current)

    def snapshot_measure(
        self, X: np.ndarray, reference_gram: Optional[np.ndarray] = None
    ) -> MeasureSnapshot:
        """Detached measure induced by the current kernel on ``X``."""
        if self.cfg.measure_mode == "uniform-init" and self.steps_done == 0:
            return MeasureSnapshot(uniform_measure(X.shape[0]).weights, X)
        weights = batch_weights(Tensor(self.kernel.matrix(X).data), self.cfg, reference_gram)
        if self.cfg.measure_mode == "unnormalized":
            weights = to_simplex(weights)
        return MeasureSnapshot(weights.data, X)

    def jko_step(self, X: np.ndarray) -> TrajectoryRecord:
        """
        One outer step on a batch drawn from ``X``.

        The parameter values visited by the inner loop, including the start
        point, are all scored; with ``cfg.safeguard`` the best one is kept.
        """
        cfg = self.cfg
        params = self.kernel.params
        batch = self._batch(X)
        self.kernel.refresh()
        reference_gram = self._reference_gram(batch)
        nu = self.snapshot_measure(batch, reference_gram)
        cost = cost_matrix(batch).data
        eps_reg = cfg.sinkhorn_eps if cfg.sinkhorn_eps is not None else default_eps(cost)

        captured: Dict[str, ObjectiveTerms] = {}

        def build() -> Tensor:
            captured["terms"] = hk_objective_terms(
                self.kernel,
                batch,
                nu,
                cfg,
                cost=cost,
                reference_gram=reference_gram,
                eps_reg=eps_reg,
            )
            return captured["terms"].objective

        best_value, best_params, best_terms, best_index = math.inf, None, None, -1
        start_value = math.nan
        last_terms = None
        for inner in range(cfg.inner_steps + 1):
            tape = Tape(build, params)
            loss = ad.forward(tape)
            value = float(loss.data)
            terms = captured["terms"]
            last_terms = terms
            if inner == 0:
                start_value = value
            if value < best_value:
                best_value, best_params, best_terms, best_index = (
                    value,
                    params.snapshot(),
                    terms,
                    inner,
                )
            if inner == cfg.inner_steps:
                break
            adam_step(params, ad.backward(tape, loss), self.optimizer)

        reverted = False
        chosen = last_terms
        if cfg.safeguard and best_index != cfg.inner_steps:
            params.restore(best_params)
            chosen = best_terms
            reverted = True
            logger.warning(
                f"JKO step {self.steps_done + 1}: kept inner iterate {best_index} "
                f"of {cfg.inner_steps} (objective {best_value:.6g})"
            )

        converged = chosen.transport is None or chosen.transport.converged
        if not converged:
            logger.warning(
                f"JKO step {self.steps_done + 1}: Sinkhorn stopped at residual "
                f"{chosen.transport.residual:.3e} after {chosen.transport.iterations} iterations"
            )

        self.steps_done += 1
        values = chosen.values()
        record = TrajectoryRecord(
            step=self.steps_done,
            objective=values["objective"],
            entropy=values["entropy"],
            wasserstein=values["wasserstein"],
            penalty=values["penalty"],
            weights=chosen.weights.data.copy(),
            start_objective=start_value,
            reverted=reverted,
            sinkhorn_converged=converged,
        )
        logger.debug(
            f"JKO step {record.step}: objective {record.start_objective:.6g} -> "
            f"{record.objective:.6g} (W {record.wasserstein:.3e}, H {record.entropy:.4f})"
        )
        return record

    def run(
        self,
        X,
        steps: Optional[int] = None,
        callback: Optional[Callable[[TrajectoryRecord], None]] = None,
    ) -> Trajectory:
        """
        Run ``steps`` outer steps (``cfg.outer_steps`` by default).

        A non-finite value or a domain failure stops the run; the trajectory
        up to that point is returned with ``aborted`` set.
        """
        X = np.asarray(getattr(X, "data", X), dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] < 2:
            raise ValueError("Heat kernel learning needs at least two points")
        steps = self.cfg.outer_steps if steps is None else steps
        trajectory = Trajectory()
        for _ in range(steps):
            try:
                record = self.jko_step(X)
            except (NonFiniteError, DomainError) as exc:
                logger.error(f"Heat kernel learning aborted at step {self.steps_done + 1}: {exc}")
                trajectory.aborted = True
                trajectory.error = str(exc)
                break
            trajectory.records.append(record)
            if callback is not None:
                callback(record)
        return trajectory


def heat_kernel_learning(
    X,
    kernel,
    cfg: HkConfig,
    rng: np.random.Generator,
    callback: Optional[Callable[[TrajectoryRecord], None]] = None,
):
    """
    Train ``kernel`` on samples ``X`` for ``cfg.outer_steps`` JKO steps.

    Returns:
        (kernel, Trajectory); the kernel is updated in place.
    """
    learner = HeatKernelLearner(kernel, cfg, rng)
    trajectory = learner.run(X, callback=callback)
    return kernel, trajectory
