"""
Alternating generator / kernel training.

Each generator step is preceded by ``cfg.kernel_steps`` kernel updates. A
kernel update draws fresh real and generated batches, snapshots the measure
the current kernel induces on the pooled batch and takes one Adam step on the
kernel objective. The generator then takes one Adam step on MMD^2 (or SMMD^2)
under the updated kernel.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Dict, List, Optional, Tuple

import numpy as np

from src.constants import EVAL_RBF_BANDWIDTH2
from src.core import autodiff as ad
from src.core.autodiff import Tape, Tensor
from src.core.errors import DomainError, NonFiniteError
from src.core.nn import MlpSpec
from src.core.optim import AdamState, adam_step
from src.genmodel.config import GanConfig
from src.genmodel.generator import Generator
from src.genmodel.losses import mmd2, smmd2, smmd_sigma
from src.genmodel.objectives import kernel_objective
from src.genmodel.toys import ModeCoverage, Sampler, mode_coverage
from src.hklearn.config import HkConfig
from src.hklearn.measures import (
    MeasureSnapshot,
    kde_weights,
    ratio_weights,
    to_simplex,
    uniform_measure,
)
from src.kernels.base import RbfKernel
from src.kernels.deep_rbf import DeepRbfKernel
from src.kernels.random_feature import RandomFeatureKernel

logger = logging.getLogger(__name__)


@dataclass
class GanRecord:
    epoch: int
    kernel_objective: float
    mmd2: float
    smmd_sigma: float


@dataclass
class GanTrajectory:
    COLUMNS: ClassVar[Tuple[str, ...]] = ("epoch", "kernel_objective", "mmd2", "smmd_sigma")

    records: List[GanRecord] = field(default_factory=list)
    aborted: bool = False
    error: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)

    def to_rows(self) -> List[List[float]]:
        return [[r.epoch, r.kernel_objective, r.mmd2, r.smmd_sigma] for r in self.records]


def build_kernel(cfg: GanConfig, data_dim: int, rng: np.random.Generator):
    """Kernel of the configured family with a tanh feature network."""
    spec = MlpSpec.make(data_dim, cfg.kernel_hidden, cfg.feature_dim, activation="tanh")
    if cfg.kernel_family == "random-feature":
        return RandomFeatureKernel(spec, rng, spectral_norm=cfg.spectral_norm)
    return DeepRbfKernel(spec, rng, spectral_norm=cfg.spectral_norm)


def initial_gram(kernel, initial_params: Dict[str, np.ndarray], pooled: np.ndarray) -> np.ndarray:
    """Gram matrix of the kernel at ``initial_params``; current values are put back."""
    current = kernel.params.snapshot()
    kernel.params.restore(initial_params)
    try:
        return kernel.matrix(pooled).data.copy()
    finally:
        kernel.params.restore(current)


def pooled_snapshot(
    kernel,
    X: np.ndarray,
    Y: np.ndarray,
    hk_cfg: Optional[HkConfig] = None,
    first_step: bool = False,
    reference_gram: Optional[np.ndarray] = None,
) -> MeasureSnapshot:
    """
    Detached measure the kernel induces on the pooled batch [X; Y].

    ``hk_cfg.measure_mode`` picks the weights: kernel density (normalized),
    1/n on the first kernel step then kernel density (uniform-init), or the
    density ratio against ``reference_gram`` moved onto the simplex
    (unnormalized). Without ``hk_cfg`` the normalized mode is used.
    """
    pooled = np.concatenate([X, Y])
    mode = hk_cfg.measure_mode if hk_cfg is not None else "normalized"
    if mode == "uniform-init" and first_step:
        return MeasureSnapshot(uniform_measure(pooled.shape[0]).weights, pooled)
    gram = Tensor(kernel.matrix(pooled).data)
    if mode == "unnormalized":
        if reference_gram is None:
            raise ValueError("Unnormalized measure mode needs a reference Gram matrix")
        weights = to_simplex(ratio_weights(gram, reference_gram))
    else:
        weights = kde_weights(gram)
    if np.any(weights.data <= 0):
        raise DomainError("Measure weights on the pooled batch must be positive")
    return MeasureSnapshot(weights.data, pooled)


def kernel_update(
    kernel,
    generator: Generator,
    sampler: Sampler,
    cfg: GanConfig,
    rng,
    optimizer: AdamState,
    first_step: bool = False,
    initial_params: Optional[Dict[str, np.ndarray]] = None,
) -> float:
    """
    One kernel step on fresh batches; returns the objective before the step.

    ``initial_params`` are the kernel's starting values, required when
    ``cfg.measure_mode`` is unnormalized.
    """
    X = sampler(rng, cfg.batch_size)
    Y = generator.sample(rng, cfg.batch_size)
    nu, reference_gram = None, None
    if cfg.alpha > 0 or cfg.beta > 0:
        if cfg.measure_mode == "unnormalized":
            if initial_params is None:
                raise ValueError("Unnormalized measure mode needs the initial kernel parameters")
            reference_gram = initial_gram(kernel, initial_params, np.concatenate([X, Y]))
        nu = pooled_snapshot(kernel, X, Y, cfg.hk_config(), first_step, reference_gram)
    tape = Tape(
        lambda: kernel_objective(kernel, X, Y, nu, cfg, reference_gram=reference_gram),
        kernel.params,
    )
    loss = ad.forward(tape)
    adam_step(kernel.params, ad.backward(tape, loss), optimizer)
    return float(loss.data)


def generator_update(
    kernel, generator: Generator, sampler: Sampler, cfg: GanConfig, rng, optimizer: AdamState
) -> Tuple[float, float]:
    """One generator step; returns (discrepancy value, SMMD scale or NaN)."""
    X = sampler(rng, cfg.batch_size)
    noise = generator.noise(rng, cfg.batch_size)
    sigma = math.nan

    def build() -> Tensor:
        Y = generator(noise)
        if cfg.loss == "smmd":
            return smmd2(kernel, X, Y, cfg.zeta)
        return mmd2(kernel, X, Y, "unbiased")

    tape = Tape(build, generator.params)
    loss = ad.forward(tape)
    adam_step(generator.params, ad.backward(tape, loss), optimizer)
    if cfg.loss == "smmd" or cfg.scale_kernel_objective:
        sigma = float(smmd_sigma(kernel, X, cfg.zeta).data)
    return float(loss.data), sigma


def train_dgm(
    sampler: Sampler,
    cfg: GanConfig,
    rng: np.random.Generator,
    data_dim: int = 2,
    kernel=None,
    callback: Optional[Callable[[GanRecord], None]] = None,
):
    """
    Train a generator against ``sampler`` with a learned kernel.

    Args:
        sampler: (rng, count) -> (count, data_dim) real samples.
        cfg: Objective weights and schedule.
        rng: Source of every batch and of initialization.
        data_dim: Sample dimension.
        kernel: Kernel to train (built from ``cfg`` if omitted).
        callback: Called with every epoch record.

    Returns:
        (Generator, kernel, GanTrajectory); an aborted run keeps the records
        so far and sets ``aborted``.
    """
    generator = Generator(data_dim, rng, cfg.noise_dim, cfg.generator_hidden)
    kernel = kernel if kernel is not None else build_kernel(cfg, data_dim, rng)
    gen_opt = AdamState.for_generator(generator.params, cfg.generator_lr)
    kernel_opt = AdamState.for_generator(kernel.params, cfg.kernel_lr)
    initial_params = kernel.params.snapshot() if cfg.measure_mode == "unnormalized" else None
    trajectory = GanTrajectory()

    for epoch in range(1, cfg.generator_steps + 1):
        try:
            if isinstance(kernel, RandomFeatureKernel):
                kernel.resample(rng)
            objective = math.nan
            for step in range(cfg.kernel_steps):
                kernel.refresh()
                objective = kernel_update(
                    kernel,
                    generator,
                    sampler,
                    cfg,
                    rng,
                    kernel_opt,
                    first_step=epoch == 1 and step == 0,
                    initial_params=initial_params,
                )
            value, sigma = generator_update(kernel, generator, sampler, cfg, rng, gen_opt)
        except (NonFiniteError, DomainError) as exc:
            logger.error(f"Generative training aborted at epoch {epoch}: {exc}")
            trajectory.aborted = True
            trajectory.error = str(exc)
            break
        record = GanRecord(epoch, objective, value, sigma)
        trajectory.records.append(record)
        if epoch % 100 == 0:
            logger.debug(
                f"Epoch {epoch}: kernel objective {objective:.5g}, {cfg.loss.upper()}^2 {value:.5g}"
            )
        if callback is not None:
            callback(record)
    return generator, kernel, trajectory


@dataclass
class GanEvaluation:
    mmd2: float
    samples: np.ndarray
    coverage: Optional[ModeCoverage] = None


def evaluate_generator(
    generator: Generator,
    sampler: Sampler,
    rng: np.random.Generator,
    count: int,
    centers: Optional[np.ndarray] = None,
    bandwidth2: float = EVAL_RBF_BANDWIDTH2,
) -> GanEvaluation:
    """Held-out unbiased MMD^2 under a fixed RBF kernel, plus mode coverage."""
    samples = generator.sample(rng, count)
    real = sampler(rng, count)
    value = float(mmd2(RbfKernel(bandwidth2), real, samples, "unbiased").data)
    coverage = mode_coverage(samples, centers) if centers is not None else None
    return GanEvaluation(value, samples, coverage)
