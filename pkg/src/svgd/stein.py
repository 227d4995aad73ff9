"""
Stein variational gradient descent with fixed or learned kernels.

Every particle moves along

    phi(x_i) = 1/n sum_j [k(x_j, x_i) grad log q(x_j) + grad_{x_j} k(x_j, x_i)]

computed from one snapshot of the particle set, so the update is
synchronous. The repulsive term is differentiated through the kernel by the
autodiff engine, which lets learned kernels plug in unchanged.
"""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from src.constants import (
    BNN_KERNEL_HIDDEN,
    SVGD_ADAGRAD_ALPHA,
    SVGD_ADAGRAD_FUDGE,
    SVGD_ITERATIONS,
    SVGD_STEP_SIZE,
)
from src.core import autodiff as ad
from src.core.autodiff import Tensor
from src.core.errors import ConfigError, NonFiniteError, ShapeError
from src.core.nn import MlpSpec
from src.hklearn.config import HkConfig
from src.hklearn.learner import HeatKernelLearner, Trajectory
from src.kernels.base import Kernel, RbfKernel, median_bandwidth2
from src.kernels.deep_rbf import DeepRbfKernel

logger = logging.getLogger(__name__)


def _as_particles(X) -> np.ndarray:
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"Expected an (n, d) particle array, got shape {X.shape}")
    return X


# =============================================================================
# TARGETS
# =============================================================================


class TargetDensity:
    """
    Unnormalized log density over (n, d) particle arrays.

    Subclasses build ``log_prob_tensor`` from autodiff ops; the gradient then
    comes from the engine unless a subclass supplies a closed form.
    """

    dim: int = 1

    def log_prob_tensor(self, X: Tensor) -> Tensor:
        raise NotImplementedError

    def log_prob(self, X) -> np.ndarray:
        return self.log_prob_tensor(Tensor(_as_particles(X))).data.copy()

    def grad_log_prob(self, X) -> np.ndarray:
        X = Tensor(_as_particles(X), requires_grad=True)
        return ad.gradients(ad.tsum(self.log_prob_tensor(X)), [X])[0]


class GaussianTarget(TargetDensity):
    """N(mean, cov); a scalar ``cov`` means an isotropic covariance."""

    def __init__(self, mean: Sequence[float], cov=1.0):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.dim = self.mean.size
        cov = np.asarray(cov, dtype=np.float64)
        self.cov = cov * np.eye(self.dim) if cov.ndim == 0 else cov
        if self.cov.shape != (self.dim, self.dim):
            raise ShapeError(f"Covariance shape {self.cov.shape} does not match dim {self.dim}")
        self.precision = np.linalg.inv(self.cov)
        _, logdet = np.linalg.slogdet(2.0 * np.pi * self.cov)
        self._log_norm = -0.5 * logdet

    def log_prob_tensor(self, X: Tensor) -> Tensor:
        diff = X - self.mean
        quad = ad.tsum(ad.matmul(diff, self.precision) * diff, axis=-1)
        return self._log_norm - 0.5 * quad

    def grad_log_prob(self, X) -> np.ndarray:
        return -(_as_particles(X) - self.mean) @ self.precision


class MixtureTarget(TargetDensity):
    """Mixture of isotropic Gaussians."""

    def __init__(
        self,
        means: Sequence[Sequence[float]],
        stds: Sequence[float],
        weights: Optional[Sequence[float]] = None,
    ):
        self.means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        components, self.dim = self.means.shape
        self.stds = np.broadcast_to(np.asarray(stds, dtype=np.float64), (components,)).copy()
        if weights is None:
            weights = np.full(components, 1.0 / components)
        self.weights = np.asarray(weights, dtype=np.float64)
        if np.any(self.stds <= 0) or np.any(self.weights <= 0):
            raise ValueError("Mixture stds and weights must be positive")
        self.weights = self.weights / self.weights.sum()
        self._offsets = np.log(self.weights) - self.dim * np.log(
            self.stds * np.sqrt(2.0 * np.pi)
        )

    def log_prob_tensor(self, X: Tensor) -> Tensor:
        diff = ad.expand_dims(X, 1) - self.means
        sq = ad.tsum(ad.square(diff), axis=-1)
        return ad.logsumexp(self._offsets - sq / (2.0 * self.stds**2), axis=1)


class BananaTarget(TargetDensity):
    """2-D banana: x1 ~ N(0, s^2), x2 | x1 ~ N(b (x1^2 - s^2), 1)."""

    dim = 2

    def __init__(self, curvature: float = 0.1, scale: float = 2.0):
        if scale <= 0:
            raise ValueError("Banana scale must be positive")
        self.curvature = curvature
        self.scale = scale

    def log_prob_tensor(self, X: Tensor) -> Tensor:
        if X.shape[-1] != 2:
            raise ShapeError("BananaTarget is two-dimensional")
        x1, x2 = X[:, 0], X[:, 1]
        bend = x2 - self.curvature * (ad.square(x1) - self.scale**2)
        return -0.5 * ad.square(x1) / self.scale**2 - 0.5 * ad.square(bend)


# =============================================================================
# PARTICLES AND CONFIG
# =============================================================================


@dataclass
class ParticleSet:
    positions: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.positions = _as_particles(self.positions).copy()
        if not np.all(np.isfinite(self.positions)):
            raise NonFiniteError("Particle coordinates must be finite")

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def mean(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def variance(self) -> np.ndarray:
        return self.positions.var(axis=0, ddof=1) if self.size > 1 else np.zeros(self.dim)


@dataclass
class SvgdConfig:
    """Step schedule for the particle updates."""

    step_size: float = SVGD_STEP_SIZE
    iterations: int = SVGD_ITERATIONS
    adagrad: bool = False
    adagrad_alpha: float = SVGD_ADAGRAD_ALPHA
    adagrad_fudge: float = SVGD_ADAGRAD_FUDGE

    def __post_init__(self):
        if self.step_size < 0:
            raise ConfigError(f"step_size must be >= 0, got {self.step_size}")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not 0.0 <= self.adagrad_alpha < 1.0:
            raise ConfigError("adagrad_alpha must lie in [0, 1)")
        if self.adagrad_fudge <= 0:
            raise ConfigError("adagrad_fudge must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "SvgdConfig":
        unknown = set(record) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown svgd keys: {sorted(unknown)}")
        return cls(**record)


class AdagradState:
    """Per-coordinate step scaling with a decaying squared-direction history."""

    def __init__(self, alpha: float = SVGD_ADAGRAD_ALPHA, fudge: float = SVGD_ADAGRAD_FUDGE):
        self.alpha = alpha
        self.fudge = fudge
        self.history: Optional[np.ndarray] = None

    def scale(self, phi: np.ndarray) -> np.ndarray:
        if self.history is None or self.history.shape != phi.shape:
            self.history = phi**2
        else:
            self.history = self.alpha * self.history + (1.0 - self.alpha) * phi**2
        return phi / (self.fudge + np.sqrt(self.history))

    @classmethod
    def from_config(cls, cfg: SvgdConfig) -> Optional["AdagradState"]:
        return cls(cfg.adagrad_alpha, cfg.adagrad_fudge) if cfg.adagrad else None


# =============================================================================
# UPDATES
# =============================================================================


def rbf_median_kernel(particles) -> RbfKernel:
    """Gaussian kernel with the median-heuristic bandwidth of ``particles``."""
    X = particles.positions if isinstance(particles, ParticleSet) else _as_particles(particles)
    return RbfKernel(median_bandwidth2(X))


def kernel_repulsion(kernel: Kernel, X: np.ndarray) -> np.ndarray:
    """sum_j grad_{x_j} k(x_j, x_i) for every i, differentiated through the kernel."""
    X = _as_particles(X)
    n, d = X.shape
    first = Tensor(np.repeat(X, n, axis=0), requires_grad=True)
    second = np.tile(X, (n, 1))
    values = kernel.pair_values(first, second)
    grad = ad.gradients(ad.tsum(values), [first])[0]
    return grad.reshape(n, n, d).sum(axis=0)


def stein_direction(kernel: Kernel, X: np.ndarray, grad_log_q: np.ndarray) -> np.ndarray:
    X = _as_particles(X)
    gram = kernel.matrix(X).data
    drive = gram.T @ grad_log_q
    return (drive + kernel_repulsion(kernel, X)) / X.shape[0]


def svgd_step(
    particles: ParticleSet,
    target: TargetDensity,
    kernel: Kernel,
    step_size: float,
    adagrad: Optional[AdagradState] = None,
) -> ParticleSet:
    """
    One synchronous SVGD update.

    Raises:
        ValueError: If ``step_size`` is negative.
        NonFiniteError: If the update leaves the finite range.
    """
    if step_size < 0:
        raise ValueError(f"step_size must be >= 0, got {step_size}")
    X = particles.positions
    phi = stein_direction(kernel, X, target.grad_log_prob(X))
    if adagrad is not None:
        phi = adagrad.scale(phi)
    moved = X + step_size * phi
    if not np.all(np.isfinite(moved)):
        raise NonFiniteError(f"SVGD update {particles.iteration + 1} is not finite")
    return ParticleSet(moved, particles.iteration + 1)


def svgd(
    target: TargetDensity,
    particles: ParticleSet,
    cfg: SvgdConfig,
    kernel_fn: Callable[[np.ndarray], Kernel] = rbf_median_kernel,
) -> ParticleSet:
    """Vanilla SVGD; ``kernel_fn`` rebuilds the kernel from each snapshot."""
    adagrad = AdagradState.from_config(cfg)
    for _ in range(cfg.iterations):
        kernel = kernel_fn(particles.positions)
        particles = svgd_step(particles, target, kernel, cfg.step_size, adagrad)
    logger.debug(f"SVGD finished after {particles.iteration} updates, mean {particles.mean()}")
    return particles


def make_learned_kernel(
    dim: int,
    rng: np.random.Generator,
    hidden: Sequence[int] = BNN_KERNEL_HIDDEN,
    out_dim: Optional[int] = None,
    prefix: str = "h",
) -> DeepRbfKernel:
    """Deep RBF kernel with a tanh feature net, the default learned SVGD kernel."""
    spec = MlpSpec.make(dim, hidden, out_dim or dim, activation="tanh")
    return DeepRbfKernel(spec, rng, prefix=prefix)


def hk_svgd(
    target: TargetDensity,
    particles: ParticleSet,
    hk_cfg: HkConfig,
    svgd_cfg: SvgdConfig,
    kernel: Kernel,
    rng: np.random.Generator,
    block: Optional[slice] = None,
    compose: Optional[Callable[[np.ndarray, Kernel], Kernel]] = None,
) -> Tuple[ParticleSet, Trajectory]:
    """
    Alternate one heat kernel learning step with one SVGD update.

    Args:
        target: Density to sample.
        particles: Starting particles.
        hk_cfg: Kernel learning settings; one outer step runs per alternation.
        svgd_cfg: Step size and number of alternations.
        kernel: Learned kernel, trained in place.
        rng: Batch sampling source for the learner.
        block: Particle coordinates the learned kernel sees (all by default).
        compose: Builds the update kernel from the particles and the learned
            kernel; the learned kernel itself is used when omitted.

    Returns:
        (final particles, kernel learning trajectory)
    """
    block = block if block is not None else slice(None)
    learner = HeatKernelLearner(kernel, hk_cfg, rng)
    adagrad = AdagradState.from_config(svgd_cfg)
    trajectory = Trajectory()
    for _ in range(svgd_cfg.iterations):
        X = particles.positions
        if X.shape[0] >= 2:
            step = learner.run(X[:, block], steps=1)
            trajectory.records.extend(step.records)
            if step.aborted:
                trajectory.aborted, trajectory.error = True, step.error
                logger.error(f"HK-SVGD stopped at update {particles.iteration}: {step.error}")
                break
        step_kernel = compose(X, kernel) if compose is not None else kernel
        particles = svgd_step(particles, target, step_kernel, svgd_cfg.step_size, adagrad)
    return particles, trajectory
