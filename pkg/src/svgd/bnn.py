"""
Bayesian neural network regression sampled with SVGD.

Each particle is one flattened weight vector of a single-hidden-layer network
plus the log precision of the observation noise, laid out as

    [W1, b1, log_gamma | W2, b2]

The left block uses a median-bandwidth RBF kernel. For the heat-kernel
methods the right block (the output layer) gets a learned kernel, and the two
are multiplied.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from src.constants import (
    BNN_GAMMA_PRIOR,
    BNN_HIDDEN_UNITS,
    BNN_ITERATIONS,
    BNN_KERNEL_HIDDEN,
    BNN_PARTICLES,
    BNN_PRIOR_SCALE,
    BNN_STEP_SIZE,
    BNN_TRAIN_FRACTION,
)
from src.core import autodiff as ad
from src.core.autodiff import ParamStore, Tape, Tensor
from src.core.errors import ConfigError, DomainError, NonFiniteError
from src.core.nn import ACTIVATIONS, Mlp, MlpSpec, activation_fn
from src.core.optim import AdamState, adam_step
from src.hklearn.config import HkConfig
from src.hklearn.learner import HeatKernelLearner, Trajectory
from src.kernels.base import Kernel, ProductKernel
from src.kernels.deep_rbf import DeepRbfKernel
from src.svgd.datasets import RegressionDataset
from src.svgd.stein import (
    ParticleSet,
    SvgdConfig,
    TargetDensity,
    hk_svgd,
    make_learned_kernel,
    rbf_median_kernel,
    stein_direction,
    svgd,
)

logger = logging.getLogger(__name__)

METHODS = ("svgd", "hk-svgd", "hk-isvgd")


@dataclass
class BnnSpec:
    """Network widths, priors and particle count."""

    input_dim: int
    hidden_units: int = BNN_HIDDEN_UNITS
    activation: str = "relu"
    prior_scale: float = BNN_PRIOR_SCALE
    gamma_prior: Tuple[float, float] = BNN_GAMMA_PRIOR
    particles: int = BNN_PARTICLES
    kernel_hidden: Sequence[int] = field(default_factory=lambda: list(BNN_KERNEL_HIDDEN))
    generator_noise_dim: int = 8

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_units < 1:
            raise ConfigError("BNN widths must be positive")
        if self.particles < 1:
            raise ConfigError("BNN needs at least one particle")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        if self.prior_scale <= 0:
            raise ConfigError("prior_scale must be positive")
        self.gamma_prior = tuple(float(v) for v in self.gamma_prior)
        if len(self.gamma_prior) != 2 or min(self.gamma_prior) <= 0:
            raise ConfigError("gamma_prior must be a positive (shape, rate) pair")
        self.kernel_hidden = [int(w) for w in self.kernel_hidden]
        if not self.kernel_hidden or min(self.kernel_hidden) < 1:
            raise ConfigError("kernel_hidden must list positive widths")

    @property
    def widths(self) -> Tuple[int, int, int]:
        return (self.input_dim, self.hidden_units, 1)

    @property
    def first_block(self) -> slice:
        """W1, b1 and the noise log precision."""
        return slice(0, (self.input_dim + 1) * self.hidden_units + 1)

    @property
    def last_block(self) -> slice:
        """W2 and b2."""
        return slice(self.first_block.stop, self.num_weights)

    @property
    def num_weights(self) -> int:
        return (self.input_dim + 1) * self.hidden_units + 1 + self.hidden_units + 1

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["gamma_prior"] = list(self.gamma_prior)
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "BnnSpec":
        unknown = set(record) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown bnn keys: {sorted(unknown)}")
        return cls(**record)


def unpack(spec: BnnSpec, theta) -> Dict[str, Tensor]:
    """Split (P, D) particles into batched layer tensors."""
    theta = ad.as_tensor(theta)
    P = theta.shape[0]
    d, h = spec.input_dim, spec.hidden_units
    w1_end = d * h
    b1_end = w1_end + h
    w2_start = b1_end + 1
    return {
        "W1": ad.reshape(theta[:, :w1_end], (P, d, h)),
        "b1": ad.reshape(theta[:, w1_end:b1_end], (P, 1, h)),
        "log_gamma": theta[:, b1_end],
        "W2": ad.reshape(theta[:, w2_start : w2_start + h], (P, h, 1)),
        "b2": ad.reshape(theta[:, w2_start + h :], (P, 1, 1)),
    }


def forward(spec: BnnSpec, theta, X: np.ndarray) -> Tensor:
    """(P, N) predictions of every particle network on ``X``."""
    layers = unpack(spec, theta)
    hidden = activation_fn(spec.activation)(ad.matmul(X, layers["W1"]) + layers["b1"])
    out = ad.matmul(hidden, layers["W2"]) + layers["b2"]
    return ad.reshape(out, (out.shape[0], out.shape[1]))


class BnnPosterior(TargetDensity):
    """
    Log posterior of the particle networks on standardized data.

    Gaussian likelihood with precision gamma, isotropic Gaussian prior on the
    weights and a Gamma(shape, rate) prior on gamma, parametrized by
    log gamma.
    """

    def __init__(self, spec: BnnSpec, X: np.ndarray, y: np.ndarray):
        self.spec = spec
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64).reshape(-1)
        self.dim = spec.num_weights

    def log_prob_tensor(self, theta: Tensor) -> Tensor:
        spec = self.spec
        log_gamma = unpack(spec, theta)["log_gamma"]
        gamma = ad.exp(log_gamma)
        resid = forward(spec, theta, self.X) - self.y
        n = self.y.size
        loglik = 0.5 * n * log_gamma - 0.5 * gamma * ad.tsum(ad.square(resid), axis=1)
        weights_sq = ad.tsum(ad.square(theta), axis=1) - ad.square(log_gamma)
        log_prior = -0.5 * weights_sq / spec.prior_scale**2
        shape, rate = spec.gamma_prior
        log_prior_gamma = shape * log_gamma - rate * gamma
        return loglik + log_prior + log_prior_gamma


def init_particles(spec: BnnSpec, rng: np.random.Generator) -> np.ndarray:
    d, h = spec.input_dim, spec.hidden_units
    theta = np.zeros((spec.particles, spec.num_weights))
    theta[:, : d * h] = rng.standard_normal((spec.particles, d * h)) / np.sqrt(d + 1.0)
    w2 = spec.last_block.start
    theta[:, w2 : w2 + h] = rng.standard_normal((spec.particles, h)) / np.sqrt(h + 1.0)
    return theta


def predictive_log_likelihood(
    predictions: np.ndarray, noise_var: np.ndarray, y: np.ndarray
) -> float:
    """
    Mean over points of log (1/P) sum_p N(y; prediction_p, noise_var_p).

    Args:
        predictions: (P, N) per-particle predictive means.
        noise_var: (P,) per-particle observation variances.
        y: (N,) targets.
    """
    predictions = np.atleast_2d(predictions)
    noise_var = np.asarray(noise_var, dtype=np.float64).reshape(-1, 1)
    if np.any(noise_var <= 0):
        raise DomainError("Observation variances must be positive")
    log_dens = -0.5 * np.log(2.0 * np.pi * noise_var) - 0.5 * (y - predictions) ** 2 / noise_var
    per_point = logsumexp(log_dens, axis=0) - np.log(predictions.shape[0])
    return float(np.mean(per_point))


@dataclass
class BnnResult:
    method: str
    rmse: float
    test_ll: float
    particles: np.ndarray
    trajectory: Optional[Trajectory] = None
    diverged: bool = False
    error: Optional[str] = None

    def metrics(self) -> Dict[str, Any]:
        return {"method": self.method, "rmse": self.rmse, "test_ll": self.test_ll}


class _Standardizer:
    def __init__(self, train: RegressionDataset):
        self.x_mean = train.X.mean(axis=0)
        x_std = train.X.std(axis=0)
        self.x_std = np.where(x_std > 1e-12, x_std, 1.0)
        self.y_mean = float(train.y.mean())
        y_std = float(train.y.std())
        self.y_std = y_std if y_std > 1e-12 else 1.0

    def features(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_mean) / self.x_std


def evaluate(
    spec: BnnSpec, theta: np.ndarray, test: RegressionDataset, scaler: _Standardizer
) -> Tuple[float, float]:
    """(RMSE, test log-likelihood) in the original target units."""
    pred = forward(spec, theta, scaler.features(test.X)).data * scaler.y_std + scaler.y_mean
    rmse = float(np.sqrt(np.mean((pred.mean(axis=0) - test.y) ** 2)))
    log_gamma = theta[:, spec.first_block.stop - 1]
    noise_var = np.exp(-log_gamma) * scaler.y_std**2
    return rmse, predictive_log_likelihood(pred, noise_var, test.y)


def block_product_kernel(spec: BnnSpec, X: np.ndarray, learned: Kernel) -> ProductKernel:
    """RBF-median on the first block times the learned kernel on the last."""
    first = spec.first_block
    return ProductKernel([(first, rbf_median_kernel(X[:, first])), (spec.last_block, learned)])


def last_layer_kernel(spec: BnnSpec, rng: np.random.Generator, theta0: np.ndarray) -> DeepRbfKernel:
    """
    Learned kernel on the last-layer block: the ``spec.kernel_hidden`` layers
    followed by a linear feature layer as wide as the last of them.
    """
    last = spec.last_block
    learned = make_learned_kernel(
        last.stop - last.start, rng, hidden=spec.kernel_hidden, out_dim=spec.kernel_hidden[-1]
    )
    learned.fit_input_scaling(theta0[:, last])
    return learned


def _amortized_hk_svgd(
    posterior: BnnPosterior,
    spec: BnnSpec,
    svgd_cfg: SvgdConfig,
    hk_cfg: HkConfig,
    learned: Kernel,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, Trajectory]:
    """
    Train a noise-to-weights generator by pushing its samples along the
    HK-SVGD direction; returns samples from the final generator.
    """
    store = ParamStore()
    generator = Mlp(
        MlpSpec.make(spec.generator_noise_dim, (64,), spec.num_weights, activation="tanh"),
        store,
        "g",
        rng,
    )
    optimizer = AdamState.for_params(store, svgd_cfg.step_size)
    learner = HeatKernelLearner(learned, hk_cfg, rng)
    block = spec.last_block
    trajectory = Trajectory()
    P = spec.particles

    for _ in range(svgd_cfg.iterations):
        noise = rng.standard_normal((P, spec.generator_noise_dim))
        tape = Tape(lambda: generator(noise), store)
        samples = ad.forward(tape)
        theta = samples.data
        if P >= 2:
            step = learner.run(theta[:, block], steps=1)
            trajectory.records.extend(step.records)
            if step.aborted:
                trajectory.aborted, trajectory.error = True, step.error
                break
        kernel = block_product_kernel(spec, theta, learned)
        phi = stein_direction(kernel, theta, posterior.grad_log_prob(theta))
        loss = -ad.tsum(samples * phi) / float(P)
        adam_step(store, ad.backward(tape, loss), optimizer)

    final_noise = rng.standard_normal((P, spec.generator_noise_dim))
    return generator(final_noise).data.copy(), trajectory


def bnn_regression(
    dataset: RegressionDataset,
    spec: BnnSpec,
    method: str,
    rng: np.random.Generator,
    svgd_cfg: Optional[SvgdConfig] = None,
    hk_cfg: Optional[HkConfig] = None,
    train_fraction: float = BNN_TRAIN_FRACTION,
) -> BnnResult:
    """
    Fit a particle BNN on a random split of ``dataset`` and score the held-out part.

    Args:
        dataset: Regression data.
        spec: Network and prior description.
        method: "svgd" (RBF-median everywhere), "hk-svgd" (learned kernel on
            the output layer) or "hk-isvgd" (amortized HK-SVGD generator).
        rng: Split, initialization and learner source.
        svgd_cfg: Update schedule (AdaGrad on by default).
        hk_cfg: Kernel learning settings for the heat-kernel methods.
        train_fraction: Share of rows used for training.

    Returns:
        BnnResult; a divergent run has ``diverged`` set and NaN metrics.
    """
    if method not in METHODS:
        raise ValueError(f"Unknown BNN method '{method}'; use one of {METHODS}")
    if spec.input_dim != dataset.input_dim:
        raise ConfigError(
            f"BnnSpec.input_dim={spec.input_dim} but the dataset has {dataset.input_dim} features"
        )
    svgd_cfg = svgd_cfg or SvgdConfig(
        step_size=BNN_STEP_SIZE, iterations=BNN_ITERATIONS, adagrad=True
    )
    hk_cfg = hk_cfg or HkConfig(outer_steps=1)
    train, test = dataset.split(rng, train_fraction)
    scaler = _Standardizer(train)
    posterior = BnnPosterior(spec, scaler.features(train.X), (train.y - scaler.y_mean) / scaler.y_std)
    theta0 = init_particles(spec, rng)
    trajectory = None

    logger.info(
        f"BNN {method}: {len(train)} train / {len(test)} test rows, "
        f"{spec.particles} particles of dimension {spec.num_weights}"
    )
    try:
        if method == "svgd":
            theta = svgd(posterior, ParticleSet(theta0), svgd_cfg).positions
        else:
            last = spec.last_block
            learned = last_layer_kernel(spec, rng, theta0)
            if method == "hk-svgd":
                particles, trajectory = hk_svgd(
                    posterior,
                    ParticleSet(theta0),
                    hk_cfg,
                    svgd_cfg,
                    learned,
                    rng,
                    block=last,
                    compose=lambda X, kernel: block_product_kernel(spec, X, kernel),
                )
                theta = particles.positions
            else:
                theta, trajectory = _amortized_hk_svgd(
                    posterior, spec, svgd_cfg, hk_cfg, learned, rng
                )
        rmse, test_ll = evaluate(spec, theta, test, scaler)
    except (NonFiniteError, DomainError) as exc:
        logger.error(f"BNN {method} diverged: {exc}")
        return BnnResult(method, math.nan, math.nan, theta0, trajectory, True, str(exc))

    if trajectory is not None and trajectory.aborted:
        logger.warning(f"BNN {method}: kernel learning stopped early ({trajectory.error})")
    logger.info(f"BNN {method}: RMSE {rmse:.4f}, test LL {test_ll:.4f}")
    return BnnResult(method, rmse, test_ll, theta, trajectory)
