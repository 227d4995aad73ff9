"""Settings of the generative training loop."""

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List

from src.constants import (
    GAN_ALPHA,
    GAN_BATCH_SIZE,
    GAN_BETA,
    GAN_EVAL_SAMPLES,
    GAN_FEATURE_DIM,
    GAN_GAMMAS,
    GAN_GENERATOR_LR,
    GAN_GENERATOR_STEPS,
    GAN_KERNEL_LR,
    GAN_KERNEL_STEPS,
    GAN_LAMBDA,
    GAN_ZETA,
    GENERATOR_NOISE_DIM,
    SINKHORN_MAX_ITER,
)
from src.core.errors import ConfigError
from src.genmodel.losses import ESTIMATORS
from src.hklearn.config import ENTROPY_ESTIMATORS, MEASURE_MODES, HkConfig

LOSSES = ("mmd", "smmd")
KERNEL_FAMILIES = ("deep-rbf", "random-feature")


@dataclass
class GanConfig:
    """
    Kernel objective weights and the alternating schedule.

    ``gamma1``..``gamma4`` weight the cross-kernel, cross-feature-distance,
    real-kernel and real-feature-distance terms; ``gamma5`` the frequency
    penalty of the random-feature family.
    """

    gamma1: float = GAN_GAMMAS[0]
    gamma2: float = GAN_GAMMAS[1]
    gamma3: float = GAN_GAMMAS[2]
    gamma4: float = GAN_GAMMAS[3]
    gamma5: float = GAN_GAMMAS[4]
    alpha: float = GAN_ALPHA
    beta: float = GAN_BETA
    lam: float = GAN_LAMBDA
    zeta: float = GAN_ZETA
    loss: str = "mmd"
    kernel_family: str = "deep-rbf"
    estimator: str = "biased"
    entropy_estimator: str = "A"
    measure_mode: str = "normalized"
    generator_steps: int = GAN_GENERATOR_STEPS
    kernel_steps: int = GAN_KERNEL_STEPS
    batch_size: int = GAN_BATCH_SIZE
    generator_lr: float = GAN_GENERATOR_LR
    kernel_lr: float = GAN_KERNEL_LR
    noise_dim: int = GENERATOR_NOISE_DIM
    generator_hidden: List[int] = field(default_factory=lambda: [64, 64])
    kernel_hidden: List[int] = field(default_factory=lambda: [32, 32])
    feature_dim: int = GAN_FEATURE_DIM
    scale_kernel_objective: bool = False
    sinkhorn_iters: int = SINKHORN_MAX_ITER
    eval_samples: int = GAN_EVAL_SAMPLES

    def __post_init__(self):
        weights = ("gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "alpha", "beta", "lam")
        for name in weights:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}")
        if self.loss == "smmd" or self.scale_kernel_objective:
            if self.zeta <= 0:
                raise ConfigError("zeta must be positive when SMMD scaling is active")
        if self.kernel_family not in KERNEL_FAMILIES:
            raise ConfigError(f"kernel_family must be one of {KERNEL_FAMILIES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}")
        if self.entropy_estimator not in ENTROPY_ESTIMATORS:
            raise ConfigError(f"entropy_estimator must be one of {ENTROPY_ESTIMATORS}")
        if self.measure_mode not in MEASURE_MODES:
            raise ConfigError(f"measure_mode must be one of {MEASURE_MODES}")
        if self.generator_steps < 0 or self.kernel_steps < 0:
            raise ConfigError("generator_steps and kernel_steps must be >= 0")
        if self.batch_size < 2 or self.eval_samples < 2:
            raise ConfigError("batch_size and eval_samples must be >= 2")
        if self.generator_lr <= 0 or self.kernel_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if self.noise_dim < 1 or self.feature_dim < 1:
            raise ConfigError("noise_dim and feature_dim must be >= 1")
        self.generator_hidden = [int(w) for w in self.generator_hidden]
        self.kernel_hidden = [int(w) for w in self.kernel_hidden]

    @property
    def spectral_norm(self) -> bool:
        """Feature layers are spectrally normalized unless the objective is SMMD-scaled."""
        return not self.scale_kernel_objective

    def hk_config(self) -> HkConfig:
        """Entropy and transport weights for the pooled-batch measure."""
        return HkConfig(
            alpha=self.alpha,
            beta=self.beta,
            lam=0.0,
            outer_steps=1,
            inner_steps=self.kernel_steps,
            learning_rate=self.kernel_lr,
            entropy_estimator=self.entropy_estimator,
            measure_mode=self.measure_mode,
            sinkhorn_iters=self.sinkhorn_iters,
        )

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["lambda"] = record.pop("lam")
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "GanConfig":
        record = dict(record)
        if "lambda" in record:
            record["lam"] = record.pop("lambda")
        unknown = set(record) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown gan keys: {sorted(unknown)}")
        return cls(**record)
