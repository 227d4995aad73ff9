"""Heat kernel learning hyperparameters."""

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional

from src.constants import (
    HK_ALPHA,
    HK_BETA,
    HK_INNER_STEPS,
    HK_LAMBDA,
    HK_LEARNING_RATE,
    SINKHORN_MAX_ITER,
)
from src.core.errors import ConfigError

ENTROPY_ESTIMATORS = ("A", "B")
MEASURE_MODES = ("normalized", "uniform-init", "unnormalized")


@dataclass
class HkConfig:
    """
    Weights and schedule of the JKO heat kernel learning loop.

    ``tau`` is derived as alpha / (2 beta) and cannot be set independently.
    """

    alpha: float = HK_ALPHA
    beta: float = HK_BETA
    lam: float = HK_LAMBDA
    outer_steps: int = 50
    inner_steps: int = HK_INNER_STEPS
    batch_size: Optional[int] = None
    learning_rate: float = HK_LEARNING_RATE
    entropy_estimator: str = "A"
    measure_mode: str = "normalized"
    sinkhorn_eps: Optional[float] = None
    sinkhorn_iters: int = SINKHORN_MAX_ITER
    safeguard: bool = True
    tau: float = field(init=False)

    def __post_init__(self):
        for name in ("alpha", "beta", "lam"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.outer_steps < 0 or self.inner_steps < 0:
            raise ConfigError("outer_steps and inner_steps must be >= 0")
        if self.batch_size is not None and self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.entropy_estimator not in ENTROPY_ESTIMATORS:
            raise ConfigError(f"entropy_estimator must be one of {ENTROPY_ESTIMATORS}")
        if self.measure_mode not in MEASURE_MODES:
            raise ConfigError(f"measure_mode must be one of {MEASURE_MODES}")
        if self.sinkhorn_eps is not None and self.sinkhorn_eps <= 0:
            raise ConfigError("sinkhorn_eps must be positive")
        if self.sinkhorn_iters < 1:
            raise ConfigError("sinkhorn_iters must be >= 1")
        self.tau = self.alpha / (2.0 * self.beta) if self.beta > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["lambda"] = record.pop("lam")
        if math.isinf(record["tau"]):
            record["tau"] = None
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "HkConfig":
        record = dict(record)
        if "lambda" in record:
            record["lam"] = record.pop("lambda")
        tau = record.pop("tau", None)
        known = {f.name for f in fields(cls) if f.init}
        unknown = set(record) - known
        if unknown:
            raise ConfigError(f"Unknown hklearn keys: {sorted(unknown)}")
        cfg = cls(**record)
        if tau is not None and not math.isclose(tau, cfg.tau, rel_tol=1e-12):
            raise ConfigError(f"tau={tau} contradicts alpha/(2 beta)={cfg.tau}")
        return cfg
