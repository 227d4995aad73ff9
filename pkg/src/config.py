"""
Experiment configuration.

One JSON document describes a run: the experiment tag, the seed, the output
directory and a section per module. Every section is optional and falls back
to the defaults in ``src.constants``. Unknown keys are rejected.

Example::

    {
      "experiment": "svgd-gauss",
      "seed": 3,
      "hklearn": {"alpha": 1.0, "beta": 5.0, "lambda": 0.1},
      "svgd": {"step_size": 0.05, "iterations": 500}
    }
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.constants import (
    BNN_HIDDEN_UNITS,
    BNN_ITERATIONS,
    BNN_KERNEL_HIDDEN,
    BNN_PARTICLES,
    BNN_PRIOR_SCALE,
    BNN_STEP_SIZE,
    BNN_TRAIN_FRACTION,
    EXPERIMENTS,
    GAUSS_KERNEL_HIDDEN,
    GAUSS_SINKHORN_ITERS,
    TOY_BATCH_SIZE,
    TOY_CHECKPOINTS,
    TOY_DOMAIN,
    TOY_GRID_STEP,
    TOY_INIT_TIME,
    TOY_NUM_POINTS,
    TOY_SINKHORN_ITERS,
    TOY_TIME_PER_ITERATION,
)
from src.core.errors import ConfigError
from src.genmodel.config import GanConfig
from src.genmodel.toys import TOYS
from src.hklearn.config import HkConfig
from src.svgd.bnn import METHODS as BNN_METHODS
from src.svgd.datasets import SYNTHETIC_DATASETS
from src.svgd.stein import SvgdConfig

logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1


def _check_keys(cls, record: Dict[str, Any], section: str) -> None:
    unknown = set(record) - {f.name for f in fields(cls) if f.init}
    if unknown:
        raise ConfigError(f"Unknown {section} keys: {sorted(unknown)}")


@dataclass
class ToyConfig:
    """
    1-D heat kernel recovery on uniform samples.

    ``batch_size`` and ``sinkhorn_iters`` replace the ``hklearn`` values for
    this run. The output layer of the feature net is scaled so the initial
    kernel has the line kernel's curvature at the origin for ``init_time``.
    """

    num_points: int = TOY_NUM_POINTS
    domain: Tuple[float, float] = TOY_DOMAIN
    hidden: List[int] = field(default_factory=lambda: [32, 32])
    feature_dim: int = 8
    checkpoints: List[int] = field(default_factory=lambda: list(TOY_CHECKPOINTS))
    time_per_iteration: float = TOY_TIME_PER_ITERATION
    grid_step: float = TOY_GRID_STEP
    batch_size: Optional[int] = TOY_BATCH_SIZE
    sinkhorn_iters: int = TOY_SINKHORN_ITERS
    init_time: float = TOY_INIT_TIME

    def __post_init__(self):
        self.domain = tuple(float(v) for v in self.domain)
        if len(self.domain) != 2 or self.domain[0] >= self.domain[1]:
            raise ConfigError(f"domain must be an increasing pair, got {self.domain}")
        if self.num_points < 2:
            raise ConfigError("num_points must be >= 2")
        self.checkpoints = sorted({int(c) for c in self.checkpoints})
        if not self.checkpoints or self.checkpoints[0] < 1:
            raise ConfigError("checkpoints must be positive iteration indices")
        if self.time_per_iteration <= 0 or self.grid_step <= 0:
            raise ConfigError("time_per_iteration and grid_step must be positive")
        if self.batch_size is not None and self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.sinkhorn_iters < 1:
            raise ConfigError("sinkhorn_iters must be >= 1")
        if self.init_time <= 0:
            raise ConfigError("init_time must be positive")
        self.hidden = [int(w) for w in self.hidden]
        if self.feature_dim < 1 or any(w < 1 for w in self.hidden):
            raise ConfigError("feature network widths must be positive")

    @property
    def iterations(self) -> int:
        return self.checkpoints[-1]

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["domain"] = list(self.domain)
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "ToyConfig":
        _check_keys(cls, record, "toy1d")
        return cls(**record)


@dataclass
class GaussSamplingConfig:
    """
    Particles for the Gaussian-target sampler comparison.

    ``kernel_hidden`` and ``sinkhorn_iters`` shape the learned kernel of the
    hk-svgd method; the latter caps the Sinkhorn loop of its kernel steps in
    place of ``hklearn.sinkhorn_iters``.
    """

    particles: int = 10
    dim: int = 1
    init_mean: float = 5.0
    init_std: float = 1.0
    methods: List[str] = field(default_factory=lambda: ["svgd", "hk-svgd"])
    kernel_hidden: List[int] = field(default_factory=lambda: list(GAUSS_KERNEL_HIDDEN))
    sinkhorn_iters: int = GAUSS_SINKHORN_ITERS

    def __post_init__(self):
        if self.particles < 1 or self.dim < 1:
            raise ConfigError("particles and dim must be >= 1")
        self.kernel_hidden = [int(w) for w in self.kernel_hidden]
        if not self.kernel_hidden or min(self.kernel_hidden) < 1:
            raise ConfigError("kernel_hidden must list positive widths")
        if self.sinkhorn_iters < 1:
            raise ConfigError("sinkhorn_iters must be >= 1")
        if self.init_std < 0:
            raise ConfigError("init_std must be >= 0")
        self.methods = list(self.methods)
        bad = [m for m in self.methods if m not in ("svgd", "hk-svgd")]
        if bad or not self.methods:
            raise ConfigError(f"svgd_gauss methods must be drawn from svgd, hk-svgd; got {bad}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "GaussSamplingConfig":
        _check_keys(cls, record, "svgd_gauss")
        return cls(**record)


@dataclass
class BnnExperimentConfig:
    """Dataset, methods and network settings for BNN regression."""

    dataset: str = "sinusoid"
    samples: int = 200
    methods: List[str] = field(default_factory=lambda: ["svgd", "hk-svgd"])
    train_fraction: float = BNN_TRAIN_FRACTION
    hidden_units: int = BNN_HIDDEN_UNITS
    activation: str = "relu"
    particles: int = BNN_PARTICLES
    prior_scale: float = BNN_PRIOR_SCALE
    kernel_hidden: List[int] = field(default_factory=lambda: list(BNN_KERNEL_HIDDEN))
    iterations: int = BNN_ITERATIONS
    step_size: float = BNN_STEP_SIZE

    def __post_init__(self):
        if self.dataset not in SYNTHETIC_DATASETS:
            raise ConfigError(
                f"dataset must be one of {sorted(SYNTHETIC_DATASETS)} (use --dataset for CSV files)"
            )
        if self.samples < 3:
            raise ConfigError("samples must be >= 3")
        self.methods = list(self.methods)
        bad = [m for m in self.methods if m not in BNN_METHODS]
        if bad or not self.methods:
            raise ConfigError(f"bnn methods must be drawn from {BNN_METHODS}; got {bad}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        self.kernel_hidden = [int(w) for w in self.kernel_hidden]
        self.svgd_config()

    def svgd_config(self) -> SvgdConfig:
        return SvgdConfig(step_size=self.step_size, iterations=self.iterations, adagrad=True)

    def spec_kwargs(self) -> Dict[str, Any]:
        return {
            "hidden_units": self.hidden_units,
            "activation": self.activation,
            "particles": self.particles,
            "prior_scale": self.prior_scale,
            "kernel_hidden": list(self.kernel_hidden),
        }

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "BnnExperimentConfig":
        _check_keys(cls, record, "bnn")
        return cls(**record)


@dataclass
class ExperimentConfig:
    """
    Everything one run needs.

    Args:
        experiment: One of toy1d, svgd-gauss, svgd-bnn, gan2d, validate.
        seed: Unsigned 64-bit seed of the run's single random generator.
        out_dir: Directory the run writes into.
        record_wallclock: Add wall-clock seconds to metric records. Off by
            default so repeated runs produce byte-identical metric files.
        gan_target: 2-D toy distribution for gan2d.
    """

    experiment: str = "toy1d"
    seed: int = 0
    out_dir: str = "runs"
    record_wallclock: bool = False
    hklearn: HkConfig = field(default_factory=HkConfig)
    svgd: SvgdConfig = field(default_factory=SvgdConfig)
    toy1d: ToyConfig = field(default_factory=ToyConfig)
    svgd_gauss: GaussSamplingConfig = field(default_factory=GaussSamplingConfig)
    bnn: BnnExperimentConfig = field(default_factory=BnnExperimentConfig)
    gan: GanConfig = field(default_factory=GanConfig)
    gan_target: str = "ring"

    SECTIONS = {
        "hklearn": HkConfig,
        "svgd": SvgdConfig,
        "toy1d": ToyConfig,
        "svgd_gauss": GaussSamplingConfig,
        "bnn": BnnExperimentConfig,
        "gan": GanConfig,
    }

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got '{self.experiment}'")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must be an unsigned 64-bit value, got {self.seed}")
        if self.gan_target not in TOYS:
            raise ConfigError(f"gan_target must be one of {sorted(TOYS)}")

    def with_overrides(
        self,
        experiment: Optional[str] = None,
        seed: Optional[int] = None,
        out_dir: Optional[Union[str, Path]] = None,
    ) -> "ExperimentConfig":
        changes: Dict[str, Any] = {}
        if experiment is not None:
            changes["experiment"] = experiment
        if seed is not None:
            changes["seed"] = seed
        if out_dir is not None:
            changes["out_dir"] = str(out_dir)
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "experiment": self.experiment,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "record_wallclock": self.record_wallclock,
            "gan_target": self.gan_target,
        }
        for name in self.SECTIONS:
            record[name] = getattr(self, name).to_dict()
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(record, dict):
            raise ConfigError("Configuration document must be a JSON object")
        record = dict(record)
        known = {f.name for f in fields(cls)}
        unknown = set(record) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        for name, section in cls.SECTIONS.items():
            if name in record:
                value = record[name]
                if not isinstance(value, dict):
                    raise ConfigError(f"Section '{name}' must be an object")
                try:
                    record[name] = section.from_dict(value)
                except TypeError as exc:
                    raise ConfigError(f"Invalid '{name}' section: {exc}") from exc
        return cls(**record)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """
        Read a JSON configuration document.

        Raises:
            FileNotFoundError: If ``path`` does not exist.
            ConfigError: On malformed JSON or invalid values.
        """
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Configuration file not found: {path}")
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        cfg = cls.from_dict(record)
        logger.debug(f"Loaded {cfg.experiment} configuration from {path}")
        return cfg
