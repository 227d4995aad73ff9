"""Regression datasets for the Bayesian neural network harness."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Tuple, Union

import numpy as np
import pandas as pd

from src.constants import BNN_TRAIN_FRACTION
from src.core.errors import ShapeError

logger = logging.getLogger(__name__)


@dataclass
class RegressionDataset:
    """Feature matrix ``X`` (n, d) and targets ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.size:
            raise ShapeError(f"{self.X.shape[0]} feature rows for {self.y.size} targets")
        if self.y.size < 1:
            raise ValueError("A regression dataset needs at least one row")

    def __len__(self) -> int:
        return self.y.size

    @property
    def input_dim(self) -> int:
        return self.X.shape[1]

    def split(
        self, rng: np.random.Generator, train_fraction: float = BNN_TRAIN_FRACTION
    ) -> Tuple["RegressionDataset", "RegressionDataset"]:
        """Random train/test split with at least two training rows and one test row."""
        if not 0.0 < train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        n = len(self)
        if n < 3:
            raise ValueError("Splitting needs at least three rows")
        n_train = min(max(int(round(train_fraction * n)), 2), n - 1)
        order = rng.permutation(n)
        train, test = order[:n_train], order[n_train:]
        return (
            RegressionDataset(self.X[train], self.y[train], f"{self.name}-train"),
            RegressionDataset(self.X[test], self.y[test], f"{self.name}-test"),
        )


def linear_dataset(
    rng: np.random.Generator, n: int = 200, dim: int = 1, noise: float = 0.0
) -> RegressionDataset:
    X = rng.uniform(-2.0, 2.0, size=(n, dim))
    coef = rng.standard_normal(dim)
    y = X @ coef + 0.5 + noise * rng.standard_normal(n)
    return RegressionDataset(X, y, "linear")


def sinusoid_dataset(
    rng: np.random.Generator, n: int = 200, noise: float = 0.1
) -> RegressionDataset:
    X = rng.uniform(-3.0, 3.0, size=(n, 1))
    y = np.sin(2.0 * X[:, 0]) + noise * rng.standard_normal(n)
    return RegressionDataset(X, y, "sinusoid")


def heteroscedastic_dataset(rng: np.random.Generator, n: int = 200) -> RegressionDataset:
    X = rng.uniform(-3.0, 3.0, size=(n, 1))
    scale = 0.05 + 0.2 * np.abs(X[:, 0])
    y = 0.5 * X[:, 0] + np.cos(X[:, 0]) + scale * rng.standard_normal(n)
    return RegressionDataset(X, y, "heteroscedastic")


SYNTHETIC_DATASETS: Dict[str, Callable[..., RegressionDataset]] = {
    "linear": linear_dataset,
    "sinusoid": sinusoid_dataset,
    "heteroscedastic": heteroscedastic_dataset,
}


def make_dataset(name: str, rng: np.random.Generator, **kwargs) -> RegressionDataset:
    if name not in SYNTHETIC_DATASETS:
        raise ValueError(f"Unknown dataset '{name}'; use one of {sorted(SYNTHETIC_DATASETS)}")
    return SYNTHETIC_DATASETS[name](rng, **kwargs)


def load_csv_dataset(path: Union[str, Path]) -> RegressionDataset:
    """
    Read a header-row CSV whose last column is the target.

    Raises:
        FileNotFoundError: Naming ``path`` when it does not exist.
        ValueError: On fewer than two columns or non-numeric cells.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    frame = pd.read_csv(path)
    if frame.shape[1] < 2:
        raise ValueError(f"{path}: expected feature columns followed by a target column")
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cells ({exc})") from exc
    logger.info(f"Loaded {frame.shape[0]} rows x {frame.shape[1] - 1} features from {path}")
    return RegressionDataset(values[:, :-1], values[:, -1], path.stem)
