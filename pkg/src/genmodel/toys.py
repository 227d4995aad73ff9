"""2-D toy distributions and a mode coverage metric."""

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from src.constants import MODE_COVERAGE_FRACTION, RING_MODES, RING_RADIUS, RING_STD

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def single_gaussian(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.standard_normal((count, 2)) * 0.5 + np.array([1.0, -1.0])


def ring_centers(modes: int = RING_MODES, radius: float = RING_RADIUS) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(modes) / modes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def gaussian_ring(
    rng: np.random.Generator,
    count: int,
    modes: int = RING_MODES,
    radius: float = RING_RADIUS,
    std: float = RING_STD,
) -> np.ndarray:
    centers = ring_centers(modes, radius)
    which = rng.integers(0, modes, size=count)
    return centers[which] + std * rng.standard_normal((count, 2))


def two_moons(rng: np.random.Generator, count: int, noise: float = 0.05) -> np.ndarray:
    upper = rng.random(count) < 0.5
    angle = np.pi * rng.random(count)
    x = np.where(upper, np.cos(angle), 1.0 - np.cos(angle))
    y = np.where(upper, np.sin(angle), 0.5 - np.sin(angle))
    return np.stack([x, y], axis=1) + noise * rng.standard_normal((count, 2))


TOYS: Dict[str, Sampler] = {
    "gaussian": single_gaussian,
    "ring": gaussian_ring,
    "moons": two_moons,
}


def toy_sampler(name: str) -> Sampler:
    if name not in TOYS:
        raise ValueError(f"Unknown toy distribution '{name}'; use one of {sorted(TOYS)}")
    return TOYS[name]


@dataclass
class ModeCoverage:
    fractions: np.ndarray
    threshold: float

    @property
    def covered(self) -> int:
        return int(np.sum(self.fractions >= self.threshold))

    @property
    def all_covered(self) -> bool:
        return self.covered == self.fractions.size


def mode_coverage(
    samples: np.ndarray,
    centers: np.ndarray,
    threshold: float = MODE_COVERAGE_FRACTION,
) -> ModeCoverage:
    """Share of samples whose nearest center is each mode."""
    samples = np.atleast_2d(samples)
    dist = np.sum((samples[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    counts = np.bincount(np.argmin(dist, axis=1), minlength=centers.shape[0])
    return ModeCoverage(counts / samples.shape[0], threshold)
