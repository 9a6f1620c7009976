"""Gaussian RBF basis functions and design matrices.

Convention: ``rbf(x, c, sigma) = exp(-||x - c||^2 / (2 sigma^2))``.

Squared distances accumulate coordinate by coordinate, left to right, in
64-bit arithmetic.  This is slower than the Gram-matrix expansion but the
accumulation order is fixed, so design matrices are bit-identical across
runs and across row-parallel evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SampleSet


@dataclass(frozen=True)
class KernelBasis:
    """RBF centers (b x d) and a shared positive width."""

    centers: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError(f"centers must be a non-empty 2-D array, got {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise ValueError("centers contain non-finite entries")
        if not self.sigma > 0:
            raise ValueError(f"need sigma > 0, got {self.sigma}")
        object.__setattr__(self, "centers", centers)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


def squared_distances(xs: np.ndarray, cs: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, (n x b) for (n x d) vs (b x d).

    Coordinates accumulate in index order; each output entry is the exact
    left-to-right sum of squared coordinate differences.
    """
    xs = np.asarray(xs, dtype=np.float64)
    cs = np.asarray(cs, dtype=np.float64)
    if xs.ndim != 2 or cs.ndim != 2 or xs.shape[1] != cs.shape[1]:
        raise ValueError(f"dimension mismatch: {xs.shape} vs {cs.shape}")
    out = np.zeros((xs.shape[0], cs.shape[0]))
    for k in range(xs.shape[1]):
        diff = xs[:, k, None] - cs[None, :, k]
        out += diff * diff
    return out


def rbf(x: np.ndarray, c: np.ndarray, sigma: float) -> float:
    """Gaussian kernel value for one pair of d-vectors; lies in (0, 1]."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    c = np.asarray(c, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != c.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {c.shape[1]}")
    if not sigma > 0:
        raise ValueError(f"need sigma > 0, got {sigma}")
    return float(np.exp(-squared_distances(x, c)[0, 0] / (2.0 * sigma * sigma)))


def design_matrix(samples: SampleSet, basis: KernelBasis) -> np.ndarray:
    """n x b matrix with entry (j, l) = rbf(x_j, c_l, sigma)."""
    if samples.d != basis.d:
        raise ValueError(f"dimension mismatch: samples d={samples.d}, basis d={basis.d}")
    return kernel_matrix(samples.data, basis.centers, basis.sigma)


def kernel_matrix(xs: np.ndarray, cs: np.ndarray, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"need sigma > 0, got {sigma}")
    return np.exp(-squared_distances(xs, cs) / (2.0 * sigma * sigma))


def median_pairwise_distance(xs: np.ndarray, max_points: int = 500) -> float:
    """Median Euclidean distance over distinct pairs, the bandwidth heuristic.

    Large inputs are thinned to ``max_points`` rows by even striding, keeping
    the estimate a deterministic function of the input.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n = xs.shape[0]
    if n > max_points:
        idx = np.linspace(0, n - 1, max_points).astype(int)
        xs = xs[idx]
        n = max_points
    if n < 2:
        return 1.0
    sq = squared_distances(xs, xs)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(sq[iu])))
    return med if med > 0 else 1.0
