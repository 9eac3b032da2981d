"""Feature standardization and minority oversampling.

The scaler is a plain per-feature z-score fit on training data only.
Oversampling synthesizes minority samples by interpolating between a
minority point and one of its k nearest minority neighbors:

    synthetic = x + t * (neighbor - x),   t ~ U[0, 1)

Both transforms are fit inside each cross-validation training fold; test
folds only ever see apply_scaler with the training fold's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, ResampleError
from .rng import substream

STD_FLOOR = 1e-12
DEFAULT_K_NEIGHBORS = 5


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]


def fit_scaler(x: np.ndarray) -> ScalerParams:
    """Fit means and population stds; constant features get std 1.0."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise FitError(f"need a nonempty 2-D matrix to fit a scaler, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise FitError("scaler input contains non-finite values")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return ScalerParams(mean=mean, std=std)


def apply_scaler(x: np.ndarray, params: ScalerParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.n_features:
        raise FitError(f"expected shape (n, {params.n_features}), got {x.shape}")
    return (x - params.mean) / params.std


def invert_scaler(z: np.ndarray, params: ScalerParams) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return z * params.std + params.mean


def smote_sample(
    x_minority: np.ndarray,
    n_synthetic: int,
    k_neighbors: int = DEFAULT_K_NEIGHBORS,
    seed: int = 0,
) -> np.ndarray:
    """Generate n_synthetic interpolated minority points.

    Neighbors are the k nearest other minority points by Euclidean
    distance, ties broken by index; k is capped at len(x_minority) - 1.
    Base point and neighbor are picked with a seeded generator, so output
    is a deterministic function of (x_minority, n_synthetic, k, seed).
    """
    x = np.asarray(x_minority, dtype=np.float64)
    if x.ndim != 2:
        raise ResampleError(f"minority matrix must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if n < 2:
        raise ResampleError(f"need at least 2 minority samples to interpolate, got {n}")
    if n_synthetic < 0:
        raise ResampleError("n_synthetic must be nonnegative")
    if k_neighbors < 1:
        raise ResampleError("k_neighbors must be at least 1")
    if n_synthetic == 0:
        return np.empty((0, x.shape[1]), dtype=np.float64)
    k = min(k_neighbors, n - 1)

    # Pairwise squared distances; argsort ranks ties by index.  Self is
    # excluded by index, not by zero distance, so duplicate points remain
    # legal neighbors of each other.
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    neighbor_ids = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        order = [j for j in np.argsort(d2[i], kind="stable") if j != i]
        neighbor_ids[i] = order[:k]

    rng = substream(seed, "smote")
    base = rng.integers(0, n, size=n_synthetic)
    pick = rng.integers(0, k, size=n_synthetic)
    t = rng.random(n_synthetic)
    nn = neighbor_ids[base, pick]
    return x[base] + t[:, None] * (x[nn] - x[base])


def smote_balance(
    x: np.ndarray,
    y: np.ndarray,
    k_neighbors: int = DEFAULT_K_NEIGHBORS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class of a binary problem to exact balance.

    Synthetic rows are appended after the originals; returns (x_out, y_out).
    Already balanced data passes through unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] != y.shape[0]:
        raise ResampleError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
    classes, counts = np.unique(y, return_counts=True)
    if classes.shape[0] != 2:
        raise ResampleError(f"expected exactly 2 classes, got {classes.shape[0]}")
    if counts[0] == counts[1]:
        return x.copy(), y.copy()
    minority_label = classes[np.argmin(counts)]
    n_needed = int(abs(counts[0] - counts[1]))
    x_min = x[y == minority_label]
    synthetic = smote_sample(x_min, n_needed, k_neighbors=k_neighbors, seed=seed)
    x_out = np.vstack([x, synthetic])
    y_out = np.concatenate([y, np.full(n_needed, minority_label, dtype=y.dtype)])
    return x_out, y_out
