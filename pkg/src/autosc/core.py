"""Data containers, column normalization and the synthetic union-of-subspaces generator.

Samples are stored column-wise: a data matrix has shape ``(n_features, n_samples)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, ZeroColumn

SOLVERS = ("least-squares", "matching-pursuit", "greedy-neighbor")


@dataclass(frozen=True)
class DataMatrix:
    """A ``D x N`` sample matrix, one sample per column."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidConfig(f"data must be 2-D, got shape {values.shape}")
        if values.shape[1] < 3:
            raise InvalidConfig(f"need at least 3 samples, got {values.shape[1]}")
        if not np.all(np.isfinite(values)):
            raise InvalidConfig("data contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Params:
    """Pipeline parameters.

    ``m`` is the number of neighbors kept per sample, ``lambda_reg`` the
    ridge weight of the least-squares representation, ``lambda_m`` and
    ``lambda_f`` the trade-offs of the model-selection and fusion rewards.
    """

    m: int = 8
    lambda_reg: float = 0.1
    lambda_m: float = 1.0
    lambda_f: float = 1.0
    solver: str = "least-squares"
    strict_orientation: bool = False

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3:
            raise InvalidConfig(f"m must be an integer >= 3, got {self.m}")
        for name in ("lambda_reg", "lambda_m", "lambda_f"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidConfig(f"{name} must be finite and nonnegative, got {value}")
        if self.lambda_reg <= 0:
            raise InvalidConfig("lambda_reg must be positive")
        if self.solver not in SOLVERS:
            raise InvalidConfig(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")

    def check_samples(self, n_samples: int) -> None:
        if self.m >= n_samples:
            raise InvalidConfig(f"m={self.m} must be smaller than the number of samples {n_samples}")


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray
    k_true: int = field(default=0)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidConfig("labels must be a nonempty 1-D sequence")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InvalidConfig("labels must be integers")
            labels = labels.astype(np.int64)
        k_true = int(self.k_true) or int(labels.max()) + 1
        if labels.min() < 0 or labels.max() >= k_true:
            raise InvalidConfig(f"labels must lie in [0, {k_true})")
        if np.unique(labels).size != k_true:
            raise InvalidConfig("every cluster id in [0, k_true) must occur")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "k_true", k_true)


def normalize_columns(data: DataMatrix) -> DataMatrix:
    """Scale every column to unit Euclidean norm."""
    norms = np.linalg.norm(data.values, axis=0)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    return DataMatrix(data.values / norms)


def generate_synthetic(k, dim, per_cluster, ambient_dim, noise_sigma=0.0, seed=0,
                       return_bases=False):
    """Draw ``per_cluster`` samples from each of ``k`` random ``dim``-dimensional
    linear subspaces of ``R^ambient_dim``.

    Each basis is the Q factor of a Gaussian matrix. Coefficients are standard
    normal; the samples are normalized, perturbed by isotropic Gaussian noise
    of scale ``noise_sigma`` and normalized again. Clusters are laid out
    contiguously, so sample ``j`` has label ``j // per_cluster``.

    Returns
    -------
    (DataMatrix, GroundTruth), plus the list of ``ambient_dim x dim`` bases
    when ``return_bases`` is true.
    """
    if k < 1 or dim < 1:
        raise InvalidConfig("k and dim must be positive")
    if dim >= ambient_dim:
        raise InvalidConfig(f"dim={dim} must be smaller than ambient_dim={ambient_dim}")
    if per_cluster < dim:
        raise InvalidConfig(f"per_cluster={per_cluster} must be at least dim={dim}")
    if not math.isfinite(noise_sigma) or noise_sigma < 0:
        raise InvalidConfig("noise_sigma must be finite and nonnegative")
    if k * per_cluster < 3:
        raise InvalidConfig("need at least 3 samples in total")
    if k * dim > ambient_dim:
        warnings.warn(
            f"k*dim={k * dim} exceeds ambient_dim={ambient_dim}; subspaces cannot be independent",
            stacklevel=2,
        )

    rng = np.random.default_rng(seed)
    bases, blocks = [], []
    for _ in range(k):
        q, _ = np.linalg.qr(rng.standard_normal((ambient_dim, dim)))
        block = q @ rng.standard_normal((dim, per_cluster))
        block /= np.linalg.norm(block, axis=0)
        bases.append(q)
        blocks.append(block)
    values = np.hstack(blocks)
    if noise_sigma > 0:
        values = values + noise_sigma * rng.standard_normal(values.shape)
    values /= np.linalg.norm(values, axis=0)

    labels = np.repeat(np.arange(k), per_cluster)
    out = (DataMatrix(values), GroundTruth(labels, k))
    if return_bases:
        return out + (bases,)
    return out
