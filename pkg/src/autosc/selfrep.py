"""Similarity structure: self-representation solvers and neighbor selection."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import DataMatrix
from .errors import DegenerateColumn, InvalidConfig, SingularSystem


@dataclass(frozen=True)
class SimilarityMatrix:
    """``N x N`` coefficients; column ``j`` represents sample ``j`` by the others."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidConfig(f"similarity matrix must be square, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidConfig("similarity matrix contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class NeighborMap:
    """Row ``j`` of ``neighbors`` lists the ``m`` neighbors of sample ``j``."""

    neighbors: np.ndarray

    def __post_init__(self):
        nb = np.asarray(self.neighbors, dtype=np.int64)
        if nb.ndim != 2:
            raise InvalidConfig("neighbors must be an (N, m) integer array")
        n, m = nb.shape
        if m >= n:
            raise InvalidConfig(f"m={m} must be smaller than N={n}")
        if nb.size and (nb.min() < 0 or nb.max() >= n):
            raise InvalidConfig("neighbor index out of range")
        if np.any(nb == np.arange(n)[:, None]):
            raise InvalidConfig("a sample cannot be its own neighbor")
        if m > 1 and np.any(np.diff(np.sort(nb, axis=1), axis=1) == 0):
            raise InvalidConfig("neighbor lists must not repeat entries")
        nb.setflags(write=False)
        object.__setattr__(self, "neighbors", nb)

    @property
    def n_samples(self) -> int:
        return self.neighbors.shape[0]

    @property
    def m(self) -> int:
        return self.neighbors.shape[1]

    def to_binary(self) -> np.ndarray:
        """Binary ``C*``: entry ``(i, j)`` is 1 iff ``i`` is a neighbor of ``j``."""
        n = self.n_samples
        cstar = np.zeros((n, n), dtype=np.int8)
        cstar[self.neighbors.ravel(), np.repeat(np.arange(n), self.m)] = 1
        return cstar

    @classmethod
    def from_binary(cls, cstar) -> "NeighborMap":
        """Inverse of :meth:`to_binary`; lists come back in increasing index order."""
        cstar = np.asarray(cstar)
        counts = cstar.sum(axis=0)
        if counts.size and np.any(counts != counts[0]):
            raise InvalidConfig("every column of C* must hold the same number of ones")
        return cls(np.array([np.flatnonzero(cstar[:, j]) for j in range(cstar.shape[1])]))


def solve_least_squares(data: DataMatrix, lambda_reg: float = 0.1,
                        zero_diagonal: bool = True) -> SimilarityMatrix:
    """Minimize ``||X - XC||_F^2 + lambda ||C||_F^2`` and zero the diagonal.

    The minimizer solves ``(X^T X + lambda I) C = X^T X``. Pass
    ``zero_diagonal=False`` to get the raw minimizer.
    """
    if lambda_reg <= 0:
        raise InvalidConfig("lambda_reg must be positive")
    x = data.values
    gram = x.T @ x
    lhs = gram + lambda_reg * np.eye(gram.shape[0])
    try:
        c = scipy.linalg.solve(lhs, gram, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(c)):
        raise SingularSystem("non-finite solution of the regularized normal equations")
    if zero_diagonal:
        np.fill_diagonal(c, 0.0)
    return SimilarityMatrix(c)


def solve_matching_pursuit(data: DataMatrix, m: int) -> SimilarityMatrix:
    """Orthogonal matching pursuit of every sample over the remaining samples.

    At most ``m`` atoms are selected per column, each by maximal absolute
    correlation with the current residual, with a least-squares refit on the
    support after every selection. Selection stops once the residual norm
    drops below 1e-6 or no correlation exceeds 1e-12.
    """
    x = data.values
    n = x.shape[1]
    if not 0 < m < n:
        raise InvalidConfig(f"m must satisfy 0 < m < N, got m={m}, N={n}")
    c = np.zeros((n, n))
    for j in range(n):
        target = x[:, j]
        residual = target.copy()
        support: list[int] = []
        coef = np.zeros(0)
        excluded = np.zeros(n, dtype=bool)
        excluded[j] = True
        for _ in range(m):
            if np.linalg.norm(residual) < 1e-6:
                break
            corr = np.abs(x.T @ residual)
            corr[excluded] = -1.0
            best = int(np.argmax(corr))
            if corr[best] <= 1e-12:
                break
            support.append(best)
            excluded[best] = True
            atoms = x[:, support]
            coef = np.linalg.lstsq(atoms, target, rcond=None)[0]
            residual = target - atoms @ coef
        c[support, j] = coef
    return SimilarityMatrix(c)


def _cosine_order(data: DataMatrix, j: int) -> np.ndarray:
    cos = np.abs(data.values.T @ data.values[:, j])
    cos[j] = -1.0
    return np.argsort(-cos, kind="stable")


def top_m_neighbors(sim: SimilarityMatrix, m: int, data: DataMatrix | None = None) -> NeighborMap:
    """Keep, per column, the ``m`` rows with largest ``|c_ij|``.

    Ties go to the smaller index; each list is ordered by decreasing ``|c_ij|``.
    A column with fewer than ``m`` nonzero entries triggers a
    :class:`DegenerateColumn` warning and is completed by absolute cosine
    similarity on ``data`` (by index order when no data is given).
    """
    n = sim.size
    if not 0 < m < n:
        raise InvalidConfig(f"m must satisfy 0 < m < N, got m={m}, N={n}")
    mag = np.abs(sim.values)
    key = -mag
    np.fill_diagonal(key, np.inf)
    order = np.argsort(key, axis=0, kind="stable")[:m].T.copy()

    nonzeros = np.count_nonzero(mag, axis=0) - (np.diagonal(mag) != 0)
    for j in np.flatnonzero(nonzeros < m):
        warnings.warn(DegenerateColumn(int(j), int(nonzeros[j]), m), stacklevel=2)
        kept = [int(i) for i in order[j] if mag[i, j] != 0 and i != j]
        if data is not None:
            pool = _cosine_order(data, int(j))
        else:
            pool = (i for i in range(n) if i != j)
        seen = set(kept)
        for i in pool:
            if len(kept) == m:
                break
            if i != j and i not in seen:
                kept.append(int(i))
                seen.add(int(i))
        order[j] = kept
    return NeighborMap(order)


def projection_energy(basis: np.ndarray, x: np.ndarray) -> float:
    """``||basis^T x||^2``: energy of ``x`` in the span of an orthonormal basis."""
    return float(np.sum((np.asarray(basis).T @ np.asarray(x)) ** 2))


def greedy_neighbors(data: DataMatrix, m: int) -> NeighborMap:
    """Neighbor search by greedy projection onto a growing span.

    For each sample the span starts as the sample itself. At every step the
    non-neighbor with the largest projection energy onto the current span
    (squared norm of its coordinates in an orthonormal basis) is appended,
    and the span is extended by the orthogonal part of that neighbor unless
    its norm is below 1e-9. All samples are processed together; the arrays
    below are indexed ``[sample, ...]``.
    """
    x = data.values
    d, n = x.shape
    if not 0 < m < n:
        raise InvalidConfig(f"m must satisfy 0 < m < N, got m={m}, N={n}")
    if m > d:
        warnings.warn(f"m={m} exceeds the ambient dimension {d}", stacklevel=2)

    basis = np.zeros((n, d, m + 1))
    basis[:, :, 0] = x.T
    energy = (x.T @ x) ** 2
    taken = np.eye(n, dtype=bool)
    neighbors = np.empty((n, m), dtype=np.int64)
    rows = np.arange(n)

    for step in range(m):
        masked = np.where(taken, -np.inf, energy)
        pick = np.argmax(masked, axis=1)
        neighbors[:, step] = pick
        taken[rows, pick] = True

        v = x[:, pick].T
        for _ in range(2):  # Gram-Schmidt plus one re-orthogonalization pass
            coords = np.einsum("nds,nd->ns", basis, v)
            v = v - np.einsum("nds,ns->nd", basis, coords)
        norms = np.linalg.norm(v, axis=1)
        grow = norms >= 1e-9
        q = np.zeros_like(v)
        q[grow] = v[grow] / norms[grow, None]
        basis[:, :, step + 1] = q
        energy += (q @ x) ** 2
    return NeighborMap(neighbors)
