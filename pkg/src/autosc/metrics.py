"""Evaluation metrics: triplet error rate, cluster-count error and NMI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GroundTruth
from .errors import EmptyTripletSet, InvalidConfig, LengthMismatch
from .triplet import TripletSet

NMI_NORMALIZATIONS = ("arithmetic", "geometric", "min", "max")


@dataclass(frozen=True)
class TrialBatch:
    estimates: tuple
    k_true: int

    def __post_init__(self):
        estimates = tuple(int(e) for e in self.estimates)
        if not estimates:
            raise InvalidConfig("a trial batch needs at least one estimate")
        if min(estimates) < 1:
            raise InvalidConfig("cluster-count estimates must be >= 1")
        object.__setattr__(self, "estimates", estimates)


def triplet_error_rate(ts: TripletSet, truth: GroundTruth) -> float:
    """Mean of ``(3 - p) / 2`` over triplets, ``p`` the size of the plurality class."""
    if len(ts) == 0:
        raise EmptyTripletSet("triplet error rate needs at least one triplet")
    lab = np.asarray(truth.labels)[ts.triplets]
    same01 = lab[:, 0] == lab[:, 1]
    same02 = lab[:, 0] == lab[:, 2]
    same12 = lab[:, 1] == lab[:, 2]
    pairs = same01.astype(int) + same02 + same12
    # 3 equal pairs -> pure, 1 -> split 2/1, 0 -> all distinct
    plurality = np.select([pairs == 3, pairs == 1], [3, 2], default=1)
    return float(np.mean((3 - plurality) / 2.0))


def nce(batch: TrialBatch) -> float:
    """Mean absolute deviation of the estimated cluster counts from the truth."""
    est = np.asarray(batch.estimates, dtype=float)
    return float(np.mean(np.abs(est - batch.k_true)))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(a, b, normalization: str = "arithmetic") -> float:
    """Normalized mutual information between two labelings.

    When either labeling has zero entropy the result is 1 for identical
    partitions and 0 otherwise.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"labelings differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise LengthMismatch("labelings must be nonempty")
    if normalization not in NMI_NORMALIZATIONS:
        raise InvalidConfig(f"normalization must be one of {NMI_NORMALIZATIONS}")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1)
    ha = _entropy(table.sum(axis=1))
    hb = _entropy(table.sum(axis=0))
    if ha == 0.0 or hb == 0.0:
        identical = table.shape[0] == table.shape[1] and np.count_nonzero(table) == table.shape[0]
        return 1.0 if identical else 0.0
    joint = table / a.size
    outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    norm = {
        "arithmetic": (ha + hb) / 2.0,
        "geometric": np.sqrt(ha * hb),
        "min": min(ha, hb),
        "max": max(ha, hb),
    }[normalization]
    return float(min(max(mi / norm, 0.0), 1.0))
