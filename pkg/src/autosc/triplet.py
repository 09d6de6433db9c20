"""Triplet relationships: 3-cycles of the binarized neighbor graph."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import TooLarge
from .selfrep import NeighborMap

BRUTE_FORCE_LIMIT = 200


@dataclass(frozen=True)
class TripletSet:
    """Unique sorted triples, stored as an ``(n, 3)`` array in lexicographic order.

    ``indptr``/``members`` form a CSR index: the ids of the triplets containing
    sample ``s`` are ``members[indptr[s]:indptr[s + 1]]`` in increasing order.
    """

    triplets: np.ndarray
    n_samples: int
    indptr: np.ndarray
    members: np.ndarray

    @classmethod
    def from_triples(cls, triples, n_samples: int, canonical: bool = False) -> "TripletSet":
        t = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if t.size and not canonical:
            if t.min() < 0 or t.max() >= n_samples:
                raise ValueError("triplet member out of range")
            t = _unique_rows(np.sort(t, axis=1), n_samples)
            if np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]):
                raise ValueError("triplet members must be distinct")
        flat = t.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=n_samples)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        members = order // 3
        for arr in (t, indptr, members):
            arr.setflags(write=False)
        return cls(t, n_samples, indptr, members)

    def __len__(self) -> int:
        return self.triplets.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    def containing(self, sample: int) -> np.ndarray:
        return self.members[self.indptr[sample]:self.indptr[sample + 1]]

    def as_set(self) -> set[tuple[int, int, int]]:
        return {tuple(int(v) for v in row) for row in self.triplets}


def _unique_rows(t: np.ndarray, n: int) -> np.ndarray:
    """Deduplicate sorted triples, returning them in lexicographic order."""
    codes = np.unique((t[:, 0] * n + t[:, 1]) * n + t[:, 2])
    return np.stack([codes // (n * n), (codes // n) % n, codes % n], axis=1)


def _edge_keys(nbrs: NeighborMap) -> np.ndarray:
    # key u*N + v encodes "v is a neighbor of u"
    n, m = nbrs.neighbors.shape
    return np.sort(np.repeat(np.arange(n), m) * n + nbrs.neighbors.ravel())


def _has_edge(keys: np.ndarray, n: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    query = u * n + v
    pos = np.searchsorted(keys, query)
    pos = np.minimum(pos, keys.size - 1)
    return keys[pos] == query


def _strict_filter(t: np.ndarray, keys: np.ndarray, n: int) -> np.ndarray:
    # sorted (i, j, k) taken as (n1, n2, n3): i in N(j), j in N(k), k in N(i)
    i, j, k = t.T
    ok = _has_edge(keys, n, j, i) & _has_edge(keys, n, k, j) & _has_edge(keys, n, i, k)
    return t[ok]


def enumerate_triplets(nbrs: NeighborMap, strict_orientation: bool = False) -> TripletSet:
    """Collect every triple of samples forming a 3-cycle of the neighbor relation.

    Walks ``a -> b -> c`` with ``b`` in N(a) and ``c`` in N(b), keeping the walk
    when ``a`` is in N(c); that costs O(N m^2). Either cyclic orientation
    qualifies unless ``strict_orientation`` is set, in which case only the
    orientation of the sorted triple counts.
    """
    nb = nbrs.neighbors
    n, m = nb.shape
    if m == 0:
        return TripletSet.from_triples(np.zeros((0, 3)), n)
    keys = _edge_keys(nbrs)
    a = np.repeat(np.arange(n), m * m)
    b = np.repeat(nb.ravel(), m)
    c = nb[nb].ravel()
    closed = (c != a) & _has_edge(keys, n, c, a)
    t = np.sort(np.stack([a[closed], b[closed], c[closed]], axis=1), axis=1)
    t = _unique_rows(t, n)
    if strict_orientation and t.size:
        t = _strict_filter(t, keys, n)
    return TripletSet.from_triples(t, n, canonical=True)


def brute_force_triplets(nbrs: NeighborMap, strict_orientation: bool = False) -> TripletSet:
    """Test all C(N, 3) triples against the cycle condition (oracle for small N)."""
    n = nbrs.n_samples
    if n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force limited to N <= {BRUTE_FORCE_LIMIT}, got {n}")
    nb = [set(int(v) for v in row) for row in nbrs.neighbors]

    def cycle(n1, n2, n3):
        # c*_{n1 n2} c*_{n2 n3} c*_{n3 n1} = 1
        return n1 in nb[n2] and n2 in nb[n3] and n3 in nb[n1]

    found = []
    for i, j, k in combinations(range(n), 3):
        if cycle(i, j, k) or (not strict_orientation and cycle(i, k, j)):
            found.append((i, j, k))
    return TripletSet.from_triples(np.array(found, dtype=np.int64).reshape(-1, 3), n)


def _active_mask(ts: TripletSet, active) -> np.ndarray:
    if isinstance(active, np.ndarray) and active.dtype == bool:
        return active
    mask = np.zeros(len(ts), dtype=bool)
    ids = np.fromiter(active, dtype=np.int64) if not isinstance(active, np.ndarray) else active
    mask[ids] = True
    return mask


def triplet_frequency(ts: TripletSet, active) -> np.ndarray:
    """Occurrence count of every sample across the ``active`` triplets.

    ``active`` is a boolean mask over triplet ids or an iterable of ids.
    """
    mask = _active_mask(ts, active)
    return np.bincount(ts.triplets[mask].ravel(), minlength=ts.n_samples)
