"""Greedy reward-driven clustering over triplets.

The driver opens a cluster at the densest out-of-cluster triplet, grows it by
absorbing triplets connected to it, and repeats until the next seed would be
denser in the in-cluster multiset than in the out-of-cluster one. Clusters
that share many triplets are merged afterwards, and samples left outside
every cluster are assigned by fusion reward.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import DataMatrix, Params, normalize_columns
from .errors import Exhausted, NoClusters, NoTriplets
from .selfrep import (NeighborMap, greedy_neighbors, solve_least_squares,
                      solve_matching_pursuit, top_m_neighbors)
from .triplet import TripletSet, _active_mask, enumerate_triplets, triplet_frequency

StepHook = Callable[["PartitionState"], None]


@dataclass
class Cluster:
    members: set
    triplets: list
    order: int


@dataclass
class PartitionState:
    """Bookkeeping of in-cluster and out-of-cluster triplets.

    ``in_mask[t]`` is true when triplet ``t`` belongs to ``T_in``;
    ``x_in``/``x_out`` are the per-sample occurrence counts over ``T_in`` and
    ``T_out``; ``owner[s]`` is the index into ``clusters`` owning sample ``s``
    or -1.
    """

    in_mask: np.ndarray
    x_in: np.ndarray
    x_out: np.ndarray
    owner: np.ndarray
    clusters: list = field(default_factory=list)

    @classmethod
    def initial(cls, ts: TripletSet) -> "PartitionState":
        return cls(
            in_mask=np.zeros(len(ts), dtype=bool),
            x_in=np.zeros(ts.n_samples, dtype=np.int64),
            x_out=triplet_frequency(ts, np.ones(len(ts), dtype=bool)),
            owner=np.full(ts.n_samples, -1, dtype=np.int64),
        )

    @property
    def t_in(self) -> np.ndarray:
        return np.flatnonzero(self.in_mask)

    @property
    def t_out(self) -> np.ndarray:
        return np.flatnonzero(~self.in_mask)

    def move_to_in(self, tid: int, ts: TripletSet, cluster_id: int) -> None:
        """Move triplet ``tid`` to ``T_in`` and hand its samples to ``cluster_id``."""
        members = ts.triplets[tid]
        self.in_mask[tid] = True
        np.add.at(self.x_in, members, 1)
        np.add.at(self.x_out, members, -1)
        cluster = self.clusters[cluster_id]
        cluster.triplets.append(int(tid))
        for s in members:
            cluster.members.add(int(s))
        self.owner[members] = cluster_id

    def open_cluster(self, tid: int, ts: TripletSet) -> int:
        self.clusters.append(Cluster(set(), [], len(self.clusters)))
        cid = len(self.clusters) - 1
        self.move_to_in(tid, ts, cid)
        return cid

    def check(self, ts: TripletSet) -> None:
        """Assert the bookkeeping invariants (debug aid)."""
        assert np.array_equal(self.x_in, triplet_frequency(ts, self.in_mask))
        assert np.array_equal(self.x_out, triplet_frequency(ts, ~self.in_mask))
        assert self.x_in.sum() == 3 * self.in_mask.sum()
        assert self.x_out.sum() == 3 * (~self.in_mask).sum()
        seen: set = set()
        for cid, cluster in enumerate(self.clusters):
            assert not (cluster.members & seen)
            seen |= cluster.members
            assert all(self.owner[s] == cid for s in cluster.members)
        assert int((self.owner >= 0).sum()) == len(seen)


@dataclass
class ClusteringResult:
    labels: np.ndarray
    k_hat: int
    groups: list
    k_init: int = 0
    neighbors: Optional[NeighborMap] = None
    triplets: Optional[TripletSet] = None
    timings: dict = field(default_factory=dict)


# -- scores -------------------------------------------------------------------

def local_density(t, freq) -> int:
    """Sum of the occurrence counts of the triplet's samples in ``freq``."""
    freq = np.asarray(freq)
    if freq.size == 0:
        return 0
    return int(sum(freq[s] for s in t if s < freq.size))


def connection_score(i: int, j: int, active, ts: TripletSet) -> int:
    """Number of active triplets that contain both ``i`` and ``j``."""
    if i == j:
        raise ValueError("connection score needs two distinct samples")
    mask = _active_mask(ts, active)
    with_j = ts.containing(j)
    with_j = with_j[mask[with_j]]
    return int(np.any(ts.triplets[with_j] == i, axis=1).sum())


def model_selection_reward(cluster_members, x_out, x_in, lambda_m: float = 1.0) -> float:
    members = list(cluster_members)
    if not members:
        return 0.0
    x_out = np.asarray(x_out)
    x_in = np.asarray(x_in)
    out_part = float(x_out[members].sum()) if x_out.size else 0.0
    in_part = float(x_in[members].sum()) if x_in.size else 0.0
    return out_part - lambda_m * in_part


def fusion_reward(x: int, cluster_members, nbrs: NeighborMap, ts: TripletSet,
                  t_in_of_cluster, lambda_f: float = 1.0) -> float:
    """Triplet support of ``x`` in the cluster plus weighted neighbor overlap.

    The first term counts the cluster's triplets containing ``x``; the second
    counts, for each neighbor of ``x``, its occurrences among the neighbor
    lists of all cluster members.
    """
    members = sorted(cluster_members)
    if x in cluster_members:
        raise ValueError(f"sample {x} already belongs to the cluster")
    tids = np.fromiter(t_in_of_cluster, dtype=np.int64)
    in_triplets = int(np.any(ts.triplets[tids] == x, axis=1).sum()) if tids.size else 0
    if not members:
        return float(in_triplets)
    pool = np.bincount(nbrs.neighbors[members].ravel(), minlength=nbrs.n_samples)
    overlap = int(pool[nbrs.neighbors[x]].sum())
    return in_triplets + lambda_f * overlap


# -- driver steps ----------------------------------------------------------------

def _seed_candidates(state: PartitionState, ts: TripletSet) -> np.ndarray:
    """Out-of-cluster triplets whose samples are all unclaimed."""
    if len(ts) == 0:
        return np.zeros(0, dtype=bool)
    claimed = (state.owner >= 0)[ts.triplets].any(axis=1)
    return ~state.in_mask & ~claimed


def select_seed_triplet(state: PartitionState, ts: TripletSet) -> int:
    """Eligible out-of-cluster triplet of highest local density against ``x_out``.

    Ties go to the lexicographically smallest triple, i.e. the smallest id.
    """
    eligible = _seed_candidates(state, ts)
    if not eligible.any():
        raise Exhausted("no eligible out-of-cluster triplet left")
    density = state.x_out[ts.triplets].sum(axis=1)
    density = np.where(eligible, density, -1)
    return int(np.argmax(density))


def should_terminate(state: PartitionState, ts: TripletSet) -> bool:
    try:
        tid = select_seed_triplet(state, ts)
    except Exhausted:
        return True
    t = ts.triplets[tid]
    return local_density(t, state.x_out) <= local_density(t, state.x_in)


def grow_cluster(state: PartitionState, cluster_id: int, ts: TripletSet,
                 on_step: Optional[StepHook] = None) -> PartitionState:
    """Absorb out-of-cluster triplets into ``cluster_id`` one at a time.

    Each round picks the triplet maximizing the summed connection score of
    its samples toward the cluster members (scores over ``T_out``), provided
    the sum exceeds 1. Triplets holding samples of other clusters are never
    picked. Modifies ``state`` in place and returns it.

    With ``a[j]`` the summed connection score of sample ``j`` toward the
    cluster, a triplet scores ``a[t0] + a[t1] + a[t2]``; both arrays are kept
    up to date incrementally as triplets leave ``T_out`` and samples join.
    """
    T = ts.triplets
    n_samples = ts.n_samples
    if len(ts) == 0:
        return state
    in_c = state.owner == cluster_id
    active = ~state.in_mask
    blocked = ((state.owner >= 0) & ~in_c)[T].any(axis=1)

    # a[j] = sum over active triplets t containing j of |t & C \ {j}|
    k_in = in_c[T].sum(axis=1)
    contrib = (k_in[:, None] - in_c[T]) * active[:, None]
    a = np.bincount(T.ravel(), weights=contrib.ravel(), minlength=n_samples).astype(np.int64)
    score = a[T].sum(axis=1)
    open_ = active & ~blocked
    key = np.where(open_ & (score > 1), score, -1)

    while True:
        tid = int(np.argmax(key))
        if key[tid] < 0:
            break
        members = T[tid]
        # tid leaves T_out: drop its contribution to a
        k_t = int(in_c[members].sum())
        touched = [members]
        a[members] -= k_t - in_c[members]
        active[tid] = False
        open_[tid] = False
        new = members[~in_c[members]]
        state.move_to_in(tid, ts, cluster_id)
        for u in new:
            in_c[u] = True
            around = ts.containing(u)
            around = around[active[around]]
            if around.size:
                others = T[around].ravel()
                others = others[others != u]
                np.add.at(a, others, 1)
                touched.append(others)
        changed = np.unique(np.concatenate(touched))
        affected = np.unique(np.concatenate([ts.containing(s) for s in changed]))
        score[affected] = a[T[affected]].sum(axis=1)
        key[affected] = np.where(open_[affected] & (score[affected] > 1), score[affected], -1)
        key[tid] = -1
        if on_step is not None:
            on_step(state)
    return state


def _straddle_counts(state: PartitionState, ts: TripletSet) -> dict:
    """Number of triplets (full set) touching each pair of clusters."""
    counts: dict = {}
    if len(ts) == 0:
        return counts
    owners = state.owner[ts.triplets]
    o = np.sort(owners, axis=1)
    fresh = (o >= 0) & np.concatenate([np.ones((len(o), 1), bool), o[:, 1:] != o[:, :-1]], axis=1)
    mixed = fresh.sum(axis=1) >= 2
    for row in o[mixed]:
        ids = sorted(set(int(v) for v in row if v >= 0))
        for p in range(len(ids)):
            for q in range(p + 1, len(ids)):
                counts[(ids[p], ids[q])] = counts.get((ids[p], ids[q]), 0) + 1
    return counts


def _merge_into(state: PartitionState, keep: int, drop: int) -> None:
    kc, dc = state.clusters[keep], state.clusters[drop]
    kc.members |= dc.members
    kc.triplets.extend(dc.triplets)
    kc.triplets.sort()
    del state.clusters[drop]
    state.owner[:] = -1
    for cid, cluster in enumerate(state.clusters):
        state.owner[list(cluster.members)] = cid


def merge_oversegmented(state: PartitionState, ts: TripletSet) -> PartitionState:
    """Merge cluster pairs sharing more triplets than the smaller cluster has samples.

    Clusters are visited smallest first; each is compared against the
    clusters at least as large, and merged into the partner with the most
    shared triplets when the count exceeds its size. The survivor keeps the
    earlier creation order. Repeats until no pair qualifies.
    """
    while len(state.clusters) > 1:
        counts = _straddle_counts(state, ts)
        sizes = [len(c.members) for c in state.clusters]
        visit = sorted(range(len(state.clusters)), key=lambda c: (sizes[c], state.clusters[c].order))
        pair = None
        for ci in visit:
            best, best_score = None, -1
            for cj in range(len(state.clusters)):
                if cj == ci or sizes[cj] < sizes[ci]:
                    continue
                s = counts.get((min(ci, cj), max(ci, cj)), 0)
                if s > min(sizes[ci], sizes[cj]) and s > best_score:
                    best, best_score = cj, s
            if best is not None:
                pair = (ci, best)
                break
        if pair is None:
            break
        keep, drop = sorted(pair, key=lambda c: state.clusters[c].order)
        _merge_into(state, keep, drop)
    return state


def fusion_rewards(state: PartitionState, nbrs: NeighborMap, ts: TripletSet,
                   samples: np.ndarray, lambda_f: float) -> np.ndarray:
    """``(K, len(samples))`` matrix of fusion rewards against every cluster."""
    n = nbrs.n_samples
    k = len(state.clusters)
    in_triplets = np.zeros((k, n))
    neighbor_pool = np.zeros((k, n))
    for cid, cluster in enumerate(state.clusters):
        if cluster.triplets:
            in_triplets[cid] = np.bincount(ts.triplets[cluster.triplets].ravel(), minlength=n)
        neighbor_pool[cid] = np.bincount(nbrs.neighbors[sorted(cluster.members)].ravel(), minlength=n)
    overlap = neighbor_pool[:, nbrs.neighbors[samples]].sum(axis=2)
    return in_triplets[:, samples] + lambda_f * overlap


def assign_remaining(state: PartitionState, nbrs: NeighborMap, ts: TripletSet,
                     lambda_f: float = 1.0) -> ClusteringResult:
    """Place every unclaimed sample in the cluster of largest fusion reward.

    Rewards are computed against the clusters as initialized, so the outcome
    does not depend on the order samples are visited. Ties go to the earlier
    cluster. A sample with zero reward everywhere joins the cluster holding
    most of its neighbors, or failing that the largest cluster.
    """
    k = len(state.clusters)
    if k == 0:
        raise NoClusters("initialization produced no cluster")
    labels = state.owner.copy()
    rest = np.flatnonzero(labels < 0)
    if rest.size:
        rewards = fusion_rewards(state, nbrs, ts, rest, lambda_f)
        choice = np.argmax(rewards, axis=0)
        dead = np.flatnonzero(rewards.max(axis=0) <= 0)
        if dead.size:
            sizes = np.array([len(c.members) for c in state.clusters])
            largest = int(np.argmax(sizes))
            for d in dead:
                owners = state.owner[nbrs.neighbors[rest[d]]]
                owners = owners[owners >= 0]
                if owners.size:
                    choice[d] = int(np.argmax(np.bincount(owners, minlength=k)))
                else:
                    choice[d] = largest
        labels[rest] = choice
    groups = [np.flatnonzero(labels == c).tolist() for c in range(k)]
    return ClusteringResult(labels=labels, k_hat=k, groups=groups)


# -- pipelines ------------------------------------------------------------------

def cluster_neighbors(nbrs: NeighborMap, params: Params,
                      on_step: Optional[StepHook] = None,
                      timings: Optional[dict] = None) -> ClusteringResult:
    """Shared tail of both pipelines: triplets, initialization, merge, assignment."""
    timings = {} if timings is None else timings
    start = time.perf_counter()
    ts = enumerate_triplets(nbrs, strict_orientation=params.strict_orientation)
    timings["triplets_ms"] = 1e3 * (time.perf_counter() - start)
    if len(ts) == 0:
        raise NoTriplets("the neighbor graph contains no triplet")

    start = time.perf_counter()
    state = PartitionState.initial(ts)
    while not should_terminate(state, ts):
        cid = state.open_cluster(select_seed_triplet(state, ts), ts)
        if on_step is not None:
            on_step(state)
        grow_cluster(state, cid, ts, on_step=on_step)
    k_init = len(state.clusters)
    merge_oversegmented(state, ts)
    if on_step is not None:
        on_step(state)
    result = assign_remaining(state, nbrs, ts, params.lambda_f)
    timings["cluster_ms"] = 1e3 * (time.perf_counter() - start)

    result.k_init = k_init
    result.neighbors = nbrs
    result.triplets = ts
    result.timings = timings
    return result


def build_neighbors(data: DataMatrix, params: Params) -> NeighborMap:
    """Normalize ``data`` and derive the neighbor map with ``params.solver``."""
    data = normalize_columns(data)
    params.check_samples(data.n_samples)
    if params.solver == "greedy-neighbor":
        return greedy_neighbors(data, params.m)
    if params.solver == "matching-pursuit":
        sim = solve_matching_pursuit(data, params.m)
    else:
        sim = solve_least_squares(data, params.lambda_reg)
    return top_m_neighbors(sim, params.m, data)


def auto_sc(data: DataMatrix, params: Params = Params(),
            on_step: Optional[StepHook] = None) -> ClusteringResult:
    """Estimate the number of clusters and the assignment of ``data``.

    Raises :class:`NoTriplets` or :class:`NoClusters` when the similarity
    structure is degenerate; see :func:`fallback_result`.
    """
    start = time.perf_counter()
    nbrs = build_neighbors(data, params)
    timings = {"neighbors_ms": 1e3 * (time.perf_counter() - start)}
    return cluster_neighbors(nbrs, params, on_step=on_step, timings=timings)


def auto_sc_n(data: DataMatrix, params: Params = Params(),
              on_step: Optional[StepHook] = None) -> ClusteringResult:
    """Variant whose neighbors come from greedy span search instead of a solver."""
    start = time.perf_counter()
    data = normalize_columns(data)
    params.check_samples(data.n_samples)
    nbrs = greedy_neighbors(data, params.m)
    timings = {"neighbors_ms": 1e3 * (time.perf_counter() - start)}
    return cluster_neighbors(nbrs, params, on_step=on_step, timings=timings)


def fallback_result(n_samples: int) -> ClusteringResult:
    """Single group holding every sample."""
    return ClusteringResult(labels=np.zeros(n_samples, dtype=np.int64), k_hat=1,
                            groups=[list(range(n_samples))], k_init=0)
