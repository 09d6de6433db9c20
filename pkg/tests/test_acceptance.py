"""Acceptance criteria; each test records one PASS/FAIL line for the session summary."""
import time

import numpy as np
import pytest

from autosc.cli import main
from autosc.cluster import auto_sc, auto_sc_n, build_neighbors, cluster_neighbors
from autosc.core import DataMatrix, GroundTruth, Params, generate_synthetic
from autosc.metrics import TrialBatch, nce, nmi, triplet_error_rate
from autosc.selfrep import NeighborMap
from autosc.triplet import TripletSet, brute_force_triplets, enumerate_triplets, triplet_frequency

from conftest import ACCEPTANCE_LINES

REGIME = dict(k=5, dim=4, per_cluster=50, ambient_dim=30)


def record(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_criterion_1_oracle_equivalence():
    start = time.perf_counter()
    mismatches = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n = (20, 40, 60)[seed % 3]
        m = (4, 8)[seed % 2]
        rows = [rng.permutation([i for i in range(n) if i != j])[:m] for j in range(n)]
        nbrs = NeighborMap(np.array(rows))
        if enumerate_triplets(nbrs).as_set() != brute_force_triplets(nbrs).as_set():
            mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    assert record(1, ok, f"{20 - mismatches}/20 maps equal to brute force in {elapsed:.2f} s")


def test_criterion_2_triplet_purity():
    start = time.perf_counter()
    errors = []
    for seed in range(20):
        data, truth = generate_synthetic(**REGIME, noise_sigma=0.0, seed=seed)
        ts = enumerate_triplets(build_neighbors(data, Params(m=8)))
        errors.append(triplet_error_rate(ts, truth))
    elapsed = time.perf_counter() - start
    good = sum(e <= 0.02 for e in errors)
    ok = good >= 18 and elapsed < 30
    assert record(2, ok, f"A <= 0.02 on {good}/20 seeds (max A {max(errors):.4f}) in {elapsed:.1f} s")


def test_criterion_3_cluster_count_recovery():
    start = time.perf_counter()
    summary, ok = [], True
    for name, runner in (("auto_sc", auto_sc), ("auto_sc_n", auto_sc_n)):
        hits, scores = 0, []
        for seed in range(20):
            data, truth = generate_synthetic(**REGIME, noise_sigma=0.01, seed=seed)
            result = runner(data, Params(m=8))
            hits += abs(result.k_hat - 5) <= 1
            scores.append(nmi(result.labels, truth.labels))
        ok &= hits >= 16 and np.mean(scores) >= 0.90
        summary.append(f"{name} |K-5|<=1 in {hits}/20, mean NMI {np.mean(scores):.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    assert record(3, ok, "; ".join(summary) + f" ({elapsed:.1f} s)")


def test_criterion_4_m_sweep(capsys):
    start = time.perf_counter()
    code = main(["bench", "--k", "5", "--m", "5-11", "--trials", "20", "--dim", "4",
                 "--per", "50", "--ambient", "30", "--sigma", "0.01", "--seed", "0"])
    lines = capsys.readouterr().out.splitlines()
    elapsed = time.perf_counter() - start
    rows = [line.split(",") for line in lines[1:]]
    by_m = {int(r[1]): float(r[3]) for r in rows}
    best = min(by_m.values())
    # ties allowed: the minimum is reached at some m in {7, 8, 9}
    ok = code == 0 and len(rows) == 7 and min(by_m[m] for m in (7, 8, 9)) == best and elapsed < 300
    table = " ".join(f"m={m}:{v:.2f}" for m, v in sorted(by_m.items()))
    with capsys.disabled():
        assert record(4, ok, f"NC_e {table}; global min {best:.2f} ({elapsed:.1f} s)")


def test_criterion_5_metric_hand_values():
    checks = {
        "nmi identical": abs(nmi([0, 0, 1, 1, 2, 2], [0, 0, 1, 1, 2, 2]) - 1.0) <= 1e-12,
        "nmi independent": abs(nmi([0, 0, 1, 1], [0, 1, 0, 1]) - 0.0) <= 1e-12,
        "nce [5,7] vs 6": abs(nce(TrialBatch((5, 7), 6)) - 1.0) <= 1e-12,
    }
    truth = GroundTruth(np.array([0, 0, 0, 1, 1, 2]))
    checks["A pure"] = abs(triplet_error_rate(TripletSet.from_triples([(0, 1, 2)], 6), truth)) <= 1e-12
    checks["A 2/1 split"] = abs(
        triplet_error_rate(TripletSet.from_triples([(0, 1, 3)], 6), truth) - 0.5) <= 1e-12
    failed = [k for k, v in checks.items() if not v]
    assert record(5, not failed, f"{len(checks) - len(failed)}/{len(checks)} hand values exact to 1e-12"
                  + (f" (failed: {', '.join(failed)})" if failed else ""))


def _same_partition(a, b):
    pairs = set(zip(np.asarray(a).tolist(), np.asarray(b).tolist()))
    return len(pairs) == len(set(np.asarray(a).tolist())) == len(set(np.asarray(b).tolist()))


def test_criterion_6_invariants():
    data, _ = generate_synthetic(3, 4, 20, 30, 0.01, seed=5)
    params = Params()
    nbrs = build_neighbors(data, params)
    ts = enumerate_triplets(nbrs)
    total = triplet_frequency(ts, np.ones(len(ts), dtype=bool))
    steps, conserved = 0, True

    def hook(state):
        nonlocal steps, conserved
        steps += 1
        conserved &= bool(np.array_equal(state.x_in + state.x_out, total))
        conserved &= int(state.x_in.sum() + state.x_out.sum()) == 3 * len(ts)

    result = cluster_neighbors(nbrs, params, on_step=hook)
    flat = sorted(s for g in result.groups for s in g)
    partition = flat == list(range(data.n_samples)) and len(result.groups) == result.k_hat
    repeat = auto_sc(data, params)
    deterministic = repeat.labels.tobytes() == auto_sc(data, params).labels.tobytes()
    deterministic &= repeat.labels.tobytes() == result.labels.tobytes()
    perm = np.random.default_rng(0).permutation(data.n_samples)
    shuffled = auto_sc(DataMatrix(data.values[:, perm]), params)
    equivariant = _same_partition(repeat.labels[perm], shuffled.labels)
    ok = partition and conserved and deterministic and equivariant
    assert record(6, ok, f"partition={partition} conservation={conserved} over {steps} steps "
                         f"determinism={deterministic} equivariance={equivariant}")


def _best_time(fn, repeats=7):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def test_criterion_7_triplet_scaling():
    params = Params(m=8)
    times = {}
    for per in (100, 200):
        data, _ = generate_synthetic(5, 4, per, 30, 0.01, seed=0)
        nbrs = build_neighbors(data, params)
        enumerate_triplets(nbrs)
        times[5 * per] = _best_time(lambda: enumerate_triplets(nbrs))
    ratio = times[1000] / times[500]
    assert record(7, ratio <= 3.0, f"N=500 {1e3 * times[500]:.2f} ms, N=1000 {1e3 * times[1000]:.2f} ms, "
                                   f"ratio {ratio:.2f} (limit 3)")


def test_criterion_8_efficiency_ordering():
    lsr, greedy = [], []
    for seed in range(5):
        data, _ = generate_synthetic(5, 4, 100, 50, 0.01, seed=seed)
        start = time.perf_counter()
        auto_sc(data, Params(solver="least-squares"))
        lsr.append(time.perf_counter() - start)
        start = time.perf_counter()
        auto_sc_n(data, Params())
        greedy.append(time.perf_counter() - start)
    a, b = np.median(greedy), np.median(lsr)
    assert record(8, a < b, f"median auto_sc_n {1e3 * a:.1f} ms vs auto_sc {1e3 * b:.1f} ms")
