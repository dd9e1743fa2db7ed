import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.diophantine import (AffineSubspace, BadTestConfig, avoid_test, bad_set_scan,
                                  bad_subspace_test, bad_target_test, box_counts,
                                  minkowski_solutions, spike_correspondence, subspace_scores,
                                  target_line)
from spikelab.errors import BudgetExceeded
from spikelab.geometry import BoxRegion, FlowSpec, Grid, grid_spike_points, standard_lattice

PHI = (1 + math.sqrt(5)) / 2
GOLD = 0.6180339887
C2 = FlowSpec((1, -1))


def brute_min_score(v, w, K, weights=None):
    """Direct loop over k (the definition)."""
    n = len(v)
    best = (math.inf, None)
    for k in range(1, K + 1):
        d = [abs(k * a - b - round(k * a - b)) for a, b in zip(v, w)]
        s = k ** (1 / n) * max(d) if weights is None else min(k ** e * x for e, x in zip(weights, d))
        if s < best[0]:
            best = (s, k)
    return best


# -- bad_target_test ------------------------------------------------------

def test_bad_target_examples():
    r = bad_target_test(BadTestConfig((0,), 0.3, 1000), (0.5,))
    assert r == {"verdict": True, "min_value": 0.5, "argmin_k": 1}
    assert not bad_target_test(BadTestConfig((0.5,), 1e-6, 2), (0,))["verdict"]
    r = bad_target_test(BadTestConfig((GOLD,), 0.35, 10 ** 4), (0,))
    assert r["verdict"] and r["argmin_k"] == 1
    assert r["min_value"] == pytest.approx(0.38197, abs=1e-5)


def test_bad_target_matches_brute_force():
    rng = random.Random(11)
    for _ in range(30):
        n = rng.choice([1, 2])
        v = [rng.random() for _ in range(n)]
        w = [rng.random() for _ in range(n)]
        weights = None if n == 1 or rng.random() < 0.5 else (0.3, 0.7)
        r = bad_target_test(BadTestConfig(tuple(v), 0.1, 300, weights), w)
        s, k = brute_min_score(v, w, 300, weights)
        assert r["min_value"] == pytest.approx(s, abs=1e-12)
        assert r["argmin_k"] == k


def test_config_validation():
    with pytest.raises(ValueError):
        BadTestConfig((0.1,), 0, 10)
    with pytest.raises(ValueError):
        BadTestConfig((0.1, 0.2), 0.1, 10, (0.5, 0.6))
    with pytest.raises(ValueError):
        BadTestConfig((0.1,), 0.1, 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 0.5), st.integers(1, 400),
       st.integers(1, 400))
def test_bad_target_antitone_in_K_and_eps(v, w, eps, K1, K2):
    lo, hi = sorted((K1, K2))
    if bad_target_test(BadTestConfig((v,), eps, hi), (w,))["verdict"]:
        assert bad_target_test(BadTestConfig((v,), eps, lo), (w,))["verdict"]
    if bad_target_test(BadTestConfig((v,), eps * 1.5, lo), (w,))["verdict"]:
        assert bad_target_test(BadTestConfig((v,), eps, lo), (w,))["verdict"]


# -- scans ----------------------------------------------------------------

def test_scan_rational_zero():
    r = bad_set_scan(BadTestConfig((0.0,), 0.1, 1000), 10)
    # closed form: <w> >= 0.1 iff w in [0.1, 0.9]
    assert r.survivor_fraction >= 0.8
    assert abs(r.survivor_fraction * 1024 - 0.8 * 1024) <= 2
    centers = (np.arange(1024) + 0.5) / 1024
    assert np.array_equal(r.bitmap, np.abs(centers - np.rint(centers)) >= 0.1)


def test_scan_golden_half_empty():
    assert bad_set_scan(BadTestConfig((GOLD,), 0.5, 1000), 12).survivor_fraction == 0


def test_scan_single_cell_and_budget():
    r = bad_set_scan(BadTestConfig((GOLD,), 0.1, 100), 0)
    assert r.survivor_fraction in (0.0, 1.0) and r.bitmap.shape == (1,)
    with pytest.raises(BudgetExceeded):
        bad_set_scan(BadTestConfig((0.1, 0.2), 0.1, 10), 13)


def test_scan_box_counts_monotone_and_thread_identical():
    cfg = BadTestConfig((0.3, 0.71), 0.05, 200)
    a = bad_set_scan(cfg, 6, threads=1, chunk=300)
    b = bad_set_scan(cfg, 6, threads=6, chunk=300)
    assert np.array_equal(a.bitmap, b.bitmap) and a.box_counts == b.box_counts
    counts = [c for _, _, c in a.box_counts]
    assert all(x <= y for x, y in zip(counts, counts[1:]))
    assert 0 <= a.survivor_fraction <= 1
    assert set(a.corner_counts) == {0, 1}


def test_box_counts_two_dims():
    bm = np.zeros((4, 4), dtype=bool)
    bm[0, 0] = bm[3, 3] = True
    assert [c for _, _, c in box_counts(bm)] == [1, 2, 2]


# -- spike correspondence -------------------------------------------------

def test_spike_correspondence_examples():
    assert spike_correspondence([0], [0.5], 0, 0.3, 1000) == {
        "bad_proxy": True, "spike_count": 0, "consistent": True}
    r = spike_correspondence([0.5], [0], 0, 0.2, 10)
    assert not r["bad_proxy"] and r["spike_count"] >= 1 and r["consistent"]


def brute_spike_count(v, w, s, eps, K):
    n = len(v)
    count = 0
    for k in range(1, K + 1):
        h = k - s
        if h <= 0:
            continue
        rho = eps / 2 if h < 1 else (eps / 2) / h ** (1 / n)
        ranges = [range(math.floor(-(k * a - b)) - 2, math.floor(-(k * a - b)) + 3) for a, b in zip(v, w)]
        for m in itertools.product(*ranges):
            if max(abs(mi + k * a - b) for mi, a, b in zip(m, v, w)) < rho:
                count += 1
    return count


def test_spike_count_matches_brute_force():
    rng = random.Random(12)
    for _ in range(40):
        n = rng.choice([1, 2])
        v = [rng.random() for _ in range(n)]
        w = [rng.random() for _ in range(n)]
        s = rng.random()
        r = spike_correspondence(v, w, s, 0.3, 60)
        assert r["spike_count"] == brute_spike_count(v, w, s, 0.3, 60)


def test_spike_correspondence_consistent_random():
    rng = np.random.default_rng(13)
    for _ in range(200):
        v, w, s = rng.random(), rng.random(), rng.random()
        assert spike_correspondence([v], [w], s, 0.1, 1000)["consistent"]


# -- avoidance ------------------------------------------------------------

def test_avoid_examples():
    half = Grid(standard_lattice(), (0.5, 0.5))
    box = BoxRegion.ball(0.25)
    assert avoid_test(C2, half, box, 0, 3)
    assert not avoid_test(C2, Grid(standard_lattice(), (0, 0)), box, 1.0, 2.0)
    with pytest.raises(ValueError):
        avoid_test(C2, half, box, 3, 3)


def test_avoid_matches_spike_list():
    rng = random.Random(14)
    for _ in range(100):
        off = (rng.random(), rng.random())
        y = Grid(standard_lattice(kind="float"), off)
        box = BoxRegion.ball(0.2, center=(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)))
        t_max = 3.0
        spikes = grid_spike_points(C2, y, box, t_max)
        last = max((iv.hi for _, h in spikes for iv in h), default=0.0)
        for r in (0.0, 1.0, 2.0, 2.9):
            want = all(not h.restrict(r, t_max) for _, h in spikes)
            assert avoid_test(C2, y, box, r, t_max) == want
        if last < t_max:
            assert avoid_test(C2, y, box, last, t_max)


# -- subspaces ------------------------------------------------------------

def test_affine_subspace_orthonormal():
    W = AffineSubspace([[1, 2, 3], [0, 1, 1]], [1, 1, 1])
    assert np.allclose(W.basis @ W.basis.T, np.eye(2), atol=1e-10)
    assert np.allclose(W.basis @ W.offset, 0, atol=1e-12)
    with pytest.raises(ValueError):
        AffineSubspace([[1, 0], [0, 1]])


def brute_minkowski(W, bound):
    d = W.d
    m = int(bound)
    out = []
    for k in itertools.product(range(-m, m + 1), repeat=d):
        nk = math.sqrt(sum(x * x for x in k))
        if 0 < nk <= bound and W.distance(np.array(k))[0] <= 2 ** d * nk ** -W.exponent:
            out.append(k)
    return set(out)


def test_minkowski_examples():
    sols = {tuple(k) for k in minkowski_solutions(AffineSubspace([[1, 0]]), 10)}
    assert {(m, 0) for m in range(-10, 11) if m} <= sols
    fib = {tuple(k) for k in minkowski_solutions(AffineSubspace([[1, PHI]]), 100)}
    assert {(1, 2), (2, 3), (3, 5), (5, 8)} <= fib
    assert len(minkowski_solutions(AffineSubspace([[1, PHI]]), 0.5)) == 0


def test_minkowski_matches_brute_force():
    rng = np.random.default_rng(15)
    for _ in range(5):
        W = AffineSubspace([rng.normal(size=2)])
        assert {tuple(k) for k in minkowski_solutions(W, 60)} == brute_minkowski(W, 60)
    for _ in range(3):
        W = AffineSubspace(rng.normal(size=(2, 3)))
        assert {tuple(k) for k in minkowski_solutions(W, 12)} == brute_minkowski(W, 12)
        W = AffineSubspace(rng.normal(size=(1, 3)))
        assert {tuple(k) for k in minkowski_solutions(W, 12)} == brute_minkowski(W, 12)


def brute_subspace_min(W, bound):
    m = int(bound)
    ks = np.array([k for k in itertools.product(range(-m, m + 1), repeat=W.d) if any(k)])
    nn = np.linalg.norm(ks, axis=1)
    ks = ks[nn <= bound]
    return float(subspace_scores(W, ks).min())


def test_bad_subspace_examples():
    r = bad_subspace_test(AffineSubspace([[1, 0]], [0, 0.5]), 0.4, 1000)
    assert r["verdict"] and r["min_value"] == pytest.approx(0.5)
    assert not bad_subspace_test(AffineSubspace([[1, 0]]), 1e-9, 100)["verdict"]
    W = AffineSubspace([[1, PHI]], [0, 0.5])
    r = bad_subspace_test(W, 0.05, 1000)
    assert r["min_value"] == pytest.approx(brute_subspace_min(W, 1000), rel=1e-12)
    assert r["verdict"] == (brute_subspace_min(W, 1000) >= 0.05)


def test_bad_subspace_random_against_brute_force():
    rng = np.random.default_rng(16)
    for _ in range(10):
        W = AffineSubspace([rng.normal(size=2)], rng.normal(size=2))
        assert bad_subspace_test(W, 0.1, 200)["min_value"] == pytest.approx(
            brute_subspace_min(W, 200), rel=1e-12)
    for _ in range(3):
        W = AffineSubspace(rng.normal(size=(1, 3)), rng.normal(size=3))
        assert bad_subspace_test(W, 0.1, 15)["min_value"] == pytest.approx(
            brute_subspace_min(W, 15), rel=1e-12)


def test_target_line_score_identity():
    # for k > 0 and m nearest to kv - w: line score * k sqrt(1+v^2) / |(k,m)| = k <kv - w>
    rng = np.random.default_rng(17)
    for _ in range(100):
        v, w = rng.random(), rng.random()
        L = target_line(v, w)
        for k in rng.integers(1, 10 ** 4, size=5):
            m = round(k * v - w)
            km = np.array([[k, m]])
            lhs = subspace_scores(L, km)[0] * k * math.sqrt(1 + v * v) / math.hypot(k, m)
            rhs = k * abs(k * v - w - m)
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)
