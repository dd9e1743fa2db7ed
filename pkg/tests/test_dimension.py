import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.contfrac import cf_value, golden_fraction
from spikelab.dimension import (QUASI, _cover_count, ProductSet, QuasiMetric, box_count, cantor_intervals,
                                covering_count_experiment, dim_estimate, dyadic, fit_slope,
                                separated_count)
from spikelab.errors import BudgetExceeded, DegenerateFit
from spikelab.geometry import FlowSpec, Grid, lambda1_at, x_v

C2 = FlowSpec((1, -1))
FLOW3 = FlowSpec((1, 0.5, -1.5))
Q3 = QuasiMetric(FLOW3)
UNIT2 = ProductSet([[(0, 1)], [(0, 1)]])
LOG32 = math.log(2) / math.log(3)


# -- quasi-metric ---------------------------------------------------------

def test_quasi_metric_basics():
    assert Q3.dim == 2 and Q3.h_a == 1.5
    assert Q3.constant == 2.0
    assert QuasiMetric(FlowSpec((2, -1, -1))).constant == 1.0
    assert Q3.norm([0.25, 0.25])[0] == pytest.approx(0.25)
    assert Q3.norm([0.1, 0.5])[0] == pytest.approx(0.25)
    assert Q3.norm([0, 0])[0] == 0


def test_quasi_triangle_random_triples():
    rng = np.random.default_rng(21)
    for c in [(1, 0.5, -1.5), (0.3, 0.2, -0.5), (2, 1, -3), (0.1, 3, -3.1)]:
        q = QuasiMetric(FlowSpec(c))
        u, v, w = (rng.normal(scale=s, size=(10 ** 5, 2)) for s in (1, 1, 0.01))
        w = v + w
        lhs = q.dist(u, w)
        rhs = q.constant * (q.dist(u, v) + q.dist(v, w))
        assert np.all(lhs <= rhs * (1 + 1e-12))
        assert np.allclose(q.dist(u, v), q.dist(v, u))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4), st.floats(-200, 200))
def test_quasi_scaling_law(uv, t):
    u, v = uv[:2], uv[2:]
    if u == v:
        return
    assert Q3.log_dist(u, v, t) == pytest.approx(t + Q3.log_dist(u, v), abs=1e-12 * (1 + abs(t)))


# -- separated sets -------------------------------------------------------

def brute_max_separated(pts, delta, dist):
    n = len(pts)
    for size in range(n, 0, -1):
        for sub in itertools.combinations(range(n), size):
            if all(dist(pts[i], pts[j]) >= delta * (1 - 1e-9) for i, j in itertools.combinations(sub, 2)):
                return size
    return 0


def test_separated_examples():
    assert separated_count([[0], [1]], 0.5) == 2
    grid = np.arange(101)[:, None] / 100
    assert separated_count(grid, 0.1) == 11
    assert separated_count(grid, 0.1, exact=True) == 11
    assert separated_count(np.zeros((0, 2)), 0.1) == 0


def test_separated_exact_matches_brute_force_and_bounds_greedy():
    rng = np.random.default_rng(22)
    eu = lambda a, b: float(np.linalg.norm(a - b))
    qd = lambda a, b: float(Q3.dist(a, b)[0])
    for _ in range(15):
        pts = rng.random((10, 2))
        for metric, dist in (("euclidean", eu), (QUASI, qd)):
            want = brute_max_separated(pts, 0.3, dist)
            got = separated_count(pts, 0.3, metric, Q3, exact=True)
            greedy = separated_count(pts, 0.3, metric, Q3)
            assert got == want and greedy <= got


def test_separated_greedy_is_separated_and_maximal():
    rng = np.random.default_rng(23)
    pts = rng.random((2000, 2))
    n = separated_count(pts, 0.05)
    # a maximal 0.05-separated set covers by 0.05-balls; packing bounds the count
    assert 1 / (math.pi * 0.05 ** 2) <= n <= (1 + 0.05) ** 2 / (math.pi * 0.025 ** 2)
    with pytest.raises(BudgetExceeded):
        separated_count(rng.random((400, 2)), 0.1, exact=True, node_budget=1000)


# -- box counting ---------------------------------------------------------

def test_dim_estimate_examples():
    ds = dyadic(4, 10)
    assert dim_estimate(UNIT2, ds).slope == pytest.approx(2.0, abs=0.05)
    assert dim_estimate(UNIT2, ds, QUASI, Q3).slope == pytest.approx(1.5, abs=0.05)
    seg = ProductSet([[(0, 1)], [(0, 0)]])
    est = dim_estimate(seg, ds, QUASI, Q3)
    assert est.slope == pytest.approx(1.0, abs=0.05)
    assert est.slope >= 1 + 1.5 - 2


def test_full_box_quasi_dimension_is_h_a():
    for c in [(1, 0.5, -1.5), (0.7, 0.4, -1.1), (1.2, 0.9, -2.1)]:
        q = QuasiMetric(FlowSpec(c))
        assert dim_estimate(UNIT2, dyadic(4, 12), QUASI, q).slope == pytest.approx(q.h_a, abs=0.05)


@pytest.mark.parametrize("factors", [
    [[(0, 1)], [(0, 1)]],
    [[(0, 1)], [(0.5, 0.5)]],
    [[(0.2, 0.2)], [(0, 1)]],
    [cantor_intervals(14), [(0, 1)]],
    [[(0, 1)], cantor_intervals(14)],
    [cantor_intervals(14), cantor_intervals(14)],
])
def test_relating_dimensions_battery(factors):
    S = ProductSet(factors)
    ds = dyadic(2, 9, 3.0)
    dim_m = dim_estimate(S, ds).slope
    dim_a = dim_estimate(S, ds, QUASI, Q3).slope
    assert dim_a >= dim_m + Q3.h_a - 2 - 0.05


def test_cantor_box_counts_exact():
    c = ProductSet([cantor_intervals(12)])
    for k in range(1, 10):
        assert box_count(c, 3.0 ** -k) == 2 ** k
    assert dim_estimate(c, dyadic(1, 9, 3.0)).slope == pytest.approx(LOG32, abs=1e-9)


def test_box_count_inputs_agree():
    bm = np.zeros((64, 64), dtype=bool)
    bm[:, :32] = True
    centers = (np.argwhere(bm) + 0.5) / 64
    for k in range(1, 7):
        d = 2.0 ** -k
        assert box_count(bm, d) == box_count(centers, d) == box_count(
            ProductSet([[(0, 1)], [(0, 0.5)]]), d)
    counts = [box_count(centers, d, QUASI, Q3) for d in dyadic(1, 6)]
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_fit_errors():
    with pytest.raises(DegenerateFit):
        fit_slope([0.5, 0.25, 0.125, 0.0625], [3, 3, 3, 3])
    with pytest.raises(ValueError):
        fit_slope([0.5, 0.25, 0.125], [1, 2, 4])
    est = fit_slope([0.5, 0.25, 0.125, 0.0625], [2, 4, 8, 16])
    assert est.slope == pytest.approx(1) and est.residual_rms < 1e-12
    assert est.counts == (2, 4, 8, 16)


# -- covering counts ------------------------------------------------------

def sampled_survivors(alpha, gammas, threshold, r, T, flow_lam):
    """Brute-force E_{y,T} membership on a gamma grid for x = [[1, a], [0, 1]]."""
    alive = np.ones(len(gammas), dtype=bool)
    for t in range(1, T + 1):
        if flow_lam(t) < threshold:
            continue
        et = math.exp(t)
        best = np.full(len(gammas), np.inf)
        nmax = int(r * et) + 1
        for n in range(-nmax, nmax + 1):
            base = gammas - n * alpha
            for dm in (-1, 0, 1):
                m = np.rint(base) + dm
                best = np.minimum(best, np.hypot(et * (base - m), n / et))
        alive &= best <= r
    return alive


def test_covering_exact_matches_sampling():
    for alpha, theta, r in [(float(cf_value([10, 100, 1000])), 0.1, 0.008),
                            (float(golden_fraction(30)), 0.5, 0.04),
                            (0.3183098861837907, 0.3, 0.02)]:
        x = x_v(alpha)
        y = Grid(x, (0.3, 0.7))
        for T in (1, 2, 3, 5):
            rep = covering_count_experiment(C2, y, theta, r, T)
            step = r * math.exp(-T) / 10
            gammas = np.arange(-rep.r_y + step / 2, rep.r_y, step)
            alive = sampled_survivors(alpha, gammas, theta, r, T, lambda t: lambda1_at(C2, x, t))
            # rebuild the sampled cover by merging consecutive survivors
            runs = []
            for g, a in zip(gammas, alive):
                if a:
                    if runs and g - runs[-1][1] <= step * 1.5:
                        runs[-1][1] = g
                    else:
                        runs.append([g, g])
            sampled = _cover_count([tuple(v) for v in runs], 2 * r * math.exp(-T)) if runs else 0
            assert abs(sampled - rep.count) <= max(1, rep.count // 10)
            assert rep.count <= rep.bound


def test_covering_golden_no_growth():
    y = Grid(x_v(golden_fraction(30)), (0.3, 0.2))
    for T in (0, 10, 20):
        rep = covering_count_experiment(C2, y, 0.5, 0.04, T)
        assert rep.I_size == 0 and rep.bound == rep.C and rep.count <= rep.C


def test_covering_one_dip_instance():
    y = Grid(x_v(cf_value([10 ** i for i in range(1, 7)])), (0.3, 0.2))
    rep = covering_count_experiment(C2, y, 0.1, 0.008, 14)
    assert rep.I == (10, 11)
    assert rep.count <= rep.bound == rep.C * 9
    for T in range(1, 21):
        rep = covering_count_experiment(C2, y, 0.1, 0.008, T)
        assert rep.count <= rep.bound


def test_covering_errors():
    y = Grid(x_v(golden_fraction(30)), (0.3, 0.2))
    with pytest.raises(BudgetExceeded):
        covering_count_experiment(C2, y, 0.5, 0.04, 26)
    with pytest.raises(ValueError):
        covering_count_experiment(C2, y, 0.5, 0.1, 5)
