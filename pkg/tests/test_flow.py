import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikelab.contfrac import cf_value, convergents, golden_fraction, golden_quotients
from spikelab.flow import (CONSISTENT, ESCAPE, PsiFamily, arange_grid, cf_heaviness,
                           empirical_measure, excursions, heaviness_profile, lambda1_series)
from spikelab.geometry import FlowSpec, lambda1, standard_lattice, x_v

C2 = FlowSpec((1, -1))
GOLDEN20 = x_v(golden_fraction(20))
CF_TENS = [10 ** i for i in range(1, 6)]


def brute_lambda1_at(x, t, bound=40):
    """Dense enumeration of the flowed float basis (small t only)."""
    b = x.as_float() * np.exp(np.array(C2.c) * t)[:, None]
    k = np.arange(-bound, bound + 1)
    i, j = np.meshgrid(k, k, indexing="ij")
    n = np.maximum(abs(b[0, 0] * i + b[0, 1] * j), abs(b[1, 0] * i + b[1, 1] * j))
    n[bound, bound] = np.inf
    return float(n.min())


def test_contfrac_convergents():
    assert [q for _, q in convergents([10, 100, 1000])] == [10, 1001, 1001010]
    assert cf_value([1, 1, 1]) == Fraction(2, 3)
    q = convergents(golden_quotients(20))[-1][1]
    assert math.log(q) >= 30


def test_psi_family_properties():
    psi = PsiFamily(6)
    lam = np.linspace(0, 1.2, 2001)
    vals = psi.values(lam)
    assert vals.min() >= 0 and vals.max() <= 1
    for i in range(1, 7):
        assert np.all(psi.psi(i, lam[lam >= 2.0 ** -i]) == 1)
        assert np.all(psi.psi(i, lam[lam <= 2.0 ** (-i - 1)]) == 0)
    # psi_i^{-1}(1) grows with i
    assert np.all(np.diff(vals, axis=1) >= 0)


def test_lambda1_series_examples():
    s = lambda1_series(C2, standard_lattice(), [0, 1, 2])
    assert [v for _, v in s] == pytest.approx([1, math.exp(-1), math.exp(-2)], rel=1e-12)
    assert lambda1_series(C2, GOLDEN20, [0.0]) == [(0.0, float(lambda1(GOLDEN20)))]
    with pytest.raises(ValueError):
        lambda1_series(C2, GOLDEN20, [1, 0])


def test_lambda1_series_golden_stays_high():
    s = lambda1_series(C2, GOLDEN20, arange_grid(0, 20, 0.01))
    assert len(s) == 2001
    assert min(v for _, v in s) >= 0.4


def test_lambda1_series_matches_dense_enumeration():
    x = x_v(0.3183098861837907)
    ts = arange_grid(0, 4, 0.25)
    got = lambda1_series(C2, x, ts, chunk=5)
    for t, v in got:
        assert v == pytest.approx(brute_lambda1_at(x, t), rel=1e-10)


def test_lambda1_series_threads_identical():
    ts = arange_grid(0, 30, 0.1)
    x = x_v(cf_value(CF_TENS))
    assert lambda1_series(C2, x, ts, threads=1, chunk=17) == lambda1_series(C2, x, ts, threads=4, chunk=17)


def test_excursions_golden_no_dip():
    e = excursions(C2, GOLDEN20, 0.1, 20)
    assert e.to_json() == [{"s": 0.0, "t": 20}]


def test_excursions_first_cf_dip():
    e = excursions(C2, x_v(cf_value(CF_TENS)), 0.1, 20)
    (p1, q1), (p2, q2) = convergents(CF_TENS)[:2]
    alpha = cf_value(CF_TENS)
    first = e.intervals.intervals[0]
    second = e.intervals.intervals[1]
    assert first.lo == 0
    assert first.hi == pytest.approx(math.log(100), abs=1e-12)
    s2 = -math.log(10 * abs(float(q1 * alpha - p1)))
    assert second.lo == pytest.approx(s2, abs=1e-12)
    assert (first.hi, second.lo) == pytest.approx((4.6052, 4.6062), abs=1e-4)


def test_excursions_standard_lattice():
    e = excursions(C2, standard_lattice(), 0.5, 5)
    assert e.intervals.intervals[0].hi == pytest.approx(math.log(2))
    assert e.dips[0].vectors == ((0, 1),)


def test_excursion_endpoint_identities_and_governing_vector():
    x = x_v(cf_value(CF_TENS))
    e = excursions(C2, x, 0.1, 40)
    log_theta = math.log(0.1)
    from spikelab.geometry import log_abs, FlowedLattice
    assert len(e.dips) >= 3
    for dip in e.dips:
        assert len(dip.vectors) == 1
        (v,) = dip.vectors
        assert log_abs(v[1]) - dip.start == pytest.approx(log_theta, abs=1e-12)
        if dip.end < 40:
            assert log_abs(v[0]) + dip.end == pytest.approx(log_theta, abs=1e-12)
        for t in np.linspace(dip.start, min(dip.end, 40), 7)[1:-1]:
            value, _ = FlowedLattice(x, C2, float(t)).shortest()
            flowed = max(abs(float(v[0]) * math.exp(t)), abs(float(v[1]) * math.exp(-t)))
            assert float(value) == pytest.approx(flowed, rel=1e-10)


def test_excursions_match_series():
    x = x_v(cf_value([3, 7, 15, 1, 292]))
    e = excursions(C2, x, 0.3, 12)
    for t, v in lambda1_series(C2, x, arange_grid(0, 12, 0.01)):
        if abs(v - 0.3) > 1e-9:
            assert e.intervals.contains(t) == (v >= 0.3)


def test_empirical_measure_examples():
    psi = PsiFamily(5)
    r = empirical_measure(C2, x_v(golden_fraction(1000)), 1000, psi)
    assert r.masses == (1.0,) * 5 and r.min_lambda1 >= 0.25
    one = empirical_measure(C2, x_v(cf_value(CF_TENS)), 1, psi)
    assert one.masses == tuple(float(v) for v in psi.values(lambda1(x_v(cf_value(CF_TENS)))))
    with pytest.raises(ValueError):
        empirical_measure(C2, GOLDEN20, 0)


def test_empirical_measure_averaging_and_monotone():
    x = x_v(cf_value(CF_TENS + [10 ** 6, 10 ** 7]))
    psi = PsiFamily(6)
    full = empirical_measure(C2, x, 60, psi)
    a = empirical_measure(C2, x, 30, psi)
    b = empirical_measure(C2, x, 30, psi, start=30)
    for m, ma, mb in zip(full.masses, a.masses, b.masses):
        assert m == pytest.approx((ma + mb) / 2, abs=1e-15)
    assert all(0 <= m <= 1 for m in full.masses)
    assert all(u <= v for u, v in zip(full.masses, full.masses[1:]))


def test_heaviness_profile_examples():
    eta = [2.0 ** -i for i in range(1, 7)]
    golden = x_v(golden_fraction(10 ** 4))
    rep = heaviness_profile(C2, golden, [100, 1000, 10000], eta)
    assert rep.verdict == CONSISTENT
    assert all(m == 1 for r in rep.rows for m in r.masses)

    tens = x_v(cf_value([10 ** i for i in range(1, 31)]))
    small = [1e-3 * 2.0 ** -i for i in range(1, 7)]
    rep = heaviness_profile(C2, tens, [100, 1000], small)
    assert rep.verdict == ESCAPE
    assert rep.rows[-1].masses[0] < 0.5

    assert heaviness_profile(C2, golden, [], eta).rows == ()
    assert heaviness_profile(C2, golden, [], eta).verdict == ESCAPE


def test_cf_heaviness_examples():
    assert cf_heaviness([1] * 10, 1, 10) == 0
    assert cf_heaviness(list(range(1, 101)), 1, 100) == pytest.approx(math.lgamma(101) / 100)
    assert cf_heaviness(list(range(1, 101)), 1, 100) == pytest.approx(3.6374, abs=1e-4)
    assert cf_heaviness([1] * 50, 0.5, 50) == 0
    with pytest.raises(ValueError):
        cf_heaviness([1, 2], 1, 3)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 10 ** 6), min_size=1, max_size=30), st.floats(0.01, 10),
       st.floats(1.0, 3.0), st.integers(0, 29))
def test_cf_heaviness_monotone(a_seq, eps, factor, idx):
    n = len(a_seq)
    base = cf_heaviness(a_seq, eps, n)
    assert cf_heaviness(a_seq, eps * factor, n) >= base
    bumped = list(a_seq)
    bumped[idx % n] += 5
    assert cf_heaviness(bumped, eps, n) >= base
