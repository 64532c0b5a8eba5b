import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condtest import reference
from condtest.distributions import Distribution
from condtest.equality import C_TE_DEFAULT
from condtest.generators import parse_generator
from condtest.harness import verify_lemmas

from helpers import sigma


def test_l1_examples():
    p = Distribution([0.25] * 4)
    assert reference.l1_distance(p, p) == 0.0
    assert reference.l1_distance(Distribution([1.0, 0.0]), Distribution([0.0, 1.0])) == 2.0
    for eps in (0.1, 0.5, 1.0):
        a, b = parse_generator("two-bump").build(100, eps, np.random.default_rng(0))
        assert reference.l1_distance(a, b) == pytest.approx(eps, abs=1e-12)
    with pytest.raises(ValueError):
        reference.l1_distance(Distribution([1.0]), p)


def test_chi2_binary_examples():
    assert reference.chi2_binary(0.3, 0.3) == 0.0
    assert reference.chi2_binary(0.0, 0.0) == 0.0
    assert reference.chi2_binary(1.0, 1.0) == 0.0
    assert reference.chi2_binary(0.5, 0.7) == pytest.approx(0.04 / 0.96, abs=1e-9)
    assert reference.chi2_binary(0.5, 0.7) == pytest.approx(0.0416667, abs=1e-7)
    assert reference.chi2_binary(0.0, 0.25) == pytest.approx(0.142857, abs=1e-6)


@given(p=st.floats(0, 1), q=st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_chi2_binary_range(p, q):
    assert 0.0 <= reference.chi2_binary(p, q) <= 1.0 + 1e-12


def test_chilow_examples():
    lhs, bound, premise = reference.chilow_bound(0.3, 0.3, 0.2, 0.2)
    assert lhs == 0.0 and premise == 0.0 and bound == 0.0
    lhs, bound, premise = reference.chilow_bound(0.5, 0.1, 0.1, 0.5)
    assert premise == pytest.approx(2 * abs(0.5 * 0.5 - 0.1 * 0.1) / 0.36)
    assert premise == pytest.approx(4 / 3)
    # p_{i,j} = (5/6, 1/6), q_{i,j} = (1/6, 5/6)
    assert lhs == pytest.approx(4 / 9)
    assert bound == pytest.approx((16 / 9) * 0.36 / (4 * 1.44))
    assert lhs >= bound


@given(quad=st.tuples(*[st.floats(1e-6, 1.0)] * 4))
@settings(max_examples=300, deadline=None)
def test_chilow_never_violated(quad):
    lhs, bound, _ = reference.chilow_bound(*quad)
    # near-equal quadruples leave round-off of order 1e-30 in the bound
    assert lhs >= bound * (1 - 1e-9) - 1e-15


def test_var_mean_formula():
    assert reference.var_mean_formula(5, 5) == 0.0
    assert reference.var_mean_formula(0, 0) == 0.0
    assert reference.var_mean_formula(10, 2) == pytest.approx(64 / 12 * (1 - math.exp(-12)))
    assert reference.var_mean_formula(10, 2) == pytest.approx(5.3333, abs=1e-4)


@pytest.mark.parametrize("lam1, lam2", [(5.0, 5.0), (10.0, 2.0), (0.0, 0.0), (1.0, 0.0)])
def test_poisson_moments_agree(lam1, lam2):
    mean, var, sd = reference.poisson_stat_moments(lam1, lam2, 100_000, np.random.default_rng(11))
    expected = reference.var_mean_formula(lam1, lam2)
    if lam1 == lam2 == 0:
        assert mean == 0.0 and var == 0.0
    else:
        assert abs(mean - expected) <= 5 * sd
    with pytest.raises(ValueError):
        reference.poisson_stat_moments(-1, 1, 10, np.random.default_rng(0))


def test_snapshot_constant():
    snap = reference.load_lemma_constants()
    assert 0 < snap.var_c <= 10
    # the default batch constant covers the n >= max(192, 20c) / chi requirement
    assert C_TE_DEFAULT >= max(192, 20 * snap.var_c)
    assert json.loads(snap.to_json())["var_c"] == snap.var_c
    assert snap.seeds["verify_lemmas"] == 0


def _exp_approx_by_hand(p, q):
    """Fraction-exact sum over the p+q order, written independently of the library."""
    pf = [Fraction(x).limit_denominator(10**9) for x in p]
    qf = [Fraction(x).limit_denominator(10**9) for x in q]
    order = sorted(range(len(p)), key=lambda i: (-(pf[i] + qf[i]), i))
    total = Fraction(0)
    for rank, i in enumerate(order):
        tail = order[rank:]
        tp, tq = sum(pf[j] for j in tail), sum(qf[j] for j in tail)
        s = pf[i] + qf[i]
        if s == 0:
            continue
        ri = (pf[i] - qf[i]) / s
        rg = (tp - tq) / (tp + tq)
        total += s / 2 * abs(ri - rg)
    return total


def test_exp_approx_two_bump():
    p, q = parse_generator("two-bump").build(8, 0.5, np.random.default_rng(2))
    total, floor = reference.exp_approx_check(p, q)
    assert floor == pytest.approx(0.125)
    assert total >= 0.125
    assert total == pytest.approx(float(_exp_approx_by_hand(p.probs, q.probs)), rel=1e-9)
    total, floor = reference.exp_approx_check(p, p)
    assert total == 0.0 and floor == 0.0


@given(data=st.data())
@settings(max_examples=50, deadline=None)
def test_exp_approx_matches_hand_sum(data):
    k = data.draw(st.integers(2, 8))
    w1 = data.draw(st.lists(st.integers(0, 20), min_size=k, max_size=k).filter(any))
    w2 = data.draw(st.lists(st.integers(0, 20), min_size=k, max_size=k).filter(any))
    p, q = Distribution.from_weights(w1), Distribution.from_weights(w2)
    total, floor = reference.exp_approx_check(p, q)
    assert total == pytest.approx(float(_exp_approx_by_hand(p.probs, q.probs)), rel=1e-9, abs=1e-12)
    assert total >= floor * (1 - 1e-9)


@pytest.mark.parametrize("k", [4, 10, 37])
def test_clairvoyant_uniform_ratio(k):
    u = Distribution.uniform(k)
    for i in range(1, k + 1):
        cv = reference.clairvoyant(u, u, i)
        assert cv.rank == i
        assert cv.ratio == pytest.approx(1 / (k - cv.rank + 1))
        assert cv.approximability == 0.0


def test_clairvoyant_four_element_example():
    p = Distribution([0.375, 0.375, 0.125, 0.125])
    q = Distribution([0.125, 0.125, 0.375, 0.375])
    cv = reference.clairvoyant(p, q, 1)
    # ratio(1) = 0.25 / 0.5; G_1 is everything and has ratio 0
    assert cv.approximability == pytest.approx(0.5)
    assert cv.ratio == pytest.approx(0.25)
    cv = reference.clairvoyant(p, q, 3)
    # G_3 = {3, 4}: ratio -0.5 equals ratio(3)
    assert cv.approximability == pytest.approx(0.0)
    assert cv.ratio == pytest.approx(0.5)


def test_clairvoyant_spike():
    eps = 0.5
    p, q = parse_generator("spike").build(100, eps, np.random.default_rng(0))
    cv = reference.clairvoyant(p, q, 1)
    assert cv.rank == 1
    assert cv.approximability >= eps / 2


def test_sweeps_have_no_violations():
    rng = np.random.default_rng(21)
    assert reference.chilow_sweep(2000, rng)["violations"] == 0
    assert reference.exp_approx_sweep(200, rng)["violations"] == 0


def test_broken_chi_squared_is_caught():
    broken = lambda *quad: reference.pair_chi2(*quad) / 10
    report = verify_lemmas(0, chilow_n=500, exp_approx_n=20, moment_trials=2000, chi_fn=broken)
    assert not report["passed"]
    assert report["chilow"]["violations"] > 0


def test_moment_grid_fit():
    rows = reference.moment_grid((0.0, 2.0), 20_000, np.random.default_rng(3))
    assert len(rows) == 4
    c = reference.fit_var_constant(rows)
    for r in rows:
        assert r["var"] <= reference.var_bound(r["lam1"], r["lam2"], c) + 1e-9
