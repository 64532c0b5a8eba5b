import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condtest.distributions import CondOracle, Distribution, Verdict
from condtest.generators import parse_generator
from condtest.identity import (
    IdentityConfig,
    build_grouping,
    identity_test,
    near_uniform_identity_test,
    near_uniform_params,
)

from helpers import sigma


def _groups(g):
    return [g.group(i).tolist() for i in range(len(g))]


def test_grouping_examples():
    g = build_grouping(Distribution([0.4, 0.2, 0.2, 0.1, 0.1]), 2)
    assert _groups(g) == [[2], [3], [4, 5]]
    assert g.masses == pytest.approx([0.2, 0.2, 0.2])
    g = build_grouping(Distribution([0.5, 0.3, 0.2]), 2)
    assert _groups(g) == [[2, 3]] and not g.flagged
    assert g.masses == pytest.approx([0.5])


def test_grouping_uniform_has_one_group_per_element():
    # G_1 is the whole domain, including x itself
    g = build_grouping(Distribution.uniform(8), 1)
    assert len(g) == 8 and _groups(g) == [[i] for i in range(1, 9)]


def test_grouping_flags_large_residual():
    g = build_grouping(Distribution([0.3, 0.29, 0.21, 0.2]), 1)
    assert _groups(g) == [[1], [2, 3], [4]]
    assert g.flagged and g.n_complete == 2
    assert g.complete_ids().tolist() == [1, 2, 3]


def test_grouping_rejects_zero_mass():
    with pytest.raises(ValueError, match="empty"):
        build_grouping(Distribution([1.0, 0.0]), 2)


@given(
    w=st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=40),
    pick=st.integers(0, 10**6),
)
@settings(max_examples=200, deadline=None)
def test_grouping_invariants(w, pick):
    p = Distribution.from_weights(w)
    x = pick % p.k + 1
    g = build_grouping(p, x)
    px = p[x]
    members = np.concatenate([g.group(i) for i in range(len(g))])
    assert sorted(members.tolist()) == sorted(g.ids.tolist())
    assert g.ids[0] == x
    assert np.all(p.probs[g.ids - 1] <= px * (1 + 1e-9))
    complete = g.masses[: g.n_complete]
    assert np.all(complete >= px * (1 - 1e-9)) and np.all(complete <= 2 * px * (1 + 1e-9))
    if g.n_complete:
        # near-uniform induced distribution over complete groups
        assert complete.max() <= 2 * complete.min() * (1 + 1e-9)
    if g.flagged:
        assert g.masses[-1] < px


def test_near_uniform_params_budget():
    prs = near_uniform_params(0.5, 0.1, 32)
    for j, pr in enumerate(prs, start=1):
        assert pr.chi_bound == pytest.approx(min(j * 0.5 / 8, 2) ** 2 / 144)
        assert pr.delta == pytest.approx(6 * 0.1 / (math.pi**2 * j**2))
    # the per-tuple deltas sum to less than delta
    assert sum(pr.delta for pr in near_uniform_params(0.5, 0.1, 10**4)) < 0.1


def _near_uniform_rate(p, q, y, eps, delta, trials, seed):
    rng = np.random.default_rng(seed)
    diffs = 0
    for _ in range(trials):
        verdict = near_uniform_identity_test(eps, delta, CondOracle(p, rng), CondOracle(q, rng), y, rng)
        diffs += verdict is Verdict.DIFF
    return diffs / trials


def test_near_uniform_completeness():
    u = Distribution.uniform(16)
    rate = _near_uniform_rate(u, u, 1, 0.5, 0.1, 300, 1)
    assert 1 - rate >= 0.9 - 3 * sigma(0.9, 300)


def test_near_uniform_two_bump():
    p, q = parse_generator("two-bump").build(16, 0.5, np.random.default_rng(2))
    y = int(np.flatnonzero(q.probs < p.probs)[0]) + 1
    trials = 200
    floor = 0.2 - 0.1
    assert _near_uniform_rate(p, q, y, 0.5, 0.1, trials, 3) >= floor - 3 * sigma(floor, trials)


def test_near_uniform_two_elements():
    p, q = Distribution([0.5, 0.5]), Distribution([0.75, 0.25])
    trials = 200
    floor = 0.2 - 0.1
    assert _near_uniform_rate(p, q, 2, 0.5, 0.1, trials, 4) >= floor - 3 * sigma(floor, trials)


def test_identity_subtest_budgets():
    eps, delta = 0.5, 0.2
    p = Distribution.from_weights(np.arange(1, 201.0) ** -1)
    rng = np.random.default_rng(5)
    trace = []
    identity_test(p, CondOracle(p, rng), eps, delta, rng, trace=trace)
    assert len(trace) == 32
    for tr in trace:
        t = tr.tup
        if tr.pair_params is not None:
            assert tr.pair_params.chi_bound == pytest.approx(t.beta**2 / 1800)
            assert tr.pair_params.delta == pytest.approx(eps * delta / 48)
        assert tr.mass_params.chi_bound == pytest.approx((t.alpha * t.beta / 5) ** 2)
        assert tr.mass_params.delta == pytest.approx(eps * delta / 48)
        assert tr.near_uniform_eps == pytest.approx(t.beta / 5)
        assert tr.near_uniform_delta == pytest.approx(eps * delta / 48)


def test_identity_charges_only_q_by_default():
    p = Distribution.uniform(50)
    rng = np.random.default_rng(6)
    p_or, q_or = CondOracle(p, rng), CondOracle(p, rng)
    identity_test(p, q_or, 1.0, 0.2, rng, p_oracle=p_or)
    assert q_or.queries > 0
    before = p_or.queries
    identity_test(p, q_or, 1.0, 0.2, rng, p_oracle=p_or, config=IdentityConfig(charge_find_element=True))
    # the charged run adds the 16 Find-element samples on top of the p-side tests
    assert p_or.queries - before > 16


def test_identity_is_deterministic_given_seed():
    p, q = parse_generator("spike").build(40, 0.5, np.random.default_rng(0))
    out = []
    for _ in range(2):
        rng = np.random.default_rng(99)
        q_or = CondOracle(q, rng)
        out.append((identity_test(p, q_or, 0.5, 0.2, rng), q_or.queries))
    assert out[0] == out[1]


def test_identity_finds_spike():
    p, q = parse_generator("spike").build(100, 0.5, np.random.default_rng(0))
    rng = np.random.default_rng(7)
    verdicts = [identity_test(p, CondOracle(q, rng), 0.5, 0.2, rng) for _ in range(5)]
    assert verdicts.count(Verdict.DIFF) >= 1


def test_identity_validation(rng):
    p = Distribution.uniform(4)
    with pytest.raises(ValueError):
        identity_test(p, CondOracle(p, rng), 0.0, 0.2, rng)
    with pytest.raises(ValueError):
        identity_test(p, CondOracle(p, rng), 0.5, 1.0, rng)
    with pytest.raises(ValueError):
        identity_test(p, CondOracle(Distribution.uniform(5), rng), 0.5, 0.2, rng)
