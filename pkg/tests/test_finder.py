import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condtest.distributions import CondOracle, Distribution
from condtest.finder import (
    CandidateTuple,
    find_element,
    heaviness_order,
    pickgood_weights,
    schedule,
    tail_masses,
    tuple_quality,
)
from condtest.generators import parse_generator

from helpers import sigma


def test_schedule_eps_two():
    betas, alphas = schedule(2.0)
    assert betas.tolist() == [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
    assert alphas == pytest.approx([1 / (4 * j * math.log(8)) for j in range(1, 9)])
    _, alphas2 = schedule(2.0, log_base="2")
    assert alphas2[0] == pytest.approx(1 / 12)


def test_schedule_lengths_and_clamp():
    assert schedule(0.5)[0].size == 32
    betas, _ = schedule(0.3)  # 16/0.3 is not an integer
    assert betas.size == 54 and betas.max() == 2.0
    with pytest.raises(ValueError):
        schedule(0.0)
    with pytest.raises(ValueError):
        schedule(2.5)
    with pytest.raises(ValueError):
        schedule(1.0, log_base="10")


@given(eps=st.floats(0.01, 2.0))
@settings(max_examples=100, deadline=None)
def test_schedule_invariants(eps):
    betas, alphas = schedule(eps)
    assert betas.size == math.ceil(16 / eps)
    assert np.all((betas > 0) & (betas <= 2))
    assert np.all((alphas > 0) & (alphas <= 1))
    # alpha_j * j is constant along the schedule
    prod = alphas * np.arange(1, betas.size + 1)
    assert np.allclose(prod, prod[0])


def test_tuple_validation():
    with pytest.raises(ValueError):
        CandidateTuple(1, 2.5, 0.1, 1)
    with pytest.raises(ValueError):
        CandidateTuple(1, 0.5, 0.0, 1)


@pytest.mark.parametrize("k", [10, 1000, 100_000])
def test_query_cost_is_m_for_any_k(k):
    oracle = CondOracle(Distribution.uniform(k), np.random.default_rng(0))
    tuples = find_element(oracle, 0.5)
    assert len(tuples) == 32 and oracle.queries == 32
    assert [t.j for t in tuples] == list(range(1, 33))


def test_known_distribution_needs_rng():
    with pytest.raises(ValueError):
        find_element(Distribution.uniform(4), 1.0)


def test_heaviness_order_and_tails():
    p = Distribution([0.1, 0.4, 0.1, 0.4])
    assert heaviness_order(p).tolist() == [2, 4, 1, 3]
    assert tail_masses(p) == pytest.approx([0.2, 1.0, 0.1, 0.6])


@given(w=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30).filter(lambda w: sum(w) > 0))
@settings(max_examples=100, deadline=None)
def test_heaviness_order_sorted(w):
    p = Distribution.from_weights(w)
    order = heaviness_order(p)
    assert sorted(order.tolist()) == list(range(1, p.k + 1))
    vals = p.probs[order - 1]
    assert np.all(vals[:-1] >= vals[1:])


def test_tuple_quality_examples():
    p = Distribution([0.7, 0.2, 0.1])
    assert tuple_quality(p, None, CandidateTuple(1, 0.5, 0.5, 1), a=np.ones(3))
    assert not tuple_quality(p, None, CandidateTuple(3, 0.5, 0.2, 1), a=np.ones(3))
    u = Distribution.uniform(5)
    assert tuple_quality(u, None, CandidateTuple(5, 2.0, 0.2, 1), a=np.full(5, 2.0))
    with pytest.raises(ValueError):
        tuple_quality(u, None, CandidateTuple(1, 1.0, 0.1, 1))


def test_pickgood_weights():
    p = Distribution([0.5, 0.5, 0.0])
    q = Distribution([0.25, 0.5, 0.25])
    assert pickgood_weights(p, q).tolist() == [0.5, 0.0, 0.0]


def test_spike_element_found():
    eps, runs = 0.5, 10_000
    p, _ = parse_generator("spike").build(100, eps, np.random.default_rng(0))
    rng = np.random.default_rng(1)
    hits = sum(any(t.element == 1 for t in find_element(p, eps, rng=rng)) for _ in range(runs))
    expected = 1 - (1 - eps / 2) ** 32
    assert expected >= 1 - math.exp(-2)
    assert hits / runs >= expected - 3 * sigma(expected, runs)


def success_rate(p: Distribution, a: np.ndarray, eps: float, runs: int, seed: int) -> float:
    """Fraction of runs where some returned tuple passes :func:`tuple_quality`."""
    rng = np.random.default_rng(seed)
    tails = tail_masses(p)
    wins = 0
    for _ in range(runs):
        tuples = find_element(p, eps, rng=rng)
        wins += any(tails[t.element - 1] >= t.alpha and a[t.element - 1] >= t.beta for t in tuples)
    return wins / runs


def test_quality_helper_agrees_with_tuple_quality():
    p = Distribution.from_weights(np.arange(1, 21.0) ** -1)
    a = np.linspace(0, 2, 20)
    rng = np.random.default_rng(3)
    tails = tail_masses(p)
    for t in find_element(p, 0.5, rng=rng):
        fast = tails[t.element - 1] >= t.alpha and a[t.element - 1] >= t.beta
        assert fast == tuple_quality(p, None, t, a=a)


def test_pickgood_specialization_two_bump():
    eps = 0.5
    p, q = parse_generator("two-bump").build(64, eps, np.random.default_rng(5))
    a = pickgood_weights(p, q)
    assert float(p.probs @ a) >= eps / 4
    runs = 2000
    assert success_rate(p, a, eps, runs, 6) >= 0.2 - 3 * sigma(0.2, runs)
