"""Poissonized equality test for two Bernoulli sources.

Decides between ``p = q`` and a chi-squared distance
``(p - q)^2 / ((p + q)(2 - p - q)) >= chi_bound``.

A *source* is any callable taking an integer array of batch sizes and
returning, elementwise, the number of successes in that many fresh draws.
Oracle-backed sources are built with :func:`oracle_source` and
:func:`pair_source`; :func:`bernoulli_source` simulates a coin directly.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .distributions import Verdict, as_ids

__all__ = [
    "C_TE_DEFAULT",
    "EqualityParams",
    "Source",
    "bernoulli_source",
    "oracle_source",
    "pair_source",
    "t_statistic",
    "t_values",
    "test_equal",
    "test_equal_batch",
    "test_equal_many",
]

C_TE_DEFAULT = 200.0
# Largest Poisson mean numpy samples reliably; beyond it a test is infeasible.
MAX_BATCH_MEAN = 1e15

Source = Callable[[np.ndarray], np.ndarray]


def _term(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    num = (a - b) ** 2 - a - b
    den = a + b - 1
    zero_num = num == 0
    if np.any(~zero_num & (den == 0)):
        raise ValueError("degenerate statistic")
    return np.where(zero_num, 0.0, num / np.where(zero_num, 1, den))


def t_values(n1, n2, n_prime, n_dprime, *, literal: bool = False) -> np.ndarray:
    """Vectorized :func:`t_statistic` over integer arrays."""
    n1 = np.asarray(n1, dtype=np.float64)
    n2 = np.asarray(n2, dtype=np.float64)
    a = np.asarray(n_prime, dtype=np.float64)
    b = np.asarray(n_dprime, dtype=np.float64)
    first = _term(n1, n2)
    if not literal:
        return first + _term(a - n1, b - n2)
    num = (n1 - n2) ** 2 - n1 - n2
    den = a + b - n1 - n2 - 1
    zero_num = num == 0
    if np.any(~zero_num & (den == 0)):
        raise ValueError("degenerate statistic")
    return first + np.where(zero_num, 0.0, num / np.where(zero_num, 1, den))


def t_statistic(n1: int, n2: int, n_prime: int, n_dprime: int, *, literal: bool = False) -> float:
    """Two-sided Poissonized statistic for success counts ``n1``, ``n2``.

    The default form adds the success-count term to the same term evaluated on
    the failure counts ``n' - n1`` and ``n'' - n2``; its expectation is zero
    when both sources agree. ``literal=True`` reuses the success-count
    numerator in the second term instead.

    A term whose numerator is 0 is 0 whatever its denominator.

    >>> t_statistic(0, 0, 0, 0)
    0.0
    >>> round(t_statistic(20, 0, 100, 100, literal=True), 4)
    22.1229
    """
    if n1 > n_prime or n2 > n_dprime:
        raise ValueError("success counts exceed batch sizes")
    return float(t_values(n1, n2, n_prime, n_dprime, literal=literal))


@dataclass(frozen=True)
class EqualityParams:
    """Parameters of one equality test.

    ``n`` defaults to ``ceil(c_te / chi_bound)``; the analysis needs
    ``n * chi_bound >= 10``.
    """

    chi_bound: float
    delta: float
    c_te: float = C_TE_DEFAULT
    n: int | None = None

    def __post_init__(self) -> None:
        if not 0 < self.chi_bound <= 2:
            raise ValueError(f"chi_bound must lie in (0, 2], got {self.chi_bound}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        n = self.n if self.n is not None else math.ceil(self.c_te / self.chi_bound)
        if n < 1:
            raise ValueError("batch mean must be positive")
        if n * self.chi_bound < 10:
            raise ValueError(f"n * chi_bound = {n * self.chi_bound:.3g} < 10")
        if n > MAX_BATCH_MEAN:
            raise ValueError(f"batch mean {n:.3g} is infeasible to simulate")
        object.__setattr__(self, "n", int(n))

    @property
    def repetitions(self) -> int:
        return math.ceil(18 * math.log(1 / self.delta))

    @property
    def threshold(self) -> float:
        return self.n * self.chi_bound / 2


def test_equal_batch(
    src_p: Source,
    src_q: Source,
    params: Sequence[EqualityParams],
    rng: np.random.Generator,
    *,
    literal: bool = False,
) -> np.ndarray:
    """Run one independent equality test per entry of ``params``.

    Sources are called once each with a ``(len(params), max_reps)`` array of
    Poisson batch sizes; padding beyond a row's own repetition count is 0 and
    costs nothing. Returns a boolean array, True where the test says diff.
    Each test votes same in a repetition iff the statistic is at most
    ``n * chi_bound / 2``; ties in the majority go to same.
    """
    if len(params) == 0:
        return np.zeros(0, dtype=bool)
    reps = np.array([pr.repetitions for pr in params])
    ns = np.array([pr.n for pr in params], dtype=np.float64)
    thresholds = np.array([pr.threshold for pr in params])
    shape = (len(params), int(reps.max()))
    live = np.arange(shape[1])[None, :] < reps[:, None]
    lam = np.broadcast_to(ns[:, None], shape)[live]
    n_prime = np.zeros(shape, dtype=np.int64)
    n_dprime = np.zeros(shape, dtype=np.int64)
    n_prime[live] = rng.poisson(lam)
    n_dprime[live] = rng.poisson(lam)
    n1 = np.asarray(src_p(n_prime))
    n2 = np.asarray(src_q(n_dprime))
    t = t_values(n1, n2, n_prime, n_dprime, literal=literal)
    same_votes = np.count_nonzero(live & (t <= thresholds[:, None]), axis=1)
    return 2 * same_votes < reps


def test_equal_many(
    src_p: Source,
    src_q: Source,
    params: EqualityParams,
    rng: np.random.Generator,
    n_tests: int = 1,
    *,
    literal: bool = False,
) -> np.ndarray:
    """``n_tests`` independent tests sharing ``params``; True where diff."""
    return test_equal_batch(src_p, src_q, [params] * n_tests, rng, literal=literal)


def test_equal(
    src_p: Source,
    src_q: Source,
    params: EqualityParams,
    rng: np.random.Generator,
    *,
    literal: bool = False,
) -> Verdict:
    """Decide ``same`` vs chi-squared distance ``>= params.chi_bound``.

    Uses ``sum(n' + n'')`` draws over ``18 ln(1/delta)`` repetitions.
    """
    diff = test_equal_many(src_p, src_q, params, rng, 1, literal=literal)[0]
    return Verdict.DIFF if diff else Verdict.SAME


# keep pytest from collecting these when imported into tests
test_equal.__test__ = False  # type: ignore[attr-defined]
test_equal_batch.__test__ = False  # type: ignore[attr-defined]
test_equal_many.__test__ = False  # type: ignore[attr-defined]


def bernoulli_source(prob: float, rng: np.random.Generator) -> Source:
    """Simulated B(prob) coin; keeps a running draw count in ``.draws``."""

    def draw(sizes):
        sizes = np.asarray(sizes, dtype=np.int64)
        draw.draws += int(sizes.sum())
        return rng.binomial(sizes, prob)

    draw.draws = 0
    return draw


def oracle_source(oracle, query_set, target) -> Source:
    """Success = the conditional sample from ``query_set`` lands in ``target``."""
    qs = None if query_set is None else as_ids(query_set)
    tg = as_ids(target)

    def draw(sizes):
        return oracle.count(qs, tg, sizes)

    return draw


def pair_source(oracle, i: int, js) -> Source:
    """Batched pair source: success = ``j`` drawn from ``{i, j}``, one row per ``j``."""
    js = as_ids(js)

    def draw(sizes):
        return oracle.pair_counts(i, js.reshape((-1,) + (1,) * (np.ndim(sizes) - 1)), sizes)

    return draw
