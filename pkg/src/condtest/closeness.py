"""Closeness testing of two unknown distributions through conditional samples.

Both sides are oracles. Candidate elements come from the mixture
``r = (p + q) / 2``; a binary search over ``log r_guess`` looks for the scale
``r(i) / r(G_i)`` at which random sets reveal a difference.

Every count hidden in an O(.) is a multiplier in :class:`ClosenessConstants`.
:meth:`ClosenessConstants.paper` reproduces the formulas with multiplier 1
and no clamps; its equality tests are far too large to simulate, so the
runnable defaults scale the counts down and floor the chi-squared bounds.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .distributions import CondOracle, MixtureOracle, Verdict, as_ids
from .equality import C_TE_DEFAULT, EqualityParams, pair_source, test_equal_batch
from .finder import CandidateTuple, find_element

__all__ = [
    "CandidateSet",
    "ClosenessConstants",
    "ClosenessParams",
    "GuessState",
    "assisted_closeness_test",
    "binary_search",
    "candidate_set",
    "closeness_test",
    "prune_set",
]


@dataclass(frozen=True)
class ClosenessConstants:
    """Multipliers on every O(.) count, plus two desk-scale clamps.

    ``chi_floor`` lower-bounds both sub-test chi-squared bounds and
    ``max_sets`` caps the number of sets per assisted test; ``0`` and
    ``None`` disable them.
    """

    gamma: float = 0.004
    sets: float = 1.0
    n1: float = 1e-3
    n2: float = 24.0
    n3: float = 4.0
    n4: float = 8.0
    c_te: float = C_TE_DEFAULT
    chi_floor: float = 0.03
    max_sets: int | None = 2
    log_base: str = "e"

    @classmethod
    def paper(cls) -> ClosenessConstants:
        return cls(gamma=1.0, sets=1.0, n1=1.0, n2=1.0, n3=1.0, n4=1.0, chi_floor=0.0, max_sets=None)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object], base: ClosenessConstants | None = None):
        base = base if base is not None else cls()
        known = {f.name: f for f in fields(cls)}
        updates = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown multiplier {key!r}")
            if key == "log_base":
                updates[key] = str(raw)
            elif key == "max_sets":
                updates[key] = None if raw in (None, "none", "None", "") else int(raw)
            else:
                updates[key] = float(raw)
        return replace(base, **updates)


def _pos_log(x: float) -> float:
    return max(0.0, math.log(x)) if x > 0 else 0.0


@dataclass(frozen=True)
class ClosenessParams:
    """All parameters of one binary search on tuple ``(alpha, beta)``."""

    k: int
    eps: float
    delta: float
    alpha: float
    beta: float
    constants: ClosenessConstants = field(default_factory=ClosenessConstants)

    def __post_init__(self) -> None:
        if self.k < 4:
            raise ValueError("closeness testing needs k >= 4")
        if not 0 < self.eps <= 2 or not 0 < self.delta < 1:
            raise ValueError("eps must lie in (0, 2] and delta in (0, 1)")
        if self.gamma < 1:
            raise ValueError(f"gamma = {self.gamma:.3g} < 1; raise the gamma multiplier")

    @property
    def loglog_k(self) -> float:
        return math.log(math.log(self.k))

    @property
    def rounds(self) -> int:
        return math.ceil(math.log2(math.log2(self.k)))

    @property
    def gamma_raw(self) -> float:
        return 1000 * math.log(self.loglog_k / (self.delta * self.eps))

    @property
    def gamma(self) -> float:
        return self.constants.gamma * self.gamma_raw

    @property
    def beta_dd(self) -> float:
        g, b = self.gamma, self.beta
        return self.alpha * b / (128 * g * math.log(128 * g / b**2))

    @property
    def m_raw(self) -> int:
        return math.ceil(self.constants.sets * 4096 * self.gamma / (self.alpha * self.beta**2))

    @property
    def m(self) -> int:
        cap = self.constants.max_sets
        return self.m_raw if cap is None else max(1, min(self.m_raw, cap))

    @property
    def n4(self) -> int:
        return max(1, math.ceil(self.constants.n4 * self.gamma / (self.alpha * self.beta)))

    @property
    def delta_prime(self) -> float:
        return self.eps * self.delta / (32 * self.m * (self.n4 + 1) * self.loglog_k)

    def delta_prune(self, m: int) -> float:
        return self.delta / (40 * m * self.loglog_k)

    def n1(self, m: int) -> int:
        d = self.delta_prune(m)
        ratio = self.gamma / (self.alpha * self.beta)
        lead = math.log(ratio / d)
        body = ratio * math.log(ratio) + math.log(1 / d) * _pos_log(math.log(1 / d))
        return max(1, math.ceil(self.constants.n1 * lead * body))

    @property
    def n2(self) -> int:
        lll = _pos_log(math.log(math.log(self.k)))
        return max(1, math.ceil(self.constants.n2 * (lll + math.log(1 / (self.eps * self.delta)))))

    @property
    def n3(self) -> int:
        base = self.gamma**2 * math.log(self.loglog_k / self.delta)
        return max(1, math.ceil(self.constants.n3 * base))

    @property
    def chi_pair_raw(self) -> float:
        return self.beta_dd**2 / 25

    @property
    def chi_set_raw(self) -> float:
        a, b, g = self.alpha, self.beta, self.gamma
        return (a * b) ** 3 / (2**23 * g**2 * math.log(128 * g / (a * b**2)) ** 3)

    @property
    def chi_pair(self) -> float:
        return max(self.chi_pair_raw, self.constants.chi_floor)

    @property
    def chi_set(self) -> float:
        return max(self.chi_set_raw, self.constants.chi_floor)

    def pair_params(self) -> EqualityParams:
        return EqualityParams(self.chi_pair, self.delta_prime, self.constants.c_te)

    def set_params(self) -> EqualityParams:
        return EqualityParams(self.chi_set, self.delta_prime, self.constants.c_te)


@dataclass
class GuessState:
    """Binary-search state over ``log r_guess`` (natural log)."""

    log_r_guess: float
    low: float
    high: float
    round: int = 0

    @classmethod
    def initial(cls, k: int) -> GuessState:
        return cls(-math.log(math.sqrt(k)), -math.log(k), 0.0)

    @property
    def r_guess(self) -> float:
        return math.exp(self.log_r_guess)

    def update(self, heavy: bool) -> None:
        cur = self.log_r_guess
        if heavy:
            self.high = cur
            self.log_r_guess = (cur + self.low) / 2
        else:
            self.low = cur
            self.log_r_guess = (cur + self.high) / 2
        self.round += 1


@dataclass
class CandidateSet:
    members: np.ndarray
    pruned: bool = False

    def __len__(self) -> int:
        return int(self.members.size)

    def __contains__(self, j: int) -> bool:
        return bool(np.any(self.members == j))


def candidate_set(k: int, i: int, r_guess: float, rng: np.random.Generator) -> CandidateSet:
    """Keep each of ``{1..k} - {i}`` independently with probability ``r_guess``."""
    size = int(rng.binomial(k - 1, min(1.0, r_guess)))
    picks = rng.choice(k - 1, size=size, replace=False) + 1
    # skip over i: ids 1..i-1 stay, the rest shift up by one
    picks = np.where(picks >= i, picks + 1, picks)
    return CandidateSet(np.sort(picks).astype(np.int64))


def prune_set(
    s: CandidateSet, i: int, n1: int, n2: int, mixture: MixtureOracle, chunk: int = 256
) -> CandidateSet:
    """``n1`` rounds of: draw ``j`` from ``r_S``, drop it if it wins ``3/4`` of ``n2`` draws from ``{j, i}``.

    Draws are simulated in chunks up to the first removal; only the consumed
    draws are charged.
    """
    members = s.members.copy()
    left, right = mixture.left, mixture.right
    remaining = n1
    threshold = 3 * n2 / 4
    while remaining > 0 and members.size > 0:
        c = min(chunk, remaining)
        js, from_left = mixture._draw(members, c)
        hits, n_left = mixture._pair_counts(i, js, np.full(c, n2))
        removed = np.flatnonzero(hits >= threshold)
        used = c if removed.size == 0 else int(removed[0]) + 1
        used_left = int(from_left[:used].sum()) + int(n_left[:used].sum())
        total = used * (1 + n2)
        left._charge(used_left)
        right._charge(total - used_left)
        remaining -= used
        if removed.size:
            members = members[members != js[removed[0]]]
    return CandidateSet(members, pruned=True)


def _rowwise_count(oracle, rows):
    def draw(sizes):
        return np.stack([oracle.count(qs, tg, sizes[r]) for r, (qs, tg) in enumerate(rows)])

    return draw


def assisted_closeness_test(
    r_guess: float,
    tup: CandidateTuple,
    params: ClosenessParams,
    p_oracle: CondOracle,
    q_oracle: CondOracle,
    mixture: MixtureOracle,
    rng: np.random.Generator,
    *,
    trace: dict | None = None,
) -> Verdict:
    """Build ``m`` pruned random sets at rate ``r_guess`` and test ``i`` against them.

    For each set, every distinct element seen among ``n4`` draws from
    ``r_{S + i}`` gets a pair test against ``i``; the set as a whole gets a
    test of ``{i}`` against ``S``. Empty sets are skipped.
    """
    i = tup.element
    k = params.k
    m = params.m
    n1 = params.n1(m)
    n2 = params.n2
    pair_js, set_rows = [], []
    for _ in range(m):
        s = prune_set(candidate_set(k, i, r_guess, rng), i, n1, n2, mixture)
        if len(s) == 0:
            continue
        query = np.concatenate([[i], s.members])
        seen = np.unique(mixture.sample(query, size=params.n4))
        pair_js.append(seen[seen != i])
        set_rows.append((query, as_ids([i])))
    js = np.concatenate(pair_js) if pair_js else np.zeros(0, dtype=np.int64)
    pair_p, set_p = params.pair_params(), params.set_params()
    diff = False
    if js.size:
        d = test_equal_batch(
            pair_source(p_oracle, i, js), pair_source(q_oracle, i, js), [pair_p] * js.size, rng
        )
        diff |= bool(d.any())
    if set_rows:
        d = test_equal_batch(
            _rowwise_count(p_oracle, set_rows),
            _rowwise_count(q_oracle, set_rows),
            [set_p] * len(set_rows),
            rng,
        )
        diff |= bool(d.any())
    if trace is not None:
        trace.update(pair_tests=int(js.size), set_tests=len(set_rows), diff=diff)
    return Verdict.DIFF if diff else Verdict.SAME


def binary_search(
    tup: CandidateTuple,
    params: ClosenessParams,
    p_oracle: CondOracle,
    q_oracle: CondOracle,
    mixture: MixtureOracle,
    rng: np.random.Generator,
    *,
    short_circuit: bool = False,
    trace: list | None = None,
) -> Verdict:
    """Search ``log r_guess`` for ``ceil(log2 log2 k)`` rounds, running the assisted test each round.

    The comparator calls the guess heavy when ``i`` takes fewer than
    ``5 n3 / gamma`` of ``n3`` draws from ``S + i``.
    """
    i = tup.element
    state = GuessState.initial(params.k)
    n1 = params.n1(1)
    n2 = params.n2
    n3 = params.n3
    cut = 5 * n3 / params.gamma
    diff = False
    for _ in range(params.rounds):
        r_guess = state.r_guess
        s = prune_set(candidate_set(params.k, i, r_guess, rng), i, n1, n2, mixture)
        info: dict = {"log_r_guess": state.log_r_guess, "low": state.low, "high": state.high}
        verdict = assisted_closeness_test(
            r_guess, tup, params, p_oracle, q_oracle, mixture, rng, trace=info
        )
        query = np.concatenate([[i], s.members])
        heavy = bool(mixture.count(query, [i], n3) < cut)
        info.update(set_size=len(s), heavy=heavy)
        if trace is not None:
            trace.append(info)
        state.update(heavy)
        if verdict is Verdict.DIFF:
            diff = True
            if short_circuit:
                break
    return Verdict.DIFF if diff else Verdict.SAME


def closeness_test(
    p_oracle: CondOracle,
    q_oracle: CondOracle,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    *,
    constants: ClosenessConstants = ClosenessConstants(),
    short_circuit: bool = False,
    trace: list | None = None,
) -> Verdict:
    """Decide ``p = q`` against ``||p - q||_1 >= eps`` with both sides unknown.

    Same with probability at least ``1 - delta`` when ``p = q``; diff with
    probability at least 1/30 when the pair is ``eps``-far.
    """
    if p_oracle.k != q_oracle.k:
        raise ValueError("oracles have different domain sizes")
    mixture = MixtureOracle(p_oracle, q_oracle, rng)
    tuples = find_element(mixture, eps, log_base=constants.log_base)
    diff = False
    for tup in tuples:
        params = ClosenessParams(p_oracle.k, eps, delta, tup.alpha, tup.beta, constants)
        rounds: list | None = [] if trace is not None else None
        verdict = binary_search(
            tup, params, p_oracle, q_oracle, mixture, rng, short_circuit=short_circuit, trace=rounds
        )
        if trace is not None:
            trace.append({"tuple": tup, "rounds": rounds, "verdict": verdict})
        if verdict is Verdict.DIFF:
            diff = True
            if short_circuit:
                break
    return Verdict.DIFF if diff else Verdict.SAME
