"""Identity testing against a known distribution ``p``.

The unknown side ``q`` is reached only through a :class:`CondOracle`. The
known side is simulated by a second oracle on ``p`` so that its draws are
counted separately (``queries_p``); the cost of a test is ``queries_q``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import CondOracle, Distribution, InducedOracle, Partition, Verdict, as_ids
from .equality import C_TE_DEFAULT, EqualityParams, pair_source, t_values, test_equal_batch
from .finder import CandidateTuple, find_element, heaviness_order

__all__ = [
    "GroupingH",
    "IdentityConfig",
    "TupleTrace",
    "build_grouping",
    "identity_test",
    "near_uniform_identity_test",
    "near_uniform_params",
]

_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GroupingH:
    """Greedy grouping of ``G_x`` (``x`` and everything after it in heaviness order).

    Group ``g`` is ``ids[starts[g]:starts[g + 1]]``. ``x`` is ``ids[0]``, so it
    always sits in group 0. When ``flagged`` is set the last group is an
    undersized residual.
    """

    x: int
    ids: np.ndarray
    starts: np.ndarray
    masses: np.ndarray
    flagged: bool
    px: float

    def __len__(self) -> int:
        return int(self.starts.size)

    @property
    def n_complete(self) -> int:
        return len(self) - int(self.flagged)

    def group(self, g: int) -> np.ndarray:
        end = self.starts[g + 1] if g + 1 < len(self) else self.ids.size
        return self.ids[self.starts[g] : end]

    @property
    def partition(self) -> Partition:
        return Partition(tuple(np.split(self.ids, self.starts[1:])))

    def complete_ids(self) -> np.ndarray:
        """Ids covered by the complete groups."""
        return self.ids[: self.starts[-1]] if self.flagged else self.ids


def build_grouping(p: Distribution, x: int, order: np.ndarray | None = None) -> GroupingH:
    """Close a group as soon as its mass reaches ``p(x)``; merge or flag the residual."""
    order = heaviness_order(p) if order is None else order
    rank = int(np.flatnonzero(order == x)[0])
    ids = order[rank:]
    w = p.probs[ids - 1]
    px = float(w[0])
    if px <= 0:
        raise ValueError("empty G_x: p(x) = 0")
    tol = px * _REL_TOL
    n = ids.size
    cum = np.cumsum(w)
    cum_list = cum.tolist()
    # weights are sorted descending, so the leading run equal to p(x) is all singletons
    run = int(np.searchsorted(-w, -(px - tol), side="right"))
    starts = list(range(run))
    pos = run
    while pos < n:
        before = cum_list[pos - 1]
        end = bisect.bisect_left(cum_list, before + px - tol, lo=pos)
        if end >= n:
            break
        starts.append(pos)
        pos = end + 1
    flagged = False
    if pos < n:
        residual = cum_list[-1] - cum_list[pos - 1]
        last_mass = cum_list[pos - 1] - (cum_list[starts[-1] - 1] if starts[-1] > 0 else 0.0)
        if last_mass + residual > 2 * px + tol:
            starts.append(pos)
            flagged = True
    starts_arr = np.asarray(starts, dtype=np.int64)
    masses = np.add.reduceat(w, starts_arr)
    return GroupingH(int(x), ids, starts_arr, masses, flagged, px)


@dataclass(frozen=True)
class IdentityConfig:
    c_te: float = C_TE_DEFAULT
    log_base: str = "e"
    # p is known: by default its Find-element draws are free simulation
    charge_find_element: bool = False
    short_circuit: bool = False
    literal_statistic: bool = False


@dataclass
class TupleTrace:
    tup: CandidateTuple
    pair_params: EqualityParams | None
    mass_params: EqualityParams
    near_uniform_eps: float
    near_uniform_delta: float
    groups: int
    flagged: bool
    pair_diff: bool = False
    mass_diff: bool = False
    near_uniform_diff: bool = False
    near_uniform_params: list = field(default_factory=list)


def near_uniform_params(eps: float, delta: float, m: int, c_te: float = C_TE_DEFAULT) -> list[EqualityParams]:
    """Per-tuple ``(beta_j^2 / 144, 6 delta / (pi^2 j^2))`` equality parameters."""
    betas = np.minimum(np.arange(1, m + 1) * eps / 8, 2.0)
    return [
        EqualityParams(b**2 / 144, 6 * delta / (math.pi**2 * j**2), c_te)
        for j, b in enumerate(betas.tolist(), start=1)
    ]


def near_uniform_identity_test(
    eps: float,
    delta: float,
    p_oracle,
    q_oracle,
    y: int,
    rng: np.random.Generator,
    *,
    c_te: float = C_TE_DEFAULT,
    log_base: str = "e",
    exclude: int | None = None,
    literal: bool = False,
    trace: list | None = None,
) -> Verdict:
    """Test a near-uniform ``p`` against ``q`` using the anchor element ``y``.

    Samples candidates from ``q``, then compares ``p`` and ``q`` conditioned
    on each pair ``{x_j, y}``. Pairs with ``x_j == y`` or ``x_j == exclude``
    are skipped and count as same.
    """
    tuples = find_element(q_oracle, eps, log_base=log_base)
    params = near_uniform_params(eps, delta, len(tuples), c_te)
    xs = np.array([t.element for t in tuples])
    keep = xs != y
    if exclude is not None:
        keep &= xs != exclude
    kept = [pr for pr, k in zip(params, keep) if k]
    if trace is not None:
        trace.extend(kept)
    if not kept:
        return Verdict.SAME
    diff = test_equal_batch(
        pair_source(p_oracle, y, xs[keep]),
        pair_source(q_oracle, y, xs[keep]),
        kept,
        rng,
        literal=literal,
    )
    return Verdict.DIFF if diff.any() else Verdict.SAME


def _rowwise_count(oracle, rows):
    def draw(sizes):
        return np.stack([oracle.count(qs, tg, sizes[r]) for r, (qs, tg) in enumerate(rows)])

    return draw


def _shared_mass_tests(
    p_oracle: CondOracle,
    q_oracle: CondOracle,
    order: np.ndarray,
    ranks: np.ndarray,
    params: EqualityParams,
    rng: np.random.Generator,
    literal: bool,
) -> np.ndarray:
    """Membership tests for every tail ``G_x`` from one shared sample per repetition.

    The tails are nested, so counts over the segments between distinct cut
    ranks give every ``n(G_x)`` at once.
    """
    cuts = np.unique(ranks)
    starts = cuts if cuts[0] == 0 else np.concatenate([[0], cuts])
    reps = params.repetitions
    n_prime = rng.poisson(params.n, reps)
    n_dprime = rng.poisson(params.n, reps)
    seg_p = p_oracle.segment_counts(order, starts, n_prime)
    seg_q = q_oracle.segment_counts(order, starts, n_dprime)
    # tail counts at each start offset
    tail_p = np.cumsum(seg_p[:, ::-1], axis=1)[:, ::-1]
    tail_q = np.cumsum(seg_q[:, ::-1], axis=1)[:, ::-1]
    col = np.searchsorted(starts, ranks)
    n1 = tail_p[:, col].T
    n2 = tail_q[:, col].T
    t = t_values(n1, n2, n_prime[None, :], n_dprime[None, :], literal=literal)
    same_votes = np.count_nonzero(t <= params.threshold, axis=1)
    return 2 * same_votes < reps


def identity_test(
    p: Distribution,
    q_oracle: CondOracle,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    *,
    p_oracle: CondOracle | None = None,
    config: IdentityConfig = IdentityConfig(),
    grouping_cache: dict | None = None,
    trace: list | None = None,
) -> Verdict:
    """Decide ``p = q`` against ``||p - q||_1 >= eps``.

    Same with probability at least ``1 - delta`` when ``p = q``; diff with
    probability at least 1/30 when the pair is ``eps``-far.

    ``p_oracle`` (created on demand) serves the known side and is charged
    separately. ``grouping_cache`` maps ``x`` to its :class:`GroupingH` and
    may be shared across trials on the same ``p``. Per-tuple parameters and
    outcomes are appended to ``trace`` when given.
    """
    if not 0 < eps <= 2:
        raise ValueError(f"eps must lie in (0, 2], got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if q_oracle.k != p.k:
        raise ValueError("oracle domain does not match p")
    p_oracle = p_oracle if p_oracle is not None else CondOracle(p, rng)
    cache = grouping_cache if grouping_cache is not None else {}
    literal = config.literal_statistic
    sub_delta = eps * delta / 48

    source = p_oracle if config.charge_find_element else p
    tuples = find_element(source, eps, rng=rng, log_base=config.log_base)
    order = cache.get("order")
    if order is None:
        order = cache["order"] = heaviness_order(p)

    groupings = []
    for t in tuples:
        g = cache.get(t.element)
        if g is None:
            g = cache[t.element] = build_grouping(p, t.element, order)
        groupings.append(g)

    traces = [
        TupleTrace(
            t,
            None,
            EqualityParams((t.alpha * t.beta / 5) ** 2, sub_delta, config.c_te),
            t.beta / 5,
            sub_delta,
            len(g),
            g.flagged,
        )
        for t, g in zip(tuples, groupings)
    ]

    # (c) x against a random group H drawn from the known induced distribution
    pair_rows, pair_params, pair_idx = [], [], []
    for idx, (t, g, tr) in enumerate(zip(tuples, groupings, traces)):
        h = int(rng.choice(len(g), p=g.masses / g.masses.sum()))
        members = g.group(h)
        query = members if h == 0 else np.concatenate([[t.element], members])
        if query.size == 1:
            continue
        tr.pair_params = EqualityParams(t.beta**2 / 1800, sub_delta, config.c_te)
        pair_rows.append((query, as_ids([t.element])))
        pair_params.append(tr.pair_params)
        pair_idx.append(idx)
    if pair_rows:
        diff = test_equal_batch(
            _rowwise_count(p_oracle, pair_rows),
            _rowwise_count(q_oracle, pair_rows),
            pair_params,
            rng,
            literal=literal,
        )
        for idx, d in zip(pair_idx, diff):
            traces[idx].pair_diff = bool(d)
    if config.short_circuit and any(tr.pair_diff for tr in traces):
        return _finish(traces, trace)

    # (d) membership in G_x over the whole domain; alpha * beta is the same for every tuple
    ranks = np.array([g.ids.size for g in groupings])
    ranks = p.k - ranks
    keys = [(tr.mass_params.chi_bound, tr.mass_params.delta) for tr in traces]
    for key in dict.fromkeys(keys):
        sel = [i for i, kk in enumerate(keys) if kk == key]
        diff = _shared_mass_tests(
            p_oracle, q_oracle, order, ranks[sel], traces[sel[0]].mass_params, rng, literal
        )
        for i, d in zip(sel, diff):
            traces[i].mass_diff = bool(d)
    if config.short_circuit and any(tr.mass_diff for tr in traces):
        return _finish(traces, trace)

    # (e) near-uniform test on the induced group distributions, anchored at x's group
    for t, g, tr in zip(tuples, groupings, traces):
        ids = g.complete_ids()
        starts = g.starts[:-1] if g.flagged else g.starts
        p_ind = InducedOracle.from_segments(p_oracle, ids, starts)
        q_ind = InducedOracle.from_segments(q_oracle, ids, starts)
        verdict = near_uniform_identity_test(
            tr.near_uniform_eps,
            tr.near_uniform_delta,
            p_ind,
            q_ind,
            1,
            rng,
            c_te=config.c_te,
            log_base=config.log_base,
            literal=literal,
            trace=tr.near_uniform_params,
        )
        tr.near_uniform_diff = verdict is Verdict.DIFF
        if config.short_circuit and tr.near_uniform_diff:
            break
    return _finish(traces, trace)


def _finish(traces: list[TupleTrace], sink: list | None) -> Verdict:
    if sink is not None:
        sink.extend(traces)
    diff = any(tr.pair_diff or tr.mass_diff or tr.near_uniform_diff for tr in traces)
    return Verdict.DIFF if diff else Verdict.SAME
