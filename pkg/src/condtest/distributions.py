"""Exact discrete distributions and query-counted conditional-sampling oracles.

Element ids are 1-based dense integers ``1..k``. A query set is any iterable
of ids (a numpy integer array is the fast path); ``None`` stands for the full
domain.

An oracle holds a hidden weight vector and answers conditional queries: a
sample from query set ``S`` is ``i`` with probability ``w(i) / w(S)``. Every
returned sample costs one query. When ``w(S) = 0`` the conditional is
undefined; the oracle then draws uniformly over the elements of ``S`` and
records the event in ``zero_mass_queries``.

Batch helpers (:meth:`count`, :meth:`pair_counts`) return the number of hits
among ``n`` fresh conditional samples. They are distributionally identical to
drawing the samples one by one and counting, and are charged ``n`` queries.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Verdict",
    "Distribution",
    "Partition",
    "induced_distribution",
    "CondOracle",
    "InducedOracle",
    "MixtureOracle",
    "as_ids",
]

SUM_TOL = 1e-9


class Verdict(enum.Enum):
    SAME = "same"
    DIFF = "diff"

    def __str__(self) -> str:
        return self.value


def as_ids(query_set: Iterable[int] | np.ndarray) -> np.ndarray:
    """Return ``query_set`` as a 1-D int64 array (sets are sorted)."""
    if isinstance(query_set, np.ndarray):
        ids = query_set.astype(np.int64, copy=False).ravel()
    elif isinstance(query_set, (set, frozenset)):
        ids = np.fromiter(sorted(query_set), dtype=np.int64, count=len(query_set))
    else:
        ids = np.asarray(list(query_set), dtype=np.int64).ravel()
    return ids


@dataclass(frozen=True, eq=False)
class Distribution:
    """A probability vector over ``1..k``.

    ``probs[i - 1]`` is the mass of element ``i``.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64).ravel()
        if probs.size < 1:
            raise ValueError("distribution needs k >= 1")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_weights(cls, weights: Sequence[float] | np.ndarray) -> Distribution:
        w = np.asarray(weights, dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise ValueError("weights have no mass")
        return cls(w / total)

    @classmethod
    def uniform(cls, k: int) -> Distribution:
        return cls(np.full(k, 1.0 / k))

    @property
    def k(self) -> int:
        return int(self.probs.size)

    def __len__(self) -> int:
        return self.k

    def __getitem__(self, i: int) -> float:
        if not 1 <= i <= self.k:
            raise IndexError(f"element id {i} outside 1..{self.k}")
        return float(self.probs[i - 1])

    def mass(self, ids: Iterable[int] | np.ndarray | None = None) -> float:
        if ids is None:
            return 1.0
        return float(self.probs[as_ids(ids) - 1].sum())

    def conditional(self, ids: Iterable[int] | np.ndarray) -> np.ndarray:
        """Conditional probabilities ``p_S`` aligned with ``ids``."""
        ids = as_ids(ids)
        w = self.probs[ids - 1]
        total = w.sum()
        if total <= 0:
            raise ValueError("empty support: query set has zero mass")
        return w / total

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Unconditional draws, free of any query accounting."""
        n = 1 if size is None else size
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
        ids = np.minimum(idx, self.k - 1) + 1
        return int(ids[0]) if size is None else ids

    def to_json(self) -> str:
        return json.dumps(self.probs.tolist())

    @classmethod
    def from_json(cls, text: str) -> Distribution:
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("expected a JSON array of probabilities")
        return cls(np.asarray(data, dtype=np.float64))

    def __repr__(self) -> str:
        head = np.array2string(self.probs[:6], precision=4, separator=", ")
        return f"Distribution(k={self.k}, probs={head}{'...' if self.k > 6 else ''})"


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint groups of element ids; group ``g`` (1-based) is ``groups[g-1]``."""

    groups: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        groups = tuple(as_ids(g) for g in self.groups)
        if not groups or any(g.size == 0 for g in groups):
            raise ValueError("partition groups must be nonempty")
        members = np.concatenate(groups)
        if np.unique(members).size != members.size:
            raise ValueError("partition groups overlap")
        object.__setattr__(self, "groups", groups)

    @property
    def base(self) -> np.ndarray:
        return np.concatenate(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def labels(self, k: int) -> np.ndarray:
        """Group id (1-based) of every element, 0 for elements outside the base."""
        out = np.zeros(k + 1, dtype=np.int64)
        for g, ids in enumerate(self.groups, start=1):
            out[ids] = g
        return out[1:]


def induced_distribution(dist: Distribution, partition: Partition) -> Distribution:
    """Distribution over group indices with mass ``p(S_j) / p(S)``."""
    masses = np.array([dist.probs[g - 1].sum() for g in partition.groups])
    total = masses.sum()
    if total <= 0:
        raise ValueError("empty support: partition base has zero mass")
    return Distribution(masses / total)


class _WeightedOracle:
    """Conditional sampler over ids ``1..len(weights)``.

    ``sizes`` gives each id's element count, used for the uniform fallback on
    zero-mass query sets.
    """

    def __init__(self, weights: np.ndarray, sizes: np.ndarray, rng: np.random.Generator):
        self._w = weights
        self._sizes = sizes
        self._cdf = np.cumsum(weights)
        self.rng = rng
        self.zero_mass_queries = 0

    @property
    def k(self) -> int:
        return int(self._w.size)

    @property
    def zero_mass(self) -> bool:
        return self.zero_mass_queries > 0

    def _charge(self, n: int) -> None:
        raise NotImplementedError

    def _ids(self, query_set) -> np.ndarray:
        ids = as_ids(query_set)
        if ids.size == 0:
            raise ValueError("query set is empty")
        if ids.min() < 1 or ids.max() > self.k:
            raise ValueError(f"query set has ids outside 1..{self.k}")
        return ids

    def _draw(self, query_set, n: int) -> np.ndarray:
        """``n`` conditional draws, not charged."""
        rng = self.rng
        if query_set is None:
            u = rng.random(n) * self._cdf[-1]
            return np.minimum(np.searchsorted(self._cdf, u, side="right"), self.k - 1) + 1
        ids = self._ids(query_set)
        w = self._w[ids - 1]
        total = w.sum()
        if total <= 0:
            self.zero_mass_queries += n
            w = self._sizes[ids - 1].astype(np.float64)
            total = w.sum()
        if ids.size == 1:
            return np.full(n, ids[0], dtype=np.int64)
        if ids.size == 2:
            first = rng.random(n) * total < w[0]
            return np.where(first, ids[0], ids[1])
        cdf = np.cumsum(w)
        idx = np.searchsorted(cdf, rng.random(n) * total, side="right")
        return ids[np.minimum(idx, ids.size - 1)]

    def _hit_prob(self, query_set, target) -> tuple[float, bool]:
        if query_set is None:
            total = self._cdf[-1]
            qs = None
        else:
            qs = self._ids(query_set)
            total = self._w[qs - 1].sum()
        tg = self._ids(target)
        if total <= 0:
            sizes = self._sizes
            denom = sizes.sum() if qs is None else sizes[qs - 1].sum()
            return float(sizes[tg - 1].sum() / denom), True
        return float(min(1.0, self._w[tg - 1].sum() / total)), False

    def _count(self, query_set, target, n):
        p, zero = self._hit_prob(query_set, target)
        if zero:
            self.zero_mass_queries += int(np.sum(n))
        return self.rng.binomial(n, p)

    def _segment_counts(self, query_set, segments: np.ndarray, n):
        """Multinomial counts over segments of ``query_set`` (its ids in any order).

        ``segments`` holds start offsets into the id array; the last segment
        runs to the end. Output shape is ``n.shape + (len(segments),)``.
        """
        ids = np.arange(1, self.k + 1) if query_set is None else self._ids(query_set)
        w = self._w[ids - 1]
        total = w.sum()
        if total <= 0:
            self.zero_mass_queries += int(np.sum(n))
            w = self._sizes[ids - 1].astype(np.float64)
            total = w.sum()
        pvals = np.add.reduceat(w, segments) / total
        pvals = np.clip(pvals, 0.0, None)
        pvals /= pvals.sum()
        return self.rng.multinomial(n, pvals)

    def _pair_counts(self, i: int, js: np.ndarray, n):
        wi = self._w[i - 1]
        wj = self._w[js - 1]
        total = wi + wj
        zero = total <= 0
        if np.any(zero):
            self.zero_mass_queries += int(np.count_nonzero(zero))
            si, sj = self._sizes[i - 1], self._sizes[js - 1]
            prob = np.where(zero, sj / (si + sj), wj / np.where(zero, 1.0, total))
        else:
            prob = wj / total
        return self.rng.binomial(n, prob)

    def sample(self, query_set=None, size: int | None = None):
        """Conditional sample(s) from ``query_set``; one query per sample."""
        n = 1 if size is None else int(size)
        out = self._draw(query_set, n)
        self._charge(n)
        return int(out[0]) if size is None else out

    def count(self, query_set, target, n):
        """Hits on ``target`` among ``n`` draws from ``query_set``.

        ``target`` must be a subset of ``query_set``. ``n`` may be an integer
        or an integer array (one batch per entry).
        """
        n_arr = np.asarray(n, dtype=np.int64)
        out = self._count(query_set, target, n_arr)
        self._charge(int(n_arr.sum()))
        return out

    def segment_counts(self, query_set, segments, n):
        """Counts of ``n`` draws from ``query_set`` falling in each segment.

        One query per draw. See :meth:`_segment_counts` for the layout.
        """
        n_arr = np.asarray(n, dtype=np.int64)
        out = self._segment_counts(query_set, np.asarray(segments, dtype=np.int64), n_arr)
        self._charge(int(n_arr.sum()))
        return out

    def pair_counts(self, i: int, js, n):
        """For each ``j`` in ``js``: hits on ``j`` among ``n`` draws from ``{i, j}``.

        ``n`` broadcasts against ``js`` (e.g. shape ``(len(js), reps)`` with
        ``js[:, None]``).
        """
        js = as_ids(js) if not isinstance(js, np.ndarray) else js
        n_arr = np.asarray(n, dtype=np.int64)
        out = self._pair_counts(i, js, n_arr)
        self._charge(int(np.broadcast_to(n_arr, np.broadcast(js, n_arr).shape).sum()))
        return out


class CondOracle(_WeightedOracle):
    """Conditional-sampling access to a hidden :class:`Distribution`."""

    def __init__(self, dist: Distribution, rng: np.random.Generator):
        super().__init__(dist.probs, np.ones(dist.k), rng)
        self.hidden = dist
        self.queries = 0

    def _charge(self, n: int) -> None:
        self.queries += n

    def __repr__(self) -> str:
        return f"CondOracle(k={self.k}, queries={self.queries})"


class InducedOracle(_WeightedOracle):
    """Conditional access to the distribution induced by ``partition``.

    Group ids are ``1..len(partition)``. A query on a set of groups is one
    query on the union of their elements, charged to ``base``.
    """

    def __init__(self, base: CondOracle, partition: Partition):
        ids = partition.base
        starts = np.cumsum([0] + [g.size for g in partition.groups[:-1]])
        self._init(base, ids, starts)
        self.partition = partition

    @classmethod
    def from_segments(cls, base: CondOracle, ids: np.ndarray, starts: np.ndarray) -> InducedOracle:
        """Groups are the runs ``ids[starts[g]:starts[g+1]]``; no Partition is built."""
        self = cls.__new__(cls)
        self._init(base, as_ids(ids), np.asarray(starts, dtype=np.int64))
        self.partition = None
        return self

    def _init(self, base: CondOracle, ids: np.ndarray, starts: np.ndarray) -> None:
        masses = np.add.reduceat(base.hidden.probs[ids - 1], starts)
        sizes = np.diff(np.append(starts, ids.size)).astype(np.float64)
        _WeightedOracle.__init__(self, masses, sizes, base.rng)
        self.base = base

    @property
    def queries(self) -> int:
        return self.base.queries

    def _charge(self, n: int) -> None:
        self.base.queries += n


class MixtureOracle:
    """Conditional access to ``r = (p + q) / 2`` built from two oracles.

    Each sample flips a fair coin and takes one conditional sample from the
    chosen side, so exactly one underlying counter is charged per sample.
    """

    def __init__(self, left: CondOracle, right: CondOracle, rng: np.random.Generator):
        if left.k != right.k:
            raise ValueError("mixture sides have different domain sizes")
        self.left = left
        self.right = right
        self.rng = rng

    @property
    def k(self) -> int:
        return self.left.k

    @property
    def queries(self) -> int:
        return self.left.queries + self.right.queries

    def _draw(self, query_set, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Draws and a mask of which came from ``left``; not charged."""
        from_left = self.rng.random(n) < 0.5
        out = np.empty(n, dtype=np.int64)
        n_left = int(from_left.sum())
        if n_left:
            out[from_left] = self.left._draw(query_set, n_left)
        if n_left < n:
            out[~from_left] = self.right._draw(query_set, n - n_left)
        return out, from_left

    def sample(self, query_set=None, size: int | None = None):
        n = 1 if size is None else int(size)
        out, from_left = self._draw(query_set, n)
        n_left = int(from_left.sum())
        self.left._charge(n_left)
        self.right._charge(n - n_left)
        return int(out[0]) if size is None else out

    def count(self, query_set, target, n):
        n_arr = np.asarray(n, dtype=np.int64)
        n_left = self.rng.binomial(n_arr, 0.5)
        return self.left.count(query_set, target, n_left) + self.right.count(
            query_set, target, n_arr - n_left
        )

    def _pair_counts(self, i: int, js: np.ndarray, n):
        """Pair counts plus the per-entry number of left draws; not charged."""
        n_arr = np.broadcast_to(np.asarray(n, dtype=np.int64), np.broadcast(js, n).shape)
        n_left = self.rng.binomial(n_arr, 0.5)
        hits = self.left._pair_counts(i, js, n_left) + self.right._pair_counts(
            i, js, n_arr - n_left
        )
        return hits, n_left

    def pair_counts(self, i: int, js, n):
        js = as_ids(js) if not isinstance(js, np.ndarray) else js
        hits, n_left = self._pair_counts(i, js, n)
        total = int(np.broadcast_to(np.asarray(n), n_left.shape).sum())
        self.left._charge(int(n_left.sum()))
        self.right._charge(total - int(n_left.sum()))
        return hits

    @property
    def zero_mass_queries(self) -> int:
        return self.left.zero_mass_queries + self.right.zero_mass_queries

    def __repr__(self) -> str:
        return f"MixtureOracle(k={self.k}, queries={self.left.queries}+{self.right.queries})"
