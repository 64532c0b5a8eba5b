"""Find-element: candidate (element, beta, alpha) tuples from a few samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution

__all__ = [
    "CandidateTuple",
    "find_element",
    "heaviness_order",
    "is_heavy",
    "pickgood_weights",
    "schedule",
    "tail_masses",
    "tuple_quality",
]

_LOGS = {"e": math.log, "2": math.log2}


@dataclass(frozen=True)
class CandidateTuple:
    element: int
    beta: float
    alpha: float
    j: int

    def __post_init__(self) -> None:
        if not 0 < self.beta <= 2 or not 0 < self.alpha <= 1:
            raise ValueError(f"tuple outside (0,2]x(0,1]: beta={self.beta}, alpha={self.alpha}")


def _log(base: str):
    try:
        return _LOGS[base]
    except KeyError:
        raise ValueError(f"log base must be 'e' or '2', got {base!r}") from None


def schedule(eps: float, log_base: str = "e") -> tuple[np.ndarray, np.ndarray]:
    """``(beta_j, alpha_j)`` for ``j = 1..ceil(16/eps)``.

    >>> b, a = schedule(2.0)
    >>> b.tolist()
    [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
    """
    if not 0 < eps <= 2:
        raise ValueError(f"eps must lie in (0, 2], got {eps}")
    m = math.ceil(16 / eps)
    j = np.arange(1, m + 1)
    # the last beta overshoots 2 when 16/eps is not an integer; a_x never exceeds 2
    betas = np.minimum(j * eps / 8, 2.0)
    alphas = 1.0 / (4 * j * _log(log_base)(16 / eps))
    return betas, alphas


def find_element(
    source,
    eps: float,
    *,
    rng: np.random.Generator | None = None,
    log_base: str = "e",
) -> list[CandidateTuple]:
    """Draw ``ceil(16/eps)`` samples and pair the ``j``-th with ``(beta_j, alpha_j)``.

    ``source`` is an oracle (charged one query per sample, full-domain query
    set) or a known :class:`Distribution` (simulated for free with ``rng``).
    """
    betas, alphas = schedule(eps, log_base)
    m = betas.size
    if isinstance(source, Distribution):
        if rng is None:
            raise ValueError("sampling a known distribution needs rng")
        xs = source.sample(rng, m)
    else:
        xs = source.sample(None, size=m)
    return [
        CandidateTuple(int(x), float(b), float(a), j)
        for j, (x, b, a) in enumerate(zip(xs, betas, alphas), start=1)
    ]


def heaviness_order(weights) -> np.ndarray:
    """Element ids sorted by weight descending, ties by id ascending."""
    w = np.asarray(weights.probs if isinstance(weights, Distribution) else weights)
    return np.argsort(-w, kind="stable") + 1


def tail_masses(weights) -> np.ndarray:
    """``tail[i-1]`` = total weight of ``G_i``, the elements ranked at or after ``i``."""
    w = np.asarray(weights.probs if isinstance(weights, Distribution) else weights, dtype=float)
    order = heaviness_order(w)
    tails_by_rank = np.cumsum(w[order - 1][::-1])[::-1]
    out = np.empty_like(w)
    out[order - 1] = tails_by_rank
    return out


def is_heavy(p: Distribution, x: int, alpha: float) -> bool:
    return bool(tail_masses(p)[x - 1] >= alpha)


def pickgood_weights(p: Distribution, q: Distribution) -> np.ndarray:
    """``a_i = max(0, (p(i) - q(i)) / p(i))``, 0 where ``p(i) = 0``."""
    pp, qq = p.probs, q.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(pp > 0, (pp - qq) / pp, 0.0)
    return np.clip(a, 0.0, None)


def tuple_quality(
    p: Distribution,
    q: Distribution | None,
    tup: CandidateTuple,
    a: np.ndarray | None = None,
) -> bool:
    """True iff ``tup.element`` is ``alpha``-heavy in ``p`` and ``a_x >= beta``.

    ``a`` defaults to :func:`pickgood_weights` of ``(p, q)``.
    """
    if a is None:
        if q is None:
            raise ValueError("need weights a or a second distribution q")
        a = pickgood_weights(p, q)
    a = np.asarray(a, dtype=float)
    x = tup.element
    return is_heavy(p, x, tup.alpha) and bool(a[x - 1] >= tup.beta)
