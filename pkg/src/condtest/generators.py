"""Synthetic distribution pairs named by a short spec string.

Grammar: ``name`` or ``name(arg, ...)``; ``swap-pair`` takes a nested base
spec, e.g. ``swap-pair(zipf(1.2), 0.5)``. A missing distance argument
defaults to the experiment's ``eps``.

=================  ======================================================
``uniform``        p = q = uniform
``zipf(s)``        p = q with mass proportional to ``i^-s`` (default 1)
``dirichlet(a)``   p = q drawn from a symmetric Dirichlet (default 1)
``two-bump(e)``    p uniform; q puts ``(1 +- e)/k`` on two random halves
``spike(e)``       p(1) = e/2, p(2) = 0, rest equal; q swaps 1 and 2
``swap-pair(b,e)`` p = base; q swaps heaviest with lightest until l1 >= e
=================  ======================================================
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution

__all__ = ["GeneratorSpec", "parse_generator", "PAIR_NAMES"]

PAIR_NAMES = ("uniform", "zipf", "dirichlet", "two-bump", "spike", "swap-pair")
_EQUAL = {"uniform", "zipf", "dirichlet"}
_NAME = re.compile(r"\s*([a-z][a-z-]*)\s*(?:\((.*)\))?\s*$")


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        args.append(tail)
    return args


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    args: tuple = ()

    @property
    def far(self) -> bool:
        """True when the pair is meant to be eps-far, False when p = q."""
        return self.name not in _EQUAL

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    def _distance(self, eps: float, idx: int) -> float:
        return float(self.args[idx]) if len(self.args) > idx else eps

    def base(self, k: int, rng: np.random.Generator) -> Distribution:
        """The single distribution of an equal-pair spec."""
        if self.name == "uniform":
            return Distribution.uniform(k)
        if self.name == "zipf":
            s = float(self.args[0]) if self.args else 1.0
            return Distribution.from_weights(np.arange(1, k + 1, dtype=float) ** -s)
        if self.name == "dirichlet":
            a = float(self.args[0]) if self.args else 1.0
            return Distribution.from_weights(rng.dirichlet(np.full(k, a)))
        raise ValueError(f"{self.name} is not an equal-pair generator")

    def build(self, k: int, eps: float, rng: np.random.Generator) -> tuple[Distribution, Distribution]:
        if self.name in _EQUAL:
            p = self.base(k, rng)
            return p, p
        if self.name == "two-bump":
            return _two_bump(k, self._distance(eps, 0), rng)
        if self.name == "spike":
            return _spike(k, self._distance(eps, 0))
        if self.name == "swap-pair":
            if not self.args or not isinstance(self.args[0], GeneratorSpec):
                raise ValueError("swap-pair needs a base generator")
            return _swap_pair(self.args[0].base(k, rng), self._distance(eps, 1))
        raise ValueError(f"unknown generator {self.name!r}")


def parse_generator(text: str) -> GeneratorSpec:
    match = _NAME.match(text)
    if not match:
        raise ValueError(f"bad generator spec {text!r}")
    name, raw = match.group(1), match.group(2)
    if name not in PAIR_NAMES:
        raise ValueError(f"unknown generator {name!r}; choose from {', '.join(PAIR_NAMES)}")
    args: list = []
    for i, part in enumerate(_split_args(raw or "")):
        if name == "swap-pair" and i == 0:
            args.append(parse_generator(part))
        else:
            args.append(float(part))
    return GeneratorSpec(name, tuple(args))


def _two_bump(k: int, eps: float, rng: np.random.Generator):
    if k % 2:
        raise ValueError("two-bump needs an even k")
    if not 0 < eps <= 1:
        raise ValueError("two-bump needs 0 < eps <= 1")
    signs = np.full(k, -1.0)
    signs[rng.permutation(k)[: k // 2]] = 1.0
    return Distribution.uniform(k), Distribution((1 + eps * signs) / k)


def _spike(k: int, eps: float):
    if k < 3:
        raise ValueError("spike needs k >= 3")
    if not 0 < eps <= 2:
        raise ValueError("spike needs 0 < eps <= 2")
    p = np.full(k, (1 - eps / 2) / (k - 2))
    p[0], p[1] = eps / 2, 0.0
    q = p.copy()
    q[0], q[1] = p[1], p[0]
    return Distribution(p), Distribution(q)


def _swap_pair(base: Distribution, eps: float):
    p = base.probs
    order = np.argsort(-p, kind="stable")
    q = p.copy()
    dist = 0.0
    for t in range(p.size // 2):
        hi, lo = order[t], order[-1 - t]
        dist += 2 * (p[hi] - p[lo])
        q[hi], q[lo] = p[lo], p[hi]
        if dist >= eps:
            return base, Distribution(q)
    raise ValueError(f"swapping cannot reach l1 distance {eps} on this base")
