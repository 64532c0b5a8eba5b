"""Closed-form and Monte-Carlo checks on the known vectors behind a test.

Everything here reads the hidden distributions directly and charges no
queries. These functions feed fixture validation, clairvoyant inputs for
isolating sub-tests, and the lemma sweeps driven by ``verify-lemmas``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .distributions import Distribution
from .equality import t_values
from .finder import heaviness_order, tail_masses

__all__ = [
    "Clairvoyant",
    "LemmaConstants",
    "approximability",
    "chi2_binary",
    "chilow_bound",
    "chilow_sweep",
    "clairvoyant",
    "exp_approx_check",
    "exp_approx_sweep",
    "fit_var_constant",
    "l1_distance",
    "load_lemma_constants",
    "moment_grid",
    "pair_chi2",
    "poisson_stat_moments",
    "var_mean_formula",
]


def l1_distance(p: Distribution, q: Distribution) -> float:
    if p.k != q.k:
        raise ValueError("distributions have different domain sizes")
    return float(np.abs(p.probs - q.probs).sum())


def chi2_binary(p: float, q: float) -> float:
    """Chi-squared distance between Bernoulli(p) and Bernoulli(q); 0 when p = q."""
    if p == q:
        return 0.0
    return (p - q) ** 2 / ((p + q) * (2 - p - q))


def pair_chi2(p_i: float, q_i: float, p_j: float, q_j: float) -> float:
    """Chi-squared distance between ``p_{i,j}`` and ``q_{i,j}`` on the pair ``{i, j}``."""
    return chi2_binary(p_i / (p_i + p_j), q_i / (q_i + q_j))


def _signed_ratio(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s > 0, (a - b) / np.where(s > 0, s, 1.0), 0.0)


def chilow_bound(
    p_i: float, q_i: float, p_j: float, q_j: float, chi_fn=pair_chi2
) -> tuple[float, float, float]:
    """Return ``(lhs, bound, premise)`` for one quadruple.

    ``premise`` is the gap between the two signed ratios; ``bound`` is
    ``premise^2 s_i s_j / (4 (s_i + s_j)^2)`` with ``s = p + q``. The lower
    bound holds with ``eps = premise``, so ``lhs >= bound`` must always hold.
    """
    if min(p_i, q_i, p_j, q_j) < 0 or p_i + p_j <= 0 or q_i + q_j <= 0:
        raise ValueError("pair masses must be nonnegative with positive totals")
    s_i, s_j = p_i + q_i, p_j + q_j
    premise = abs(float(_signed_ratio(p_i, q_i) - _signed_ratio(p_j, q_j)))
    lhs = chi_fn(p_i, q_i, p_j, q_j)
    bound = premise**2 * s_i * s_j / (4 * (s_i + s_j) ** 2)
    return lhs, bound, premise


def chilow_sweep(
    n: int, rng: np.random.Generator, rel_tol: float = 1e-12, chi_fn=None
) -> dict:
    """Random positive quadruples; counts violations of ``lhs >= bound``."""
    chi_fn = chi_fn if chi_fn is not None else pair_chi2
    quads = rng.random((n, 4)) + 1e-12
    # spread masses over several orders of magnitude
    quads *= 10.0 ** rng.uniform(-4, 0, size=(n, 4))
    violations = 0
    worst = math.inf
    for p_i, q_i, p_j, q_j in quads:
        lhs, bound, _ = chilow_bound(p_i, q_i, p_j, q_j, chi_fn)
        if bound > 0:
            worst = min(worst, lhs / bound)
        if lhs < bound * (1 - rel_tol):
            violations += 1
    return {"n": n, "violations": violations, "min_ratio": worst}


def var_mean_formula(lam1: float, lam2: float) -> float:
    """``(l - l')^2 / (l + l') * (1 - exp(-l - l'))``, 0 at ``l = l' = 0``."""
    s = lam1 + lam2
    if s == 0:
        return 0.0
    return (lam1 - lam2) ** 2 / s * -math.expm1(-s)


def var_bound(lam1: float, lam2: float, c: float) -> float:
    s = lam1 + lam2
    lead = 0.0 if s == 0 else 4 * (lam1 - lam2) ** 2 / s
    return lead + c**2


def _single_term(mu1: np.ndarray, mu2: np.ndarray) -> np.ndarray:
    # zero failure counts leave only the success-count term
    return t_values(mu1, mu2, mu1, mu2)


def poisson_stat_moments(
    lam1: float, lam2: float, trials: int, rng: np.random.Generator
) -> tuple[float, float, float]:
    """Monte-Carlo ``(mean, var, mean_sigma)`` of ``((m - m')^2 - m - m') / (m + m' - 1)``."""
    if lam1 < 0 or lam2 < 0:
        raise ValueError("Poisson means must be nonnegative")
    mu1 = rng.poisson(lam1, trials)
    mu2 = rng.poisson(lam2, trials)
    vals = _single_term(mu1, mu2)
    mean = float(vals.mean())
    var = float(vals.var(ddof=1)) if trials > 1 else 0.0
    return mean, var, math.sqrt(var / trials)


def moment_grid(
    lams=(0.0, 1.0, 5.0, 10.0), trials: int = 200_000, rng: np.random.Generator | None = None
) -> list[dict]:
    """Mean and variance of the single-term statistic on ``lams x lams``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    rows = []
    for lam1 in lams:
        for lam2 in lams:
            mean, var, sigma = poisson_stat_moments(lam1, lam2, trials, rng)
            expected = var_mean_formula(lam1, lam2)
            s = lam1 + lam2
            lead = 0.0 if s == 0 else 4 * (lam1 - lam2) ** 2 / s
            rows.append(
                {
                    "lam1": lam1,
                    "lam2": lam2,
                    "mean": mean,
                    "expected_mean": expected,
                    "z": 0.0 if sigma == 0 else (mean - expected) / sigma,
                    "var": var,
                    "var_lead": lead,
                }
            )
    return rows


def fit_var_constant(rows: list[dict]) -> float:
    """Smallest ``c`` with ``var <= 4 (l - l')^2 / (l + l') + c^2`` on every row."""
    excess = max(r["var"] - r["var_lead"] for r in rows)
    return math.sqrt(max(excess, 0.0))


def approximability(p: Distribution, q: Distribution) -> np.ndarray:
    """Per element ``|ratio(i) - ratio(G_i)|`` under the ``p + q`` order."""
    s = p.probs + q.probs
    tail_p = _tails_in_order(p.probs, s)
    tail_q = _tails_in_order(q.probs, s)
    return np.abs(_signed_ratio(p.probs, q.probs) - _signed_ratio(tail_p, tail_q))


def _tails_in_order(values: np.ndarray, key: np.ndarray) -> np.ndarray:
    order = heaviness_order(key)
    tails = np.cumsum(values[order - 1][::-1])[::-1]
    out = np.empty_like(values, dtype=float)
    out[order - 1] = tails
    return out


def exp_approx_check(p: Distribution, q: Distribution) -> tuple[float, float]:
    """Return ``(sum, l1 / 4)``; the sum of ``r(i) * approximability(i)`` must reach ``l1 / 4``."""
    r = (p.probs + q.probs) / 2
    total = float(np.sum(np.where(r > 0, r * approximability(p, q), 0.0)))
    return total, l1_distance(p, q) / 4


def exp_approx_sweep(
    n: int, rng: np.random.Generator, k_range=(2, 64), alpha_range=(0.1, 2.0)
) -> dict:
    violations = 0
    worst = math.inf
    for _ in range(n):
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        alpha = float(rng.uniform(*alpha_range))
        p = Distribution.from_weights(rng.dirichlet(np.full(k, alpha)))
        q = Distribution.from_weights(rng.dirichlet(np.full(k, alpha)))
        total, floor = exp_approx_check(p, q)
        if floor > 0:
            worst = min(worst, total / floor)
        if total < floor * (1 - 1e-12):
            violations += 1
    return {"n": n, "violations": violations, "min_ratio": worst}


@dataclass(frozen=True)
class Clairvoyant:
    ratio: float
    tail_mass: float
    approximability: float
    rank: int


def clairvoyant(p: Distribution, q: Distribution, i: int) -> Clairvoyant:
    """True ``r(i) / r(G_i)`` and related quantities for element ``i``.

    ``G_i`` is ``i`` together with every element after it in the ``p + q``
    descending order (ties by id).
    """
    s = p.probs + q.probs
    r = s / 2
    tails = tail_masses(r)
    order = heaviness_order(s)
    rank = int(np.flatnonzero(order == i)[0]) + 1
    tail = float(tails[i - 1])
    ratio = float(r[i - 1] / tail) if tail > 0 else 0.0
    return Clairvoyant(ratio, tail, float(approximability(p, q)[i - 1]), rank)


@dataclass
class LemmaConstants:
    var_c: float
    seeds: dict = field(default_factory=dict)
    grid: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def load_lemma_constants() -> LemmaConstants:
    """The snapshot shipped in ``condtest/data/lemma_constants.json``."""
    text = resources.files("condtest").joinpath("data/lemma_constants.json").read_text()
    return LemmaConstants(**json.loads(text))
