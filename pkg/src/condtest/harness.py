"""Trial loops, amplification, sweeps and lemma checks with CSV/JSON output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import reference
from .closeness import ClosenessConstants, closeness_test
from .distributions import CondOracle, Distribution, Verdict
from .generators import GeneratorSpec, parse_generator
from .identity import IdentityConfig, identity_test

__all__ = [
    "C_AMP",
    "CSV_FIELDS",
    "ExperimentRecord",
    "amplify",
    "amplify_rounds",
    "build_pair",
    "read_multipliers",
    "records_to_csv",
    "records_to_json",
    "run_trials",
    "sweep",
    "trial_seed",
    "verify_lemmas",
]

C_AMP = 60.0
AMP_BASE_DELTA = 1 / 120
CSV_FIELDS = ("generator", "k", "eps", "delta", "seed", "verdict", "queries_p", "queries_q", "wall_ms")
# stream id for the fixture pair, kept apart from the per-trial streams
_PAIR_STREAM = 2**31 - 1


@dataclass
class ExperimentRecord:
    generator: str
    k: int
    eps: float
    delta: float
    seed: int
    verdict: str
    queries_p: int
    queries_q: int
    wall_ms: float
    tester: str = ""
    trial: int = 0
    config_hash: str = ""

    @property
    def queries(self) -> int:
        return self.queries_p + self.queries_q

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in CSV_FIELDS}


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def amplify_rounds(delta: float, c_amp: float = C_AMP) -> int:
    return max(1, math.ceil(c_amp * math.log(1 / delta)))


def amplify(tester: Callable[[], Verdict], rounds: int, *, early_stop: bool = True) -> Verdict:
    """Run ``tester`` up to ``rounds`` times; diff iff more than 1/60 of the runs say diff.

    With ``early_stop`` the loop ends once the outcome is settled; the
    verdict is the same either way.

    >>> amplify(lambda: Verdict.DIFF, 1)
    <Verdict.DIFF: 'diff'>
    """
    limit = rounds / 60
    diffs = 0
    for done in range(1, rounds + 1):
        diffs += tester() is Verdict.DIFF
        if early_stop and (diffs > limit or diffs + (rounds - done) <= limit):
            break
    return Verdict.DIFF if diffs > limit else Verdict.SAME


def build_pair(spec: GeneratorSpec | str, k: int, eps: float, seed: int, tester: str = "identity"):
    """The fixture pair for a run, validated before any trial."""
    spec = parse_generator(spec) if isinstance(spec, str) else spec
    rng = np.random.default_rng([seed, _PAIR_STREAM])
    p, q = spec.build(k, eps, rng)
    if spec.far:
        l1 = reference.l1_distance(p, q)
        if l1 < eps * (1 - 1e-12):
            raise ValueError(f"{spec} gives l1 distance {l1:.4g} < eps = {eps}")
        if tester == "closeness":
            total, floor = reference.exp_approx_check(p, q)
            if total < floor * (1 - 1e-12):
                raise ValueError(f"{spec}: approximability sum {total:.4g} below l1/4 = {floor:.4g}")
    return p, q


def _config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class _Job:
    tester: str
    spec: str
    p: Distribution
    q: Distribution
    eps: float
    delta: float
    seed: int
    index: int
    constants: ClosenessConstants
    identity_config: IdentityConfig
    amplify: bool
    c_amp: float
    base_delta: float | None
    config_hash: str


def _run_one(job: _Job, cache: dict | None = None) -> ExperimentRecord:
    tseed = trial_seed(job.seed, job.index)
    rng = np.random.default_rng(tseed)
    p_or = CondOracle(job.p, rng)
    q_or = CondOracle(job.q, rng)
    cache = cache if cache is not None else {}

    def base(delta: float) -> Verdict:
        if job.tester == "identity":
            return identity_test(
                job.p, q_or, job.eps, delta, rng,
                p_oracle=p_or, config=job.identity_config, grouping_cache=cache,
            )
        return closeness_test(p_or, q_or, job.eps, delta, rng, constants=job.constants)

    start = time.perf_counter()
    if job.amplify:
        inner = job.base_delta if job.base_delta is not None else min(job.delta, AMP_BASE_DELTA)
        verdict = amplify(lambda: base(inner), amplify_rounds(job.delta, job.c_amp))
    else:
        verdict = base(job.delta)
    wall = (time.perf_counter() - start) * 1000
    return ExperimentRecord(
        job.spec, job.p.k, job.eps, job.delta, tseed, verdict.value,
        p_or.queries, q_or.queries, round(wall, 3), job.tester, job.index, job.config_hash,
    )


def _run_chunk(jobs: Sequence[_Job]) -> list[ExperimentRecord]:
    cache: dict = {}
    return [_run_one(j, cache) for j in jobs]


def run_trials(
    spec: GeneratorSpec | str,
    tester: str,
    k: int,
    eps: float,
    delta: float,
    trials: int,
    seed: int,
    *,
    constants: ClosenessConstants = ClosenessConstants(),
    identity_config: IdentityConfig = IdentityConfig(),
    amplified: bool = False,
    c_amp: float = C_AMP,
    base_delta: float | None = None,
    workers: int = 1,
    pair: tuple[Distribution, Distribution] | None = None,
) -> list[ExperimentRecord]:
    """Independent trials on one fixture pair; trial ``t`` uses ``trial_seed(seed, t)``.

    With ``amplified`` every record is one amplified verdict, and its query
    counts cover all the base runs. ``identity`` tests the known ``p`` against
    ``q``; ``closeness`` treats both as unknown.
    """
    if tester not in ("identity", "closeness"):
        raise ValueError(f"unknown tester {tester!r}")
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    spec = parse_generator(spec) if isinstance(spec, str) else spec
    p, q = pair if pair is not None else build_pair(spec, k, eps, seed, tester)
    payload = {
        "tester": tester, "generator": str(spec), "k": k, "eps": eps, "delta": delta,
        "seed": seed, "amplified": amplified, "c_amp": c_amp, "base_delta": base_delta,
        "constants": dataclasses.asdict(constants),
        "identity": dataclasses.asdict(identity_config),
    }
    chash = _config_hash(payload)
    jobs = [
        _Job(tester, str(spec), p, q, eps, delta, seed, t, constants, identity_config,
             amplified, c_amp, base_delta, chash)
        for t in range(trials)
    ]
    if workers <= 1 or trials <= 1:
        return _run_chunk(jobs)
    chunks = [jobs[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    return sorted(results, key=lambda r: r.trial)


def sweep(
    spec: GeneratorSpec | str,
    tester: str,
    ks: Iterable[int],
    epss: Iterable[float],
    delta: float,
    trials: int,
    seed: int,
    **kwargs,
) -> list[ExperimentRecord]:
    """:func:`run_trials` over the grid ``ks x epss``."""
    out: list[ExperimentRecord] = []
    for k in ks:
        for eps in epss:
            out.extend(run_trials(spec, tester, k, eps, delta, trials, seed, **kwargs))
    return out


def records_to_csv(records: Iterable[ExperimentRecord], stream: io.TextIOBase | None = None) -> str:
    buf = stream if stream is not None else io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(r.as_row())
    return buf.getvalue() if stream is None else ""


def records_to_json(records: Iterable[ExperimentRecord]) -> str:
    rows = [dict(r.as_row(), tester=r.tester, trial=r.trial, config_hash=r.config_hash) for r in records]
    return json.dumps(rows, indent=2)


def read_multipliers(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, values may be quoted."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("\"'")
    return out


def verify_lemmas(
    seed: int = 0,
    *,
    chilow_n: int = 10_000,
    exp_approx_n: int = 1_000,
    lams: Sequence[float] = (0.0, 1.0, 5.0, 10.0),
    moment_trials: int = 200_000,
    z_limit: float = 5.0,
    chi_fn: Callable[[float, float, float, float], float] | None = None,
) -> dict:
    """Run the chilow, exp_approx and Poisson-moment sweeps; ``passed`` is False on any violation.

    ``chi_fn`` replaces the pair chi-squared used by the chilow sweep, so a
    broken implementation can be shown to fail.
    """
    ss = np.random.SeedSequence(seed)
    r_chi, r_exp, r_var = (np.random.default_rng(s) for s in ss.spawn(3))
    chilow = reference.chilow_sweep(chilow_n, r_chi, chi_fn=chi_fn)
    exp_approx = reference.exp_approx_sweep(exp_approx_n, r_exp)
    grid = reference.moment_grid(lams, moment_trials, r_var)
    c = reference.fit_var_constant(grid)
    bad_means = [row for row in grid if abs(row["z"]) > z_limit]
    return {
        "seed": seed,
        "chilow": chilow,
        "exp_approx": exp_approx,
        "moments": grid,
        "moment_violations": len(bad_means),
        "var_c": c,
        "passed": chilow["violations"] == 0 and exp_approx["violations"] == 0 and not bad_means,
    }
