"""Synthetic experiments: i.i.d. sources, adaptive adversaries driven by a
DP policy, the best memoryless adversary, and an empirical check that a
history-dependent local source yields supermartingale steps.

Randomness comes from counter-based Philox streams keyed by
``(seed, block)``; a block is a fixed group of runs, so the results do not
depend on how many workers process the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy import optimize, stats

from .dp import DpResult, prune_dominated
from .errors import InvalidParameterError, TrialDataError
from .polytope import StepCandidateSet, StepDistribution, check_constraints, strategy_distribution
from .trials import OUTCOMES, OutcomeDistribution, StepSpec, TrialRecord

RUN_BLOCK = 1 << 15
WILSON_LEVEL = 0.99


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the substream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def wilson_interval(successes: int, n: int, level: float = WILSON_LEVEL) -> tuple[float, float]:
    ci = stats.binomtest(successes, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SimulationConfig:
    source: Union[OutcomeDistribution, DpResult]
    n: int
    runs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.runs < 1:
            raise InvalidParameterError("n and runs must be positive")


def sample_outcomes(dist: OutcomeDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Outcome indices of ``n`` independent draws."""
    if not isinstance(dist, OutcomeDistribution):
        raise TrialDataError("simulation source is not an outcome distribution")
    p = dist.as_array()
    return rng.choice(16, size=n, p=p / p.sum())


def simulate_iid(config: SimulationConfig, run: int = 0) -> list[TrialRecord]:
    """Trial stream of run ``run``.  A ``non00_12`` source only emits non-00
    trials, with the settings implied by the outcome."""
    codes = sample_outcomes(config.source, config.n, make_rng(config.seed, run))
    return [TrialRecord.from_outcome(i, OUTCOMES[c]) for i, c in enumerate(codes, start=1)]


@dataclass
class AdversaryReport:
    successes: int
    runs: int
    frequency: float
    interval: tuple
    target: float

    @property
    def target_in_interval(self) -> bool:
        return self.interval[0] <= self.target <= self.interval[1]


def _sampling_tables(dists: Sequence[StepDistribution], scale: int):
    width = max(len(d.support) for d in dists)
    cum = np.ones((len(dists), width))
    vals = np.zeros((len(dists), width), dtype=np.int64)
    for i, d in enumerate(dists):
        c = np.cumsum([float(p) for p in d.probabilities])
        cum[i, : len(c) - 1] = c[:-1]
        for j, v in enumerate(d.values):
            vals[i, j] = int(Fraction(v) * scale)
        vals[i, len(c):] = vals[i, len(c) - 1]
    return cum, vals


def _adversary_block(result: DpResult, block: int, size: int, seed: int) -> int:
    rng = make_rng(seed, block)
    cum, vals = _sampling_tables(result.candidates, result.lattice_scale)
    thresholds = cum[:, :-1]
    policy = result.policy
    pos = np.zeros(size, dtype=np.int64)
    u = np.empty(size)
    for k in range(result.m):
        choice = policy.choices_for(k, pos)
        rng.random(out=u)
        j = np.zeros(size, dtype=np.int64)
        for c in range(thresholds.shape[1]):
            j += u >= thresholds[choice, c]
        pos += vals[choice, j]
    return int(np.count_nonzero(pos >= result.L))


def simulate_adversary(
    result: DpResult,
    L: int | None = None,
    m: int | None = None,
    runs: int = 100_000,
    seed: int = 0,
    threads: int = 1,
) -> AdversaryReport:
    """Play the DP-optimal adaptive strategy ``runs`` times and count walks
    ending at or above ``L``."""
    if result.policy is None:
        raise InvalidParameterError("DP result carries no policy; rerun with want_policy=True")
    if (L is not None and L != result.L) or (m is not None and m != result.m):
        raise InvalidParameterError(f"policy was computed for L={result.L}, m={result.m}")
    blocks = [(b, min(RUN_BLOCK, runs - b * RUN_BLOCK)) for b in range(-(-runs // RUN_BLOCK))]
    work = lambda bs: _adversary_block(result, bs[0], bs[1], seed)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            counts = list(pool.map(work, blocks))
    else:
        counts = [work(b) for b in blocks]
    wins = sum(counts)
    return AdversaryReport(wins, runs, wins / runs, wilson_interval(wins, runs), result.p_value)


def _iid_tail(dist: StepDistribution, L: int, m: int, scale: int) -> float:
    """P(sum of m i.i.d. steps >= L), by repeated squaring of the step pmf."""
    ints = [int(Fraction(v) * scale) for v in dist.values]
    lo = min(ints)
    pmf = np.zeros(max(ints) - lo + 1)
    for v, p in zip(ints, dist.probabilities):
        pmf[v - lo] += float(p)
    total, total_lo = np.ones(1), 0
    base, base_lo = pmf, lo
    e = m
    while e:
        if e & 1:
            total, total_lo = np.convolve(total, base), total_lo + base_lo
        e >>= 1
        if e:
            base, base_lo = np.convolve(base, base), 2 * base_lo
    start = max(0, L - total_lo)
    return float(min(1.0, total[start:].sum()))


@dataclass
class MemorylessResult:
    value: float
    first: int
    second: int
    weight: float


def memoryless_best(
    candidates: Union[StepCandidateSet, Sequence[StepDistribution]],
    L: int,
    m: int,
    lattice_scale: int = 1,
    grid: int = 1000,
) -> MemorylessResult:
    """Best success probability of an adversary that repeats one fixed step
    distribution, searched over every pure candidate and every two-candidate
    mixture ``q * first + (1 - q) * second``.

    The tail is a polynomial in ``q``; a grid of spacing ``1/grid`` locates
    the maximum, which is then refined by bounded scalar minimisation.
    """
    dists = list(candidates.distributions if isinstance(candidates, StepCandidateSet) else candidates)
    if not dists:
        raise InvalidParameterError("empty candidate set")
    keep = prune_dominated(dists)
    best = MemorylessResult(-1.0, keep[0], keep[0], 1.0)
    for i in keep:
        v = _iid_tail(dists[i], L, m, lattice_scale)
        if v > best.value:
            best = MemorylessResult(v, i, i, 1.0)
    qs = np.linspace(0.0, 1.0, grid + 1)
    for a, i in enumerate(keep):
        for j in keep[a + 1:]:
            f = lambda q: _iid_tail(dists[i].mix(dists[j], Fraction(q).limit_denominator(10**12)), L, m, lattice_scale)
            vals = np.array([f(q) for q in qs])
            g = int(np.argmax(vals))
            q_best, v_best = float(qs[g]), float(vals[g])
            lo_q, hi_q = qs[max(g - 1, 0)], qs[min(g + 1, grid)]
            if hi_q > lo_q:
                res = optimize.minimize_scalar(lambda q: -f(q), bounds=(lo_q, hi_q), method="bounded",
                                               options={"xatol": 1e-10})
                if -res.fun > v_best:
                    q_best, v_best = float(res.x), float(-res.fun)
            if v_best > best.value:
                best = MemorylessResult(v_best, i, j, q_best)
    return best


@dataclass
class MemorySequenceSpec:
    """History-dependent trial source.

    ``rules`` is an ordered list of ``(condition, distribution)``; before each
    trial the first rule whose condition accepts the tuple of past step
    values supplies the trial distribution.  The last rule should accept
    everything.
    """

    rules: Sequence[tuple]
    validate: bool = True

    def __post_init__(self):
        if not self.rules:
            raise InvalidParameterError("a memory source needs at least one rule")
        if self.validate:
            for _, dist in self.rules:
                if dist.non00_mass == 0:
                    continue
                report = check_constraints(dist.conditioned_non00())
                if not report.is_local_boundary_consistent:
                    raise InvalidParameterError("memory source rule uses a non-local distribution")

    def rule_for(self, history: tuple) -> int:
        for i, (cond, _) in enumerate(self.rules):
            if cond(history):
                return i
        raise InvalidParameterError(f"no rule accepts history {history}")


def history_switching_source() -> MemorySequenceSpec:
    """Repeat v9 after an upward step, v1 otherwise."""
    return MemorySequenceSpec([
        (lambda h: bool(h) and h[-1] > 0, strategy_distribution(9)),
        (lambda h: True, strategy_distribution(1)),
    ])


@dataclass
class Violation:
    k: int
    history: tuple
    count: int
    estimate: float
    threshold: float


@dataclass
class VerificationReport:
    n_trials: int
    n_runs: int
    depth: int
    n_tests: int
    z: float
    violations: list = field(default_factory=list)
    max_z: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations


def _simulate_memory_source(seq: MemorySequenceSpec, spec: StepSpec, runs: int, depth: int,
                            rng: np.random.Generator, max_rounds: int) -> tuple[np.ndarray, int]:
    """Run ``runs`` independent sources until each has ``depth`` steps.

    Returns a (runs, depth) float array of steps (NaN where a run hit the
    round limit) and the number of trials consumed.
    """
    table = spec.code_table()
    probs = [d.as_array() / d.as_array().sum() for _, d in seq.rules]
    steps = np.full((runs, depth), np.nan)
    filled = np.zeros(runs, dtype=np.int64)
    histories: list[tuple] = [()] * runs
    memo: dict[tuple, int] = {}
    n_trials = 0
    active = np.arange(runs)
    for _ in range(max_rounds):
        if active.size == 0:
            break
        rule = np.empty(active.size, dtype=np.int64)
        for n, r in enumerate(active):
            h = histories[r]
            idx = memo.get(h)
            if idx is None:
                idx = memo[h] = seq.rule_for(h)
            rule[n] = idx
        codes = np.empty(active.size, dtype=np.int64)
        for i, p in enumerate(probs):
            sel = rule == i
            if sel.any():
                codes[sel] = rng.choice(16, size=int(sel.sum()), p=p)
        n_trials += active.size
        vals = table[codes]
        hit = ~np.isnan(vals)
        for r, v in zip(active[hit], vals[hit]):
            steps[r, filled[r]] = v
            filled[r] += 1
            histories[r] = histories[r] + (v,)
        active = active[filled[active] < depth]
    return steps, n_trials


def verify_derived_supermartingale(
    seq: MemorySequenceSpec,
    spec: StepSpec,
    runs: int = 100_000,
    seed: int = 0,
    depth: int = 8,
    min_count: int = 200,
    z: float = 3.0,
    family_alpha: float | None = 0.01,
    history_window: int = 8,
    max_rounds: int = 10_000,
) -> VerificationReport:
    """Check empirically that the reduced steps of a history-dependent local
    source satisfy E[step | past steps] <= 0.

    Conditional means are estimated for each step number ``k <= depth`` and
    each history bucket (the last ``min(k - 1, history_window)`` steps) with at
    least ``min_count`` samples; a bucket is flagged when its mean exceeds
    ``z`` standard errors.  With ``family_alpha`` set, ``z`` is raised to the
    Bonferroni level for the number of buckets tested.
    """
    steps, n_trials = _simulate_memory_source(seq, spec, runs, depth, make_rng(seed, 0), max_rounds)
    groups = []
    for k in range(1, depth + 1):
        col = steps[:, k - 1]
        ok = ~np.isnan(col)
        w = min(k - 1, history_window)
        hist = steps[ok, k - 1 - w:k - 1]
        col = col[ok]
        if w == 0:
            keys = np.zeros(col.size, dtype=np.int64)
            uniq, inv = np.array([[]]), keys
        else:
            uniq, inv = np.unique(hist, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
        for g in range(int(inv.max()) + 1 if inv.size else 0):
            sample = col[inv == g]
            if sample.size >= min_count:
                history = tuple(float(x) for x in uniq[g]) if w else ()
                groups.append((k, history, sample))
    n_tests = len(groups)
    if family_alpha is not None and n_tests:
        z = max(z, float(stats.norm.isf(family_alpha / n_tests)))
    report = VerificationReport(n_trials, runs, depth, n_tests, z)
    for k, history, sample in groups:
        mean = float(sample.mean())
        se = float(sample.std(ddof=1) / math.sqrt(sample.size)) if sample.size > 1 else 0.0
        threshold = z * se
        if se > 0:
            report.max_z = max(report.max_z, mean / se)
        if mean > threshold + 1e-12:
            report.violations.append(Violation(k, history, int(sample.size), mean, threshold))
    return report
