"""Local-hidden-variable model: deterministic strategies, the distributions
they induce, the eight-constraint description of the local polytope for
non-00 outcomes, the i.i.d. realisation of any local mixture, and the step
distributions a local source can produce for a given statistic.

Everything here is exact (``Fraction``) unless a float input forces float
mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import DegenerateStrategyError, EmptySupportError, InvalidParameterError
from .trials import (
    LABEL_INDEX,
    NULL_INDICES,
    OUTCOMES,
    SETTING_PAIRS,
    Outcome,
    OutcomeDistribution,
    StepSpec,
    as_outcome,
    to_fraction,
)

FLOAT_CONSTRAINT_TOL = 1e-6

# rows of the strategy table, settings in the order (a, a', b, b')
_STRATEGY_ROWS = (
    "++++", "0+++", "+0++", "++0+", "+++0", "00++", "++00", "0++0",
    "+00+", "+0+0", "0+0+", "000+", "00+0", "0+00", "+000", "0000",
)


@dataclass(frozen=True)
class DeterministicStrategy:
    index: int
    assignment: Mapping[str, str]

    def result(self, setting: str) -> str:
        return self.assignment[setting]

    def outcome(self, setting1: str, setting2: str) -> Outcome:
        return Outcome(self.assignment[setting1], self.assignment[setting2], setting1, setting2)

    def __str__(self) -> str:
        row = ",".join(self.assignment[s] for s in ("a", "a'", "b", "b'"))
        return f"v{self.index}=({row})"


STRATEGIES: tuple[DeterministicStrategy, ...] = tuple(
    DeterministicStrategy(k, dict(zip(("a", "a'", "b", "b'"), row)))
    for k, row in enumerate(_STRATEGY_ROWS, start=1)
)


def strategy(k: int) -> DeterministicStrategy:
    if not 1 <= k <= 16:
        raise InvalidParameterError(f"strategy index {k} outside 1..16")
    return STRATEGIES[k - 1]


def _probability(value, label: str):
    if isinstance(value, float):
        if not 0.0 <= value <= 1.0:
            raise InvalidParameterError(f"{label}={value} outside [0, 1]")
        return value
    p = to_fraction(value)
    if not 0 <= p <= 1:
        raise InvalidParameterError(f"{label}={p} outside [0, 1]")
    return p


def _setting_weights(p_a, p_b) -> list:
    pa = _probability(p_a, "p_a")
    pb = _probability(p_b, "p_b")
    qa, qb = 1 - pa, 1 - pb
    return [pa * pb, pa * qb, qa * pb, qa * qb]


def strategy_distribution(v: Union[DeterministicStrategy, int], p_a=Fraction(1, 2), p_b=Fraction(1, 2)) -> OutcomeDistribution:
    """Distribution over all 16 outcomes when every trial follows ``v`` and
    the settings are drawn independently with P(a)=p_a, P(b)=p_b."""
    if isinstance(v, int):
        v = strategy(v)
    weights: list = [0] * 16
    for (s1, s2), w in zip(SETTING_PAIRS, _setting_weights(p_a, p_b)):
        weights[v.outcome(s1, s2).index] += w
    return OutcomeDistribution(tuple(weights), "full16")


def induced_non00_distribution(v: Union[DeterministicStrategy, int], p_a=Fraction(1, 2), p_b=Fraction(1, 2)) -> OutcomeDistribution:
    """``strategy_distribution`` conditioned on a non-00 outcome."""
    if isinstance(v, int):
        v = strategy(v)
    try:
        return strategy_distribution(v, p_a, p_b).conditioned_non00()
    except EmptySupportError:
        raise DegenerateStrategyError(f"{v} does not induce a non-00 distribution") from None


def _coefficients(terms: Mapping[str, int]) -> tuple[int, ...]:
    vec = [0] * 16
    for label, c in terms.items():
        vec[LABEL_INDEX[label]] = c
    return tuple(vec)


# left side minus right side; zero for a local (and any no-signaling) source
NO_SIGNALING = (
    _coefficients({"++ab": 1, "+0ab": 1, "++ab'": -1, "+0ab'": -1}),
    _coefficients({"++a'b": 1, "+0a'b": 1, "++a'b'": -1, "+0a'b'": -1}),
    _coefficients({"++ab": 1, "0+ab": 1, "++a'b": -1, "0+a'b": -1}),
    _coefficients({"++ab'": 1, "0+ab'": 1, "++a'b'": -1, "0+a'b'": -1}),
)

# left-hand sides that a local source keeps <= 0
EBERHARD_INEQUALITIES = (
    _coefficients({"++ab": 1, "+0ab'": -1, "0+a'b": -1, "++a'b'": -1}),
    _coefficients({"++ab'": 1, "+0ab": -1, "0+a'b'": -1, "++a'b": -1}),
    _coefficients({"++a'b": 1, "+0a'b'": -1, "0+ab": -1, "++ab'": -1}),
    _coefficients({"++a'b'": 1, "+0a'b": -1, "0+ab'": -1, "++ab": -1}),
)


def relabel_outcome(outcome: Union[Outcome, str], swap_a: bool = False, swap_b: bool = False) -> Outcome:
    """Exchange a<->a' and/or b<->b' in an outcome."""
    o = as_outcome(outcome)
    s1 = {"a": "a'", "a'": "a"}[o.setting1] if swap_a else o.setting1
    s2 = {"b": "b'", "b'": "b"}[o.setting2] if swap_b else o.setting2
    return Outcome(o.result1, o.result2, s1, s2)


def relabel_coefficients(coeffs: Sequence[int], swap_a: bool = False, swap_b: bool = False) -> tuple:
    out = [0] * 16
    for o, c in zip(OUTCOMES, coeffs):
        out[relabel_outcome(o, swap_a, swap_b).index] = c
    return tuple(out)


@dataclass(frozen=True)
class ConstraintReport:
    normalization_ok: bool
    nonnegativity_ok: bool
    equality_residuals: tuple
    inequality_slacks: tuple
    is_local_boundary_consistent: bool
    tolerance: float

    def as_dict(self) -> dict:
        fmt = (lambda x: str(x)) if isinstance(self.equality_residuals[0], Fraction) else float
        return {
            "normalization_ok": self.normalization_ok,
            "nonnegativity_ok": self.nonnegativity_ok,
            "equality_residuals": [fmt(x) for x in self.equality_residuals],
            "inequality_slacks": [fmt(x) for x in self.inequality_slacks],
            "is_local_boundary_consistent": self.is_local_boundary_consistent,
            "tolerance": self.tolerance,
        }


def _raw_weights(dist) -> list:
    if isinstance(dist, OutcomeDistribution):
        if dist.support_mode != "non00_12" and any(dist.weights[i] != 0 for i in NULL_INDICES):
            raise InvalidParameterError("check_constraints expects a non-00 distribution; condition it first")
        return list(dist.weights)
    weights: list = [0] * 16
    floats = any(isinstance(v, float) for v in dist.values())
    for key, value in dist.items():
        weights[as_outcome(key).index] = float(value) if floats else to_fraction(value)
    return weights


def check_constraints(dist: Union[OutcomeDistribution, Mapping], tol: float | None = None) -> ConstraintReport:
    """Evaluate the four no-signaling equalities and four Eberhard-type
    inequalities on a distribution over the 12 non-00 outcomes.

    A raw ``{label: weight}`` mapping is accepted unvalidated, so tables that
    do not sum to one can still be inspected.  Exact inputs are checked with
    zero tolerance.
    """
    w = _raw_weights(dist)
    exact = all(isinstance(x, (Fraction, int)) for x in w)
    if tol is None:
        tol = 0.0 if exact else FLOAT_CONSTRAINT_TOL
    residuals = tuple(sum(c * x for c, x in zip(row, w)) for row in NO_SIGNALING)
    slacks = tuple(sum(c * x for c, x in zip(row, w)) for row in EBERHARD_INEQUALITIES)
    total = sum(w)
    norm_ok = total == 1 if exact else abs(total - 1) <= 1e-9
    nonneg = all(x >= 0 for x in w) and all(w[i] == 0 for i in NULL_INDICES)
    consistent = all(abs(r) <= tol for r in residuals) and all(s <= tol for s in slacks)
    return ConstraintReport(norm_ok, nonneg, residuals, slacks, consistent, tol)


def spec_inequality_value(spec: StepSpec, dist: Union[OutcomeDistribution, Mapping]):
    """Sum of step value times probability over the spec's outcomes; a local
    source keeps this <= 0."""
    w = _raw_weights(dist) if not isinstance(dist, OutcomeDistribution) else dist.weights
    return sum(v * w[LABEL_INDEX[lab]] for lab, v in spec.steps.items())


def _mixture_weights(weights: Sequence) -> list:
    weights = list(weights)
    if len(weights) == 16:
        if weights[15] != 0:
            raise InvalidParameterError("strategy 16 induces no non-00 distribution and cannot be mixed")
        weights = weights[:15]
    if len(weights) != 15:
        raise InvalidParameterError(f"expected 15 mixture weights, got {len(weights)}")
    if any(isinstance(x, float) for x in weights):
        d = [float(x) for x in weights]
        if any(x < 0 for x in d) or abs(sum(d) - 1) > 1e-9:
            raise InvalidParameterError("mixture weights must be nonnegative and sum to 1")
        return d
    d = [to_fraction(x) for x in weights]
    if any(x < 0 for x in d) or sum(d) != 1:
        raise InvalidParameterError("mixture weights must be nonnegative and sum to 1")
    return d


_INDUCED = tuple(induced_non00_distribution(k) for k in range(1, 16))


def random_local_mixture(weights: Sequence) -> OutcomeDistribution:
    """Convex combination of the 15 induced non-00 strategy distributions."""
    d = _mixture_weights(weights)
    out = [sum(dk * vk.weights[i] for dk, vk in zip(d, _INDUCED)) for i in range(16)]
    if isinstance(d[0], float):
        out = [float(x) for x in out]
    return OutcomeDistribution(tuple(out), "non00_12")


@dataclass(frozen=True)
class FineConstruction:
    x: Fraction
    y: Fraction
    z: Fraction
    s: Fraction
    t: Fraction
    u: Fraction
    distribution: OutcomeDistribution
    null_mass: Fraction


def fine_construct(weights: Sequence) -> FineConstruction:
    """i.i.d. trial distribution over all 16 outcomes whose non-00
    conditional equals ``random_local_mixture(weights)``.

    Strategies 1-7, 8-11 and 12-15 have non-00 mass 1, 3/4 and 1/2 under
    equiprobable settings; each group is boosted by the inverse of its mass.
    """
    d = _mixture_weights(weights)
    x, y, z = sum(d[0:7]), sum(d[7:11]), sum(d[11:15])
    denom = 3 * x + 4 * y + 6 * z
    s, t, u = 3 / denom, 4 / denom, 6 / denom
    scale = [s] * 7 + [t] * 4 + [u] * 4
    full = [strategy_distribution(k).weights for k in range(1, 16)]
    out = [sum(c * dk * vk[i] for c, dk, vk in zip(scale, d, full)) for i in range(16)]
    if isinstance(d[0], float):
        out = [float(v) for v in out]
    dist = OutcomeDistribution(tuple(out), "full16")
    null_mass = y * t / 4 + z * u / 2
    return FineConstruction(x, y, z, s, t, u, dist, null_mass)


@dataclass(frozen=True)
class StepDistribution:
    """Probabilities over step values, stored largest step first."""

    support: tuple

    def __post_init__(self):
        items = [(Fraction(v) if not isinstance(v, float) else v, p) for v, p in self.support if p != 0]
        items.sort(key=lambda vp: vp[0], reverse=True)
        merged: dict = {}
        for v, p in items:
            merged[v] = merged.get(v, 0) + p
        object.__setattr__(self, "support", tuple(merged.items()))
        if any(p < 0 for _, p in self.support):
            raise InvalidParameterError("negative step probability")
        total = sum(p for _, p in self.support)
        if (isinstance(total, float) and abs(total - 1) > 1e-9) or (not isinstance(total, float) and total != 1):
            raise InvalidParameterError(f"step probabilities sum to {total}")

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "StepDistribution":
        return cls(tuple((to_fraction(v), p if isinstance(p, float) else to_fraction(p)) for v, p in mapping.items()))

    @property
    def mean(self):
        return sum(v * p for v, p in self.support)

    @property
    def values(self) -> tuple:
        return tuple(v for v, _ in self.support)

    @property
    def probabilities(self) -> tuple:
        return tuple(p for _, p in self.support)

    def prob(self, value) -> Fraction:
        return dict(self.support).get(Fraction(value), Fraction(0))

    def mix(self, other: "StepDistribution", q) -> "StepDistribution":
        """``q * self + (1 - q) * other``."""
        out: dict = {}
        for v, p in self.support:
            out[v] = out.get(v, 0) + q * p
        for v, p in other.support:
            out[v] = out.get(v, 0) + (1 - q) * p
        return StepDistribution(tuple(out.items()))

    def __str__(self) -> str:
        return "{" + ", ".join(f"{'+' if v > 0 else ''}{v}: {p}" for v, p in self.support) + "}"


# the two saturating Ch step distributions
CH_EVEN = StepDistribution(((1, Fraction(1, 2)), (-1, Fraction(1, 2))))
CH_HEAVY = StepDistribution(((1, Fraction(2, 3)), (-2, Fraction(1, 3))))
J_FAIR = StepDistribution(((1, Fraction(1, 2)), (-1, Fraction(1, 2))))


@dataclass(frozen=True)
class StepCandidate:
    distribution: StepDistribution
    sources: tuple
    constraint_value: Fraction


@dataclass(frozen=True)
class StepCandidateSet:
    spec_name: str
    candidates: tuple

    def __iter__(self) -> Iterator[StepCandidate]:
        return iter(self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, i) -> StepCandidate:
        return self.candidates[i]

    @property
    def distributions(self) -> tuple:
        return tuple(c.distribution for c in self.candidates)

    def index_of(self, dist: StepDistribution) -> int:
        return self.distributions.index(dist)

    @classmethod
    def from_distributions(cls, spec_name: str, dists: Iterable[StepDistribution]) -> "StepCandidateSet":
        """Ad-hoc candidate set; duplicates are merged, order kept."""
        seen: list = []
        for d in dists:
            if d not in seen:
                seen.append(d)
        return cls(spec_name, tuple(StepCandidate(d, (), d.mean) for d in seen))


def step_candidates(spec: StepSpec, p_a=None, p_b=None, allow_positive_drift: bool = False) -> StepCandidateSet:
    """Step distributions produced by repeating each deterministic strategy,
    conditioned on a relevant outcome.  Setting probabilities default to the
    ones ``spec`` is designed for.

    Any local source's step distribution is a mixture of these.  The
    constraint value of a candidate is its mean step; a supermartingale
    statistic needs every mean <= 0, and a positive one raises unless
    ``allow_positive_drift``.
    """
    if p_a is None:
        p_a = spec.settings[0]
    if p_b is None:
        p_b = spec.settings[1]
    found: dict[StepDistribution, list[int]] = {}
    for v in STRATEGIES:
        dist = strategy_distribution(v, p_a, p_b)
        mass: dict = {}
        for label, step in spec.steps.items():
            w = dist.weights[LABEL_INDEX[label]]
            if w:
                mass[step] = mass.get(step, 0) + w
        total = sum(mass.values())
        if not total:
            continue
        cand = StepDistribution(tuple((s, w / total) for s, w in mass.items()))
        found.setdefault(cand, []).append(v.index)
    cands = tuple(StepCandidate(d, tuple(src), d.mean) for d, src in found.items())
    bad = [c for c in cands if c.constraint_value > 0]
    if bad and not allow_positive_drift:
        raise InvalidParameterError(
            f"{spec.name} is not a supermartingale at p_a={p_a}, p_b={p_b}: "
            f"strategy {bad[0].sources[0]} gives mean step {bad[0].constraint_value}"
        )
    return StepCandidateSet(spec.name, cands)
