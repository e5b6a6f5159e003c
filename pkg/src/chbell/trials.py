"""Trials, outcomes, outcome distributions and the reduction of a trial
stream to a walk of step values.

A trial has two settings (``a``/``a'`` on side 1, ``b``/``b'`` on side 2) and
two binary results (``+`` or ``0``).  Outcomes are written the usual way,
results first: ``0+a'b`` means side 1 saw 0 in setting a', side 2 saw + in
setting b.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .errors import EmptySupportError, InvalidParameterError, TrialDataError

Number = Union[Fraction, float, int]

SETTINGS1 = ("a", "a'")
SETTINGS2 = ("b", "b'")
RESULTS = ("+", "0")

# canonical order: setting pair major, result pair minor
SETTING_PAIRS = (("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'"))
RESULT_PAIRS = (("+", "+"), ("+", "0"), ("0", "+"), ("0", "0"))

FLOAT_SUM_TOL = 1e-9

_LABEL_RE = re.compile(r"^([+0])([+0])(a'?)(b'?)$")


def _normalize_primes(text: str) -> str:
    return text.replace("′", "'").replace("’", "'").strip()


class Outcome(NamedTuple):
    result1: str
    result2: str
    setting1: str
    setting2: str

    @property
    def label(self) -> str:
        return f"{self.result1}{self.result2}{self.setting1}{self.setting2}"

    @property
    def index(self) -> int:
        return OUTCOME_INDEX[self]

    @property
    def is_null(self) -> bool:
        """True for the four 00 outcomes."""
        return self.result1 == "0" and self.result2 == "0"

    @classmethod
    def parse(cls, label: str) -> "Outcome":
        match = _LABEL_RE.match(_normalize_primes(label))
        if match is None:
            raise InvalidParameterError(f"not an outcome label: {label!r}")
        return cls(*match.groups())

    def __str__(self) -> str:
        return self.label


OUTCOMES: tuple[Outcome, ...] = tuple(
    Outcome(r1, r2, s1, s2) for (s1, s2) in SETTING_PAIRS for (r1, r2) in RESULT_PAIRS
)
OUTCOME_INDEX: dict[Outcome, int] = {o: i for i, o in enumerate(OUTCOMES)}
LABELS: tuple[str, ...] = tuple(o.label for o in OUTCOMES)
LABEL_INDEX: dict[str, int] = {lab: i for i, lab in enumerate(LABELS)}
NON00: tuple[Outcome, ...] = tuple(o for o in OUTCOMES if not o.is_null)
NULL_INDICES = tuple(o.index for o in OUTCOMES if o.is_null)


def as_outcome(key: Union[Outcome, str, int]) -> Outcome:
    if isinstance(key, Outcome):
        return key
    if isinstance(key, (int, np.integer)):
        return OUTCOMES[int(key)]
    return Outcome.parse(key)


def to_fraction(value: Union[Number, str]) -> Fraction:
    """Exact conversion of ints, Fractions and decimal/ratio strings.

    Floats are converted through their shortest repr, so ``0.1`` becomes
    ``1/10`` rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise InvalidParameterError(f"non-finite value {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidParameterError(f"not a number: {value!r}") from exc
    raise InvalidParameterError(f"unsupported numeric type {type(value).__name__}")


@dataclass(frozen=True)
class TrialRecord:
    index: int
    setting1: str
    setting2: str
    result1: str
    result2: str

    def __post_init__(self):
        if not isinstance(self.index, (int, np.integer)) or isinstance(self.index, bool) or self.index < 1:
            raise TrialDataError(f"trial index must be a positive integer, got {self.index!r}", None)
        if self.setting1 not in SETTINGS1:
            raise TrialDataError(f"unknown setting1 {self.setting1!r}", self.index)
        if self.setting2 not in SETTINGS2:
            raise TrialDataError(f"unknown setting2 {self.setting2!r}", self.index)
        if self.result1 not in RESULTS or self.result2 not in RESULTS:
            raise TrialDataError(f"unknown result {self.result1!r}/{self.result2!r}", self.index)

    @property
    def outcome(self) -> Outcome:
        return Outcome(self.result1, self.result2, self.setting1, self.setting2)

    @classmethod
    def from_outcome(cls, index: int, outcome: Union[Outcome, str, int]) -> "TrialRecord":
        o = as_outcome(outcome)
        return cls(index, o.setting1, o.setting2, o.result1, o.result2)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probability vector over the 16 outcomes, in canonical order.

    Weights are either all exact (``Fraction``) or all ``float``.  In
    ``non00_12`` mode the four 00 outcomes carry zero weight.
    """

    weights: tuple
    support_mode: str = "full16"

    def __post_init__(self):
        if self.support_mode not in ("full16", "non00_12"):
            raise InvalidParameterError(f"unknown support mode {self.support_mode!r}")
        if len(self.weights) != 16:
            raise InvalidParameterError("an outcome distribution needs 16 weights")
        exact = all(isinstance(w, (Fraction, int)) for w in self.weights)
        if exact:
            weights = tuple(Fraction(w) for w in self.weights)
        else:
            weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if any(w < 0 for w in weights):
            raise InvalidParameterError("negative probability weight")
        total = sum(weights)
        if exact and total != 1:
            raise InvalidParameterError(f"weights sum to {total}, not 1")
        if not exact and abs(total - 1.0) > FLOAT_SUM_TOL:
            raise InvalidParameterError(f"weights sum to {total!r}, not 1")
        if self.support_mode == "non00_12" and any(weights[i] != 0 for i in NULL_INDICES):
            raise InvalidParameterError("non00_12 distribution puts weight on a 00 outcome")

    @classmethod
    def from_mapping(
        cls,
        mapping: Mapping[Union[str, Outcome], Union[Number, str]],
        support_mode: str = "auto",
        exact: bool | None = None,
        normalize: bool = False,
    ) -> "OutcomeDistribution":
        """Build from ``{label: weight}``; missing outcomes get weight 0.

        String weights (``"1/3"``, ``"0.05"``) are read exactly.  With
        ``exact=None`` the result is exact unless some weight is a float.
        ``normalize`` rescales the weights to sum to one, which the printed
        3-decimal tables need.
        """
        raw: list = [0] * 16
        any_float = False
        for key, value in mapping.items():
            idx = as_outcome(key).index
            if isinstance(value, (float, np.floating)):
                any_float = True
            raw[idx] = to_fraction(value)
        if exact is None:
            exact = not any_float
        if normalize:
            total = sum(raw)
            if total <= 0:
                raise EmptySupportError("cannot normalize an all-zero table")
            raw = [w / total for w in raw]
        if support_mode == "auto":
            support_mode = "non00_12" if all(raw[i] == 0 for i in NULL_INDICES) else "full16"
        weights = tuple(raw) if exact else tuple(float(w) for w in raw)
        return cls(weights, support_mode)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.weights[0], Fraction)

    def __getitem__(self, key: Union[str, Outcome, int]):
        return self.weights[as_outcome(key).index]

    def items(self):
        return zip(OUTCOMES, self.weights)

    def as_mapping(self, nonzero_only: bool = True) -> dict[str, str]:
        out = {}
        for o, w in self.items():
            if nonzero_only and w == 0:
                continue
            out[o.label] = str(w) if self.is_exact else repr(w)
        return out

    @property
    def non00_mass(self):
        return sum(self.weights) - sum(self.weights[i] for i in NULL_INDICES)

    def conditioned_non00(self) -> "OutcomeDistribution":
        mass = self.non00_mass
        if mass == 0:
            raise EmptySupportError("distribution has no non-00 mass")
        weights = [0 if i in NULL_INDICES else w / mass for i, w in enumerate(self.weights)]
        if self.is_exact:
            weights = [Fraction(w) for w in weights]
        return OutcomeDistribution(tuple(weights), "non00_12")

    def to_float(self) -> "OutcomeDistribution":
        return OutcomeDistribution(tuple(float(w) for w in self.weights), self.support_mode)

    def as_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True)
class StepSpec:
    """A map from relevant outcomes to walk-step values.

    Outcomes not in ``steps`` are irrelevant and skipped by the reduction.
    """

    name: str
    steps: Mapping[str, Fraction] = field(repr=False)
    # setting probabilities (P(a), P(b)) the statistic is designed for
    settings: tuple = (Fraction(1, 2), Fraction(1, 2))

    def __post_init__(self):
        clean = {}
        for key, value in self.steps.items():
            o = as_outcome(key)
            if o.is_null:
                raise InvalidParameterError(f"{self.name}: 00 outcome {o.label} cannot carry a step")
            v = to_fraction(value)
            if v == 0:
                raise InvalidParameterError(f"{self.name}: zero step for {o.label}")
            clean[o.label] = v
        if not clean:
            raise InvalidParameterError(f"{self.name}: no relevant outcomes")
        ordered = {lab: clean[lab] for lab in LABELS if lab in clean}
        object.__setattr__(self, "steps", MappingProxyType(ordered))

    @property
    def plus_set(self) -> dict[str, Fraction]:
        return {k: v for k, v in self.steps.items() if v > 0}

    @property
    def minus_set(self) -> dict[str, Fraction]:
        return {k: v for k, v in self.steps.items() if v < 0}

    @property
    def relevant_set(self) -> frozenset[str]:
        return frozenset(self.steps)

    @property
    def lattice_scale(self) -> int:
        return _lcm(v.denominator for v in self.steps.values())

    @property
    def step_values(self) -> tuple[Fraction, ...]:
        """Distinct step values, largest first."""
        return tuple(sorted(set(self.steps.values()), reverse=True))

    def step_of(self, outcome: Union[Outcome, str, int]) -> Fraction | None:
        return self.steps.get(as_outcome(outcome).label)

    def code_table(self) -> np.ndarray:
        """Float step per outcome index, NaN for irrelevant outcomes."""
        table = np.full(16, np.nan)
        for lab, v in self.steps.items():
            table[LABEL_INDEX[lab]] = float(v)
        return table


_BUILTIN_STEPS = {
    "J": {"++ab": 1, "+0ab'": -1, "0+a'b": -1, "++a'b'": -1},
    "J_E2": {"++ab'": 1, "+0ab": -1, "0+a'b": -1, "++a'b'": -1},
    "J_E3": {"++a'b": 1, "+0ab'": -1, "0+ab": -1, "++a'b'": -1},
    "Ch": {
        "++ab'": 1, "++a'b": 1,
        "+0ab": -1, "0+ab": -1, "+0ab'": -1, "0+a'b": -1,
        "++a'b'": -2,
    },
}
BUILTIN_SPECS = tuple(_BUILTIN_STEPS)


def builtin_spec(name: str) -> StepSpec:
    """One of the built-in statistics: ``J``, ``J_E2``, ``J_E3`` or ``Ch``."""
    try:
        steps = _BUILTIN_STEPS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown statistic {name!r}; choose from {BUILTIN_SPECS}") from None
    return StepSpec(name, steps)


def _open_unit_rational(value, label: str) -> Fraction:
    if isinstance(value, (float, np.floating)):
        raise InvalidParameterError(f"{label} must be given as an exact rational (Fraction or 'p/q' string)")
    p = to_fraction(value)
    if not 0 < p < 1:
        raise InvalidParameterError(f"{label}={p} must lie strictly inside (0, 1)")
    return p


def generalized_j_spec(p_a, p_b) -> StepSpec:
    """J statistic reweighted for setting probabilities ``p_a``, ``p_b``.

    >>> sorted(generalized_j_spec("1/2", "1/3").steps.values())
    [Fraction(-6, 1), Fraction(-3, 1), Fraction(-3, 1), Fraction(6, 1)]
    """
    pa = _open_unit_rational(p_a, "p_a")
    pb = _open_unit_rational(p_b, "p_b")
    qa, qb = 1 - pa, 1 - pb
    steps = {
        "++ab": 1 / (pa * pb),
        "+0ab'": -1 / (pa * qb),
        "0+a'b": -1 / (qa * pb),
        "++a'b'": -1 / (qa * qb),
    }
    return StepSpec(f"Jgen({pa},{pb})", steps, (pa, pb))


@dataclass(frozen=True)
class ReducedWalk:
    spec_name: str
    steps: tuple
    m: int
    final_value: Fraction
    tally: Mapping

    def __post_init__(self):
        if self.m != len(self.steps):
            raise InvalidParameterError("m does not match the number of steps")
        if sum(self.tally.values()) != self.m:
            raise InvalidParameterError("tally counts do not add up to m")

    @classmethod
    def from_steps(cls, spec_name: str, steps: Iterable) -> "ReducedWalk":
        steps = tuple(Fraction(s) for s in steps)
        tally = dict(sorted(Counter(steps).items(), reverse=True))
        return cls(spec_name, steps, len(steps), sum(steps, Fraction(0)), MappingProxyType(tally))

    @property
    def is_binary(self) -> bool:
        """True if every step is +1 or -1."""
        return set(self.tally) <= {1, -1}


def reduce_trials(trials: Iterable[TrialRecord], spec: StepSpec) -> ReducedWalk:
    """Keep the trials whose outcome is relevant to ``spec``, in order, and
    replace each by its step value."""
    lookup = spec.steps
    steps = []
    last = 0
    for pos, rec in enumerate(trials, start=1):
        if not isinstance(rec, TrialRecord):
            try:
                rec = TrialRecord(*rec)
            except (TypeError, ValueError) as exc:
                raise TrialDataError(f"malformed trial record {rec!r}", pos) from exc
        if rec.index <= last:
            raise TrialDataError("trial indices must be strictly increasing", rec.index)
        last = rec.index
        step = lookup.get(rec.result1 + rec.result2 + rec.setting1 + rec.setting2)
        if step is not None:
            steps.append(step)
    return ReducedWalk.from_steps(spec.name, steps)


def reduce_outcome_codes(codes: np.ndarray, spec: StepSpec) -> np.ndarray:
    """Vectorised reduction of an array of outcome indices to float steps."""
    table = spec.code_table()
    steps = table[np.asarray(codes, dtype=np.intp)]
    return steps[~np.isnan(steps)]


class EmpiricalSummary(NamedTuple):
    distribution: OutcomeDistribution
    p_a: Fraction
    p_b: Fraction
    n_trials: int


def empirical_distribution(trials: Sequence[TrialRecord]) -> EmpiricalSummary:
    """Relative frequencies of the 12 non-00 outcomes plus raw setting
    marginals over all trials."""
    counts = [0] * 16
    n_a = n_b = n = 0
    for rec in trials:
        counts[OUTCOME_INDEX[rec.outcome]] += 1
        n += 1
        n_a += rec.setting1 == "a"
        n_b += rec.setting2 == "b"
    non00 = n - sum(counts[i] for i in NULL_INDICES)
    if non00 == 0:
        raise EmptySupportError("no non-00 trials to form a distribution from")
    weights = tuple(
        Fraction(0) if i in NULL_INDICES else Fraction(c, non00) for i, c in enumerate(counts)
    )
    return EmpiricalSummary(
        OutcomeDistribution(weights, "non00_12"), Fraction(n_a, n), Fraction(n_b, n), n
    )
