from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chbell.errors import InvalidParameterError, TrialDataError
from chbell.reference import example_trials
from chbell.trials import (
    LABELS,
    NON00,
    OUTCOMES,
    Outcome,
    OutcomeDistribution,
    ReducedWalk,
    StepSpec,
    TrialRecord,
    as_outcome,
    builtin_spec,
    empirical_distribution,
    generalized_j_spec,
    reduce_outcome_codes,
    reduce_trials,
    to_fraction,
)

labels = st.sampled_from(LABELS)
trial_streams = st.lists(labels, max_size=60).map(
    lambda labs: [TrialRecord.from_outcome(i, lab) for i, lab in enumerate(labs, start=1)]
)


def test_outcome_order_and_labels():
    assert len(OUTCOMES) == 16 and len(NON00) == 12
    assert LABELS[:4] == ("++ab", "+0ab", "0+ab", "00ab")
    assert LABELS[-1] == "00a'b'"
    assert as_outcome("0+a′b") == Outcome("0", "+", "a'", "b")
    assert as_outcome(5).label == "+0ab'"
    with pytest.raises(InvalidParameterError):
        as_outcome("++cb")


def test_trial_record_validation():
    rec = TrialRecord(3, "a'", "b", "0", "+")
    assert rec.outcome.label == "0+a'b"
    with pytest.raises(TrialDataError):
        TrialRecord(1, "c", "b", "+", "0")
    with pytest.raises(TrialDataError):
        TrialRecord(0, "a", "b", "+", "0")
    with pytest.raises(TrialDataError):
        TrialRecord(2, "a", "b", "-", "0")


def test_to_fraction_reads_decimals_exactly():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction("0.050") == Fraction(1, 20)
    assert to_fraction("1/3") == Fraction(1, 3)
    with pytest.raises(InvalidParameterError):
        to_fraction(float("nan"))
    with pytest.raises(InvalidParameterError):
        to_fraction("abc")


def test_distribution_validation():
    with pytest.raises(InvalidParameterError):
        OutcomeDistribution.from_mapping({"++ab": "1/2"})
    with pytest.raises(InvalidParameterError):
        OutcomeDistribution.from_mapping({"++ab": "3/2", "+0ab": "-1/2"})
    with pytest.raises(InvalidParameterError):
        OutcomeDistribution.from_mapping({"00ab": 1}, support_mode="non00_12")
    d = OutcomeDistribution.from_mapping({"++ab": 1, "00ab": 1}, normalize=True)
    assert d.support_mode == "full16" and d["++ab"] == Fraction(1, 2)
    assert d.conditioned_non00()["++ab"] == 1
    f = OutcomeDistribution.from_mapping({"++ab": 0.25, "+0ab": 0.75})
    assert not f.is_exact and f.support_mode == "non00_12"


def test_builtin_specs_match_their_definitions():
    J = builtin_spec("J")
    assert J.plus_set == {"++ab": 1}
    assert set(J.minus_set) == {"+0ab'", "0+a'b", "++a'b'"}
    ch = builtin_spec("Ch")
    assert ch.step_values == (1, -1, -2)
    assert ch.steps["++a'b'"] == -2
    assert builtin_spec("J_E2").plus_set == {"++ab'": 1}
    assert builtin_spec("J_E3").plus_set == {"++a'b": 1}
    with pytest.raises(InvalidParameterError):
        builtin_spec("K")
    with pytest.raises(InvalidParameterError):
        StepSpec("bad", {"00ab": 1})


def test_generalized_j_lattice():
    spec = generalized_j_spec(Fraction(1, 3), Fraction(1, 2))
    assert spec.steps["++ab"] == 6
    assert spec.steps["+0ab'"] == -6 and spec.steps["0+a'b"] == -3 and spec.steps["++a'b'"] == -3
    assert spec.lattice_scale == 1
    spec = generalized_j_spec(Fraction(2, 5), Fraction(3, 7))
    assert spec.steps["++ab"] == Fraction(35, 6)
    assert spec.lattice_scale == 72
    with pytest.raises(InvalidParameterError):
        generalized_j_spec(0.5, Fraction(1, 2))
    with pytest.raises(InvalidParameterError):
        generalized_j_spec(Fraction(0), Fraction(1, 2))


def test_example_stream_reduces_to_known_walks():
    walk = reduce_trials(example_trials(), builtin_spec("J"))
    assert walk.steps == (-1, -1, 1) and walk.final_value == -1 and walk.m == 3


def test_reduction_rejects_non_monotone_indices():
    recs = [TrialRecord(2, "a", "b", "+", "+"), TrialRecord(2, "a", "b", "+", "+")]
    with pytest.raises(TrialDataError):
        reduce_trials(recs, builtin_spec("J"))


@given(trial_streams)
def test_reduction_partitions_relevant_trials(trials):
    spec = builtin_spec("Ch")
    walk = reduce_trials(trials, spec)
    relevant = [t for t in trials if t.outcome.label in spec.steps]
    assert walk.m == len(relevant)
    assert walk.final_value == sum(spec.steps[t.outcome.label] for t in relevant)
    assert sum(walk.tally.values()) == walk.m


@given(trial_streams, trial_streams)
def test_reduction_is_compatible_with_concatenation(first, second):
    spec = builtin_spec("J")
    shifted = [TrialRecord(t.index + len(first), t.setting1, t.setting2, t.result1, t.result2) for t in second]
    whole = reduce_trials(first + shifted, spec)
    assert whole.steps == reduce_trials(first, spec).steps + reduce_trials(second, spec).steps


@given(st.lists(st.integers(0, 15), max_size=100))
def test_vectorised_reduction_agrees(codes):
    spec = builtin_spec("Ch")
    trials = [TrialRecord.from_outcome(i, c) for i, c in enumerate(codes, start=1)]
    fast = reduce_outcome_codes(np.array(codes, dtype=np.int64), spec)
    assert list(fast) == [float(s) for s in reduce_trials(trials, spec).steps]


def test_reduced_walk_consistency_checks():
    w = ReducedWalk.from_steps("J", [1, -1, 1])
    assert w.is_binary and w.tally == {1: 2, -1: 1}
    assert not ReducedWalk.from_steps("Ch", [1, -2]).is_binary


def test_empirical_distribution():
    summary = empirical_distribution(example_trials())
    assert summary.n_trials == 11
    assert summary.distribution["++ab"] == Fraction(1, 4)
    assert summary.p_a == Fraction(6, 11)
