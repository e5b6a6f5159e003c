from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from chbell.errors import DegenerateStrategyError, InvalidParameterError
from chbell.polytope import (
    CH_EVEN,
    CH_HEAVY,
    EBERHARD_INEQUALITIES,
    NO_SIGNALING,
    STRATEGIES,
    StepDistribution,
    check_constraints,
    fine_construct,
    induced_non00_distribution,
    random_local_mixture,
    relabel_coefficients,
    spec_inequality_value,
    step_candidates,
    strategy,
    strategy_distribution,
)
from chbell.reference import empirical_table, EMPIRICAL_TABLES
from chbell.trials import LABEL_INDEX, NULL_INDICES, builtin_spec, generalized_j_spec

weights15 = st.lists(st.integers(0, 20), min_size=15, max_size=15).filter(any).map(
    lambda ws: [Fraction(w, sum(ws)) for w in ws]
)


def test_strategy_table():
    assert len(STRATEGIES) == 16
    assert str(strategy(1)) == "v1=(+,+,+,+)"
    assert str(strategy(9)) == "v9=(+,0,0,+)"
    assert str(strategy(16)) == "v16=(0,0,0,0)"
    rows = {tuple(v.assignment[s] for s in ("a", "a'", "b", "b'")) for v in STRATEGIES}
    assert len(rows) == 16
    with pytest.raises(DegenerateStrategyError):
        induced_non00_distribution(16)
    with pytest.raises(InvalidParameterError):
        strategy(17)


def test_strategy_distribution_settings():
    d = strategy_distribution(2, Fraction(1, 3), Fraction(1, 4))
    # v2 = (0,+,+,+): setting a gives 0, a' gives +
    assert d["0+ab"] == Fraction(1, 12)
    assert d["++a'b'"] == Fraction(2, 3) * Fraction(3, 4)
    assert sum(d.weights) == 1


@pytest.mark.parametrize("k", range(1, 16))
def test_induced_distributions_are_local(k):
    rep = check_constraints(induced_non00_distribution(k))
    assert rep.normalization_ok and rep.nonnegativity_ok
    assert all(r == 0 for r in rep.equality_residuals)
    assert all(s <= 0 for s in rep.inequality_slacks)
    assert rep.is_local_boundary_consistent


@given(weights15)
def test_random_mixtures_satisfy_constraints_exactly(ws):
    rep = check_constraints(random_local_mixture(ws))
    assert rep.tolerance == 0
    assert all(r == 0 for r in rep.equality_residuals)
    assert all(s <= 0 for s in rep.inequality_slacks)


@given(weights15)
def test_fine_construction_round_trip(ws):
    fc = fine_construct(ws)
    assert fc.distribution.conditioned_non00() == random_local_mixture(ws)
    assert fc.null_mass == sum(fc.distribution.weights[i] for i in NULL_INDICES)
    assert fc.s * (3 * fc.x + 4 * fc.y + 6 * fc.z) == 3


def test_mixture_weight_validation():
    with pytest.raises(InvalidParameterError):
        random_local_mixture([Fraction(1, 14)] * 14)
    with pytest.raises(InvalidParameterError):
        random_local_mixture([Fraction(1, 15)] * 15 + [Fraction(1, 2)])
    assert random_local_mixture([Fraction(1, 15)] * 15 + [0]).is_exact


def test_eberhard_inequalities_are_relabelings():
    e1 = EBERHARD_INEQUALITIES[0]
    images = {relabel_coefficients(e1, sa, sb) for sa in (False, True) for sb in (False, True)}
    assert images == set(EBERHARD_INEQUALITIES)


def test_no_signaling_rows_are_closed_under_relabeling():
    rows = set(NO_SIGNALING) | {tuple(-c for c in r) for r in NO_SIGNALING}
    for r in NO_SIGNALING:
        assert relabel_coefficients(r, True, False) in rows
        assert relabel_coefficients(r, False, True) in rows


def test_giustina_table_arithmetic():
    raw = {k: Fraction(v) for k, v in EMPIRICAL_TABLES["giustina"].items()}
    assert sum(raw.values()) == Fraction(999, 1000)
    rep = check_constraints(raw)
    assert not rep.normalization_ok
    assert rep.equality_residuals == (0, Fraction(1, 1000), 0, Fraction(1, 1000))
    assert rep.inequality_slacks[0] == Fraction(7, 1000)
    assert not rep.is_local_boundary_consistent
    assert spec_inequality_value(builtin_spec("J_E2"), raw) == Fraction(7, 1000)
    assert spec_inequality_value(builtin_spec("J_E3"), raw) == Fraction(7, 1000)
    norm = empirical_table("giustina")
    assert spec_inequality_value(builtin_spec("J"), norm) == Fraction(7, 999)


def test_hypothetical_table_favours_j_e2():
    d = empirical_table("hypothetical")
    assert check_constraints(d).equality_residuals == (0, 0, 0, 0)
    assert spec_inequality_value(builtin_spec("J"), d) == spec_inequality_value(builtin_spec("J_E2"), d) == Fraction(1, 100)
    relevant = {n: sum(d[lab] for lab in builtin_spec(n).steps) for n in ("J", "J_E2")}
    # same drift, far fewer relevant trials: 2100 vs 140 per 10,000
    assert relevant == {"J": Fraction(21, 100), "J_E2": Fraction(14, 1000)}


def test_float_mode_uses_tolerance():
    d = random_local_mixture([1 / 15] * 15)
    rep = check_constraints(d)
    assert rep.tolerance > 0 and rep.is_local_boundary_consistent


def test_ch_candidates():
    cands = step_candidates(builtin_spec("Ch"))
    by_dist = {c.distribution: c.sources for c in cands}
    assert by_dist[CH_HEAVY] == (1,)
    assert by_dist[CH_EVEN] == (3, 5, 8, 9)
    assert by_dist[StepDistribution(((1, Fraction(1, 3)), (-1, Fraction(1, 3)), (-2, Fraction(1, 3))))] == (2, 4)
    assert by_dist[StepDistribution(((-1, 1),))] == (6, 7, 10, 13, 15)
    assert by_dist[StepDistribution(((-2, 1),))] == (11,)
    assert all(c.constraint_value <= 0 for c in cands)
    assert {c.distribution for c in cands if c.constraint_value == 0} == {CH_HEAVY, CH_EVEN}


def test_j_candidates():
    cands = step_candidates(builtin_spec("J"))
    assert len(cands) == 3
    assert max(c.constraint_value for c in cands) == 0


@pytest.mark.parametrize("name, steps", [("Ch", oracles.CH_STEPS), ("J", oracles.J_STEPS)])
def test_candidates_match_independent_enumeration(name, steps):
    ours = {d for d in step_candidates(builtin_spec(name)).distributions}
    theirs = {StepDistribution(tuple(g.items())) for g in oracles.local_step_generators(steps)}
    assert ours == theirs


@pytest.mark.parametrize("pa, pb", [(Fraction(1, 3), Fraction(1, 2)), (Fraction(3, 5), Fraction(2, 7))])
def test_generalized_j_is_a_supermartingale_at_its_settings(pa, pb):
    cands = step_candidates(generalized_j_spec(pa, pb), pa, pb)
    assert max(c.constraint_value for c in cands) == 0


def test_positive_drift_is_rejected():
    with pytest.raises(InvalidParameterError):
        step_candidates(builtin_spec("J"), Fraction(3, 5), Fraction(3, 5))
    cands = step_candidates(builtin_spec("J"), Fraction(3, 5), Fraction(3, 5), allow_positive_drift=True)
    assert max(c.constraint_value for c in cands) > 0


def test_constraint_points_are_hull_members():
    rng = np.random.default_rng(11)
    idx = [LABEL_INDEX[lab] for lab in oracles.NON00_LABELS]
    eq = np.array([[row[i] for i in idx] for row in NO_SIGNALING], dtype=float)
    ineq = np.array([[row[i] for i in idx] for row in EBERHARD_INEQUALITIES], dtype=float)
    verts = oracles.constraint_polytope_vertices(eq, ineq, 10, rng)
    hull = oracles.induced_points()
    for _ in range(10):
        lam = rng.dirichlet(np.ones(len(verts)))
        assert oracles.in_convex_hull(lam @ np.array(verts), hull)
