"""Independent reference computations used only by the tests.

Nothing here imports the package's strategy tables, candidate sets or DP;
each oracle rebuilds what it needs from first principles.
"""

from __future__ import annotations

import functools
import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

SETTING_PAIRS = (("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'"))

CH_STEPS = {
    "++ab'": 1, "++a'b": 1,
    "+0ab": -1, "0+ab": -1, "+0ab'": -1, "0+a'b": -1,
    "++a'b'": -2,
}
J_STEPS = {"++ab": 1, "+0ab'": -1, "0+a'b": -1, "++a'b'": -1}

NON00_LABELS = tuple(
    r1 + r2 + s1 + s2
    for s1, s2 in SETTING_PAIRS
    for r1, r2 in (("+", "+"), ("+", "0"), ("0", "+"))
)


def all_assignments():
    """Every map (a, a', b, b') -> {+, 0}."""
    for row in itertools.product("+0", repeat=4):
        yield dict(zip(("a", "a'", "b", "b'"), row))


def local_step_generators(steps: dict) -> list[dict]:
    """Step distributions of each deterministic assignment under uniform
    settings, conditioned on a relevant outcome.  Their convex hull is the
    set of step distributions any local source can produce on one trial."""
    gens = []
    for asg in all_assignments():
        mass: dict = {}
        for s1, s2 in SETTING_PAIRS:
            label = asg[s1] + asg[s2] + s1 + s2
            if label in steps:
                mass[steps[label]] = mass.get(steps[label], 0) + Fraction(1, 4)
        total = sum(mass.values())
        if total:
            d = {v: w / total for v, w in mass.items()}
            if d not in gens:
                gens.append(d)
    return gens


def game_tree_value(gens: list[dict], m: int, Ls) -> list[Fraction]:
    """Best adaptive success probability P(sum of m steps >= L) for each L,
    by exhaustive recursion over the full history tree (a node per
    distinct history; histories sharing a position are not merged)."""
    Ls = list(Ls)
    den = math.lcm(*(p.denominator for g in gens for p in g.values()))
    igens = [[(v, int(p * den)) for v, p in g.items()] for g in gens]

    @functools.lru_cache(maxsize=None)
    def rec(history: tuple) -> list[int]:
        if len(history) == m:
            total = sum(history)
            return [1 if total >= L else 0 for L in Ls]
        best = None
        for g in igens:
            acc = [0] * len(Ls)
            for v, w in g:
                sub = rec(history + (v,))
                acc = [a + w * s for a, s in zip(acc, sub)]
            best = acc if best is None else [max(x, y) for x, y in zip(best, acc)]
        return best

    scale = den ** m
    return [Fraction(v, scale) for v in rec(())]


def binomial_tail(k: int, m: int, p=Fraction(1, 2)) -> Fraction:
    """P(X >= k), X ~ Binomial(m, p), as an exact rational."""
    p = Fraction(p)
    return sum((math.comb(m, i) * p**i * (1 - p) ** (m - i) for i in range(max(k, 0), m + 1)), Fraction(0))


def induced_points() -> np.ndarray:
    """The non-00 distributions of the 15 assignments with non-00 support,
    as rows over NON00_LABELS."""
    rows = []
    for asg in all_assignments():
        w = {}
        for s1, s2 in SETTING_PAIRS:
            label = asg[s1] + asg[s2] + s1 + s2
            if label in NON00_LABELS:
                w[label] = w.get(label, 0) + 0.25
        total = sum(w.values())
        if total:
            rows.append([w.get(lab, 0.0) / total for lab in NON00_LABELS])
    return np.array(rows)


def in_convex_hull(point: np.ndarray, vertices: np.ndarray, tol: float = 1e-9) -> bool:
    """Feasibility of point = lambda @ vertices, lambda >= 0, sum lambda = 1."""
    n = vertices.shape[0]
    A_eq = np.vstack([vertices.T, np.ones(n)])
    b_eq = np.append(point, 1.0)
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return False
    return bool(np.max(np.abs(A_eq @ res.x - b_eq)) < tol)


def constraint_polytope_vertices(eq_rows: np.ndarray, ineq_rows: np.ndarray, n_points: int, rng) -> list[np.ndarray]:
    """Vertices of {w >= 0, sum w = 1, eq_rows @ w = 0, ineq_rows @ w <= 0}
    found by optimising random linear objectives."""
    k = eq_rows.shape[1]
    A_eq = np.vstack([eq_rows, np.ones(k)])
    b_eq = np.append(np.zeros(eq_rows.shape[0]), 1.0)
    pts = []
    while len(pts) < n_points:
        c = rng.normal(size=k)
        res = linprog(c, A_ub=ineq_rows, b_ub=np.zeros(ineq_rows.shape[0]), A_eq=A_eq, b_eq=b_eq,
                      bounds=[(0, None)] * k, method="highs")
        if res.status == 0:
            pts.append(res.x)
    return pts
