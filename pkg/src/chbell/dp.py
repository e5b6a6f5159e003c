"""Exact p-values for finite-step supermartingale walks by backward
induction over (steps taken, walk position).

The adversary picks, at every step and position, one of the candidate step
distributions; the value of a cell is the best achievable probability of
finishing at or above the cut-point ``L``.  Cells far enough above ``L``
win surely and cells far enough below lose surely, so each row is only
evaluated on a band around ``L`` intersected with the positions reachable
from the origin.  Runs of exact zeros (and, when it is bit-exact, runs of
ones) at the edges of a row are trimmed as well: every cell that reads only
such values reproduces them exactly, so the trimming changes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidParameterError
from .polytope import StepCandidateSet, StepDistribution

SMALLEST_NORMAL = np.finfo(np.float64).tiny


def _dominates(a: StepDistribution, b: StepDistribution) -> bool:
    """First-order stochastic dominance of ``a`` over ``b``."""
    values = sorted(set(a.values) | set(b.values))
    ca = cb = 0
    for v in values:
        ca += a.prob(v)
        cb += b.prob(v)
        if ca > cb:
            return False
    return True


def prune_dominated(dists: Sequence[StepDistribution]) -> list[int]:
    """Indices of candidates not stochastically dominated by another one.

    With nondecreasing value columns a dominated candidate can never do
    strictly better than its dominator, so dropping it leaves the optimum
    unchanged.
    """
    keep = []
    for i, d in enumerate(dists):
        dominated = any(j != i and dists[j] != d and _dominates(dists[j], d) for j in range(len(dists)))
        if not dominated:
            keep.append(i)
    return keep


@dataclass
class PolicyTable:
    """Argmax candidate index per (step, position), stored on the evaluated
    band of each step.  Outside the band every candidate ties, and the
    lowest retained index is returned."""

    starts: np.ndarray
    choices: list
    default: int
    scale: int = 1

    def choice(self, k: int, x: int) -> int:
        if x % self.scale:
            raise InvalidParameterError(f"position {x} is off the walk lattice")
        x //= self.scale
        row = self.choices[k]
        i = x - self.starts[k]
        if 0 <= i < row.size:
            return int(row[i])
        return self.default

    def choices_for(self, k: int, xs: np.ndarray) -> np.ndarray:
        """Vectorised ``choice`` for many positions at step ``k``."""
        row = self.choices[k]
        padded = np.empty(row.size + 2, dtype=np.int64)
        padded[0] = padded[-1] = self.default
        padded[1:-1] = row
        i = xs // self.scale - (self.starts[k] - 1)
        np.clip(i, 0, row.size + 1, out=i)
        return padded[i]

    @property
    def n_cells(self) -> int:
        return int(sum(r.size for r in self.choices))


@dataclass
class DpResult:
    p_value: float
    log_p_value: float
    L: int
    m: int
    candidates: tuple
    candidate_indices: tuple
    band_bounds: np.ndarray
    policy: PolicyTable | None = None
    exact_value: Fraction | None = None
    rows: list | None = field(default=None, repr=False)
    scale: int = 1
    lattice_scale: int = 1

    def value_at(self, k: int, x: int):
        """Success probability with ``k`` steps taken at position ``x``;
        needs ``record_values=True``."""
        if self.rows is None:
            raise InvalidParameterError("row values were not recorded")
        if x % self.scale:
            raise InvalidParameterError(f"position {x} is off the walk lattice")
        lo, arr = self.rows[k]
        x //= self.scale
        if x < lo:
            return 0
        if x >= lo + len(arr):
            return 1
        return arr[x - lo]


def _integer_steps(dists: Sequence[StepDistribution], scale: int) -> list[list[int]]:
    out = []
    for d in dists:
        row = []
        for v in d.values:
            s = Fraction(v) * scale
            if s.denominator != 1:
                raise InvalidParameterError(f"step {v} is not on the lattice of scale {scale}")
            row.append(int(s))
        out.append(row)
    return out


def exact_pvalue_dp(
    L: int,
    m: int,
    candidates: Union[StepCandidateSet, Iterable[StepDistribution]],
    want_policy: bool = False,
    *,
    exact: bool = False,
    prune: bool = True,
    lattice_scale: int = 1,
    record_values: bool = False,
    check_monotone: bool = True,
    flush_subnormals: bool = True,
) -> DpResult:
    """Supremum over adaptive local strategies of P(walk after ``m`` steps
    >= ``L``), the walk starting at 0.

    ``L`` is in lattice units: a step value ``v`` moves the walk by
    ``v * lattice_scale``.  With ``exact=True`` the sweep runs in
    ``Fraction`` arithmetic (small ``m`` only).  Ties between candidates go
    to the lowest index among those kept after dominance pruning.
    ``flush_subnormals`` zeroes values below the smallest normal double,
    an absolute error under ``m * 2.3e-308``.
    """
    if isinstance(candidates, StepCandidateSet):
        dists = list(candidates.distributions)
    else:
        dists = list(candidates)
    if not dists:
        raise InvalidParameterError("empty candidate set")
    if m < 1:
        raise InvalidParameterError("m must be positive")
    L = int(L)
    keep = prune_dominated(dists) if prune else list(range(len(dists)))
    kept = [dists[i] for i in keep]
    steps = _integer_steps(kept, lattice_scale)
    gcd = 0
    for row in steps:
        for s in row:
            gcd = math.gcd(gcd, abs(s))
    steps = [[s // gcd for s in row] for row in steps]
    # final >= L  <=>  final/g >= ceil(L/g) on the reduced lattice
    Lr = -(-L // gcd)
    probs = [list(d.probabilities) for d in kept]
    if exact:
        probs = [[Fraction(p) for p in row] for row in probs]
        zero, one, dtype = Fraction(0), Fraction(1), object
    else:
        probs = [[float(p) for p in row] for row in probs]
        zero, one, dtype = 0.0, 1.0, np.float64
    up = max(0, max(max(r) for r in steps))
    down = max(0, -min(min(r) for r in steps))
    # runs of ones may be trimmed only if every candidate maps all-ones to 1
    ones_exact = exact or all(_float_accumulate_ones(p) for p in probs)

    n_cand = len(kept)
    band = np.zeros((m + 1, 2), dtype=np.int64)
    starts = np.zeros(m, dtype=np.int64)
    choices: list = [None] * m
    rows: list | None = [None] * (m + 1) if record_values else None

    # row m: indicator of x >= L, stored as an empty array with lo = L
    lo = Lr
    arr = np.empty(0, dtype=dtype)
    band[m] = (Lr, Lr - 1)
    if rows is not None:
        rows[m] = (lo, arr)

    for k in range(m - 1, -1, -1):
        r = m - k
        a = max(Lr - r * up, -k * down)
        b = min(Lr + r * down - 1, k * up)
        hi = lo + arr.size - 1
        a = max(a, lo - up)
        if ones_exact:
            b = min(b, hi + down)
        if a > b:
            # reachable cells below a are 0 and above b are 1; a cell in
            # both ranges cannot be reachable
            band[k] = (a, a - 1)
            lo, arr = a, np.empty(0, dtype=dtype)
            starts[k] = a
            choices[k] = np.empty(0, dtype=np.int8)
            if rows is not None:
                rows[k] = (lo, arr)
            continue
        n = b - a + 1
        seg_lo = a - down
        seg = np.empty(n + up + down, dtype=dtype)
        ys = np.arange(seg_lo, seg_lo + seg.size)
        seg[ys < lo] = zero
        seg[ys > hi] = one
        inside = (ys >= lo) & (ys <= hi)
        if inside.any():
            seg[inside] = arr[ys[inside] - lo]
        vals = []
        for srow, prow in zip(steps, probs):
            acc = None
            for s, p in zip(srow, prow):
                off = s + down
                term = p * seg[off:off + n]
                acc = term if acc is None else acc + term
            vals.append(acc)
        if want_policy and n_cand > 1:
            stacked = np.vstack(vals)
            idx = np.argmax(stacked, axis=0)
            new = stacked[idx, np.arange(n)]
            choices[k] = idx.astype(np.int8)
        else:
            new = vals[0]
            for v in vals[1:]:
                new = np.maximum(new, v)
            choices[k] = np.zeros(n, dtype=np.int8) if want_policy else None
        starts[k] = a
        band[k] = (a, b)
        if not exact and flush_subnormals:
            new[new < SMALLEST_NORMAL] = 0.0
        if check_monotone and n > 1 and not np.all(new[1:] >= new[:-1]):
            raise AssertionError(f"value column not monotone at step {k}")
        # trim exact zeros from the bottom and exact ones from the top
        nz = np.flatnonzero(new != zero)
        if nz.size == 0:
            lo, arr = b + 1, np.empty(0, dtype=dtype)
        else:
            i0 = int(nz[0])
            i1 = n - 1
            if ones_exact:
                below = np.flatnonzero(new != one)
                i1 = int(below[-1]) if below.size else i0 - 1
            lo, arr = a + i0, new[i0:i1 + 1].copy()
        if rows is not None:
            rows[k] = (lo, arr)

    x0 = 0
    if x0 < lo:
        value = zero
    elif x0 >= lo + arr.size:
        value = one
    else:
        value = arr[x0 - lo]
    p = float(value)
    policy = None
    if want_policy:
        for k in range(m):
            starts[k], choices[k] = _strip_default(starts[k], choices[k], 0)
        policy = PolicyTable(starts, choices, 0, gcd)
    return DpResult(
        p_value=p,
        log_p_value=math.log(value) if value > 0 else -math.inf,
        L=L,
        m=m,
        candidates=tuple(kept),
        candidate_indices=tuple(keep),
        band_bounds=band * gcd,
        policy=policy,
        exact_value=value if exact else None,
        rows=rows,
        scale=gcd,
        lattice_scale=lattice_scale,
    )


def _float_accumulate_ones(probs: Sequence[float]) -> bool:
    acc = None
    for p in probs:
        term = p * 1.0
        acc = term if acc is None else acc + term
    return acc == 1.0


def _strip_default(start: int, row: np.ndarray | None, default: int):
    """Drop leading and trailing entries equal to the default choice."""
    if row is None or row.size == 0:
        return start, np.empty(0, dtype=np.int8)
    nd = np.flatnonzero(row != default)
    if nd.size == 0:
        return start, np.empty(0, dtype=np.int8)
    return start + int(nd[0]), row[nd[0]:nd[-1] + 1].copy()
