"""Closed-form p-values and bounds: exact binomial tails for binary
statistics, the normal approximation, the McDiarmid bound for the Ch walk,
and the correction for slightly biased setting probabilities.

Every tail comes with a natural-log companion so that values below the
float range are still reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import DomainError, InvalidParameterError

# below this the linear survival function is no longer trustworthy
_SF_FLOOR = 1e-280


def success_count(J_obs: int, m: int, lenient: bool = False) -> int:
    """Number of +1 steps implied by a final value ``J_obs`` after ``m``
    steps of a +/-1 walk.

    A walk cannot end at a value of the other parity; such pairs are
    rejected unless ``lenient``, in which case the count is rounded up.
    """
    if m < 0 or abs(J_obs) > m:
        raise InvalidParameterError(f"|J|={abs(J_obs)} exceeds m={m}")
    if (m + J_obs) % 2 and not lenient:
        raise InvalidParameterError(
            f"J={J_obs} and m={m} have different parity; no +/-1 walk ends there"
        )
    return -(-(m + J_obs) // 2)


def log_binomial_pvalue(J_obs: int, m: int, p0: float = 0.5, lenient: bool = False) -> float:
    """Natural log of P(X >= k), X ~ Binomial(m, p0), k = #(+1) steps."""
    if not 0 < p0 < 1:
        raise DomainError(f"p0={p0} must lie in (0, 1)")
    k = success_count(J_obs, m, lenient)
    if k <= 0:
        return 0.0
    sf = stats.binom.sf(k - 1, m, p0)
    if sf > _SF_FLOOR:
        return math.log(sf)
    # deep tail: sum the pmf terms in log space until they stop mattering
    hi = min(m, k + 200_000)
    terms = stats.binom.logpmf(np.arange(k, hi + 1), m, p0)
    return float(logsumexp(terms))


def binomial_pvalue(J_obs: int, m: int, p0: float = 0.5, lenient: bool = False) -> float:
    """Exact one-sided binomial p-value for a +/-1 walk ending at ``J_obs``.

    >>> binomial_pvalue(2, 2)
    0.25
    """
    return math.exp(log_binomial_pvalue(J_obs, m, p0, lenient))


def normal_sigma(J_obs: float, m: int, p0: float = 0.5) -> float:
    """Distance of ``J_obs`` from its null mean in null standard deviations."""
    if m < 1:
        raise InvalidParameterError("m must be at least 1")
    return (J_obs - m * (2 * p0 - 1)) / (2 * math.sqrt(m * p0 * (1 - p0)))


def normal_pvalue(J_obs: float, m: int, p0: float = 0.5) -> tuple[float, float]:
    """(p, log p) for the normal approximation of the binomial tail."""
    z = normal_sigma(J_obs, m, p0)
    return float(stats.norm.sf(z)), float(stats.norm.logsf(z))


def log_mcdiarmid_bound(L: int, m: int) -> float:
    if m < 1:
        raise DomainError("m must be positive")
    t = L / m
    if not 0 < t < 1:
        raise DomainError(f"t = L/m = {t} outside (0, 1)")
    per_step = (2 + t) / 3 * math.log(2 / (2 + t)) - (1 - t) / 3 * math.log(1 - t)
    return m * per_step


def mcdiarmid_bound(L: int, m: int) -> float:
    """Upper bound on P(Ch >= L) after ``m`` steps of a supermartingale with
    steps in {+1, -1, -2}."""
    return math.exp(log_mcdiarmid_bound(L, m))


@dataclass(frozen=True)
class EpsilonModel:
    epsilon: float
    mean_bound: float
    adjusted_p0: float


def epsilon_model(epsilon: float) -> EpsilonModel:
    """Worst-case drift of J when each setting probability may be off 1/2 by
    up to ``epsilon``."""
    if not 0 <= epsilon < 0.5:
        raise DomainError(f"epsilon={epsilon} outside [0, 1/2)")
    denom = 1 + 4 * epsilon * epsilon
    return EpsilonModel(epsilon, 4 * epsilon / denom, 0.5 + 2 * epsilon / denom)
