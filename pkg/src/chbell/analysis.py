"""One entry point that turns a reduced walk into a p-value report."""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

from . import __version__
from .dp import exact_pvalue_dp
from .errors import DomainError, IncompatibleMethodError, InvalidParameterError
from .polytope import StepCandidateSet, StepDistribution, step_candidates
from .pvalues import epsilon_model, log_binomial_pvalue, log_mcdiarmid_bound, normal_pvalue
from .trials import BUILTIN_SPECS, ReducedWalk, StepSpec, builtin_spec

METHODS = ("binomial", "normal", "mcdiarmid", "exact_dp")
CH_STEPS = {Fraction(1), Fraction(-1), Fraction(-2)}


def normalize_method(method: str) -> str:
    name = method.strip().lower().replace("-", "_")
    if name not in METHODS:
        raise InvalidParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return name


def fraction_text(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class SettingMarginals:
    p_a: float
    p_b: float
    n_trials: int
    warnings: list = field(default_factory=list)


@dataclass
class AnalysisReport:
    spec: str
    method: str
    statistic: float
    statistic_exact: str
    m: int
    p_value: float
    log_p_value: Optional[float]
    is_bound: bool
    kind: str
    epsilon: float
    p0: Optional[float] = None
    L: Optional[int] = None
    dataset: Optional[str] = None
    marginals: Optional[SettingMarginals] = None
    parameters: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    engine_version: str = __version__
    timestamp: str = ""
    report_type: str = "analysis"

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        if not out["timestamp"]:
            out["timestamp"] = utc_timestamp()
        return out


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def resolve_spec(name: str, spec: StepSpec | None = None) -> StepSpec:
    if spec is not None:
        if spec.name != name:
            raise IncompatibleMethodError(f"walk was reduced with {name}, not {spec.name}")
        return spec
    if name in BUILTIN_SPECS:
        return builtin_spec(name)
    raise InvalidParameterError(f"no step specification supplied for walk {name!r}")


def _log_or_none(logp: float) -> Optional[float]:
    return logp if math.isfinite(logp) else None


def analyze(
    walk: ReducedWalk,
    method: str,
    *,
    spec: StepSpec | None = None,
    **options,
) -> AnalysisReport:
    """p-value (or bound) for the final value of ``walk``; see
    ``analyze_statistic`` for the methods and options.

    >>> w = ReducedWalk.from_steps("J", [-1, -1, 1])
    >>> analyze(w, "binomial").p_value
    0.875
    """
    return analyze_statistic(walk.final_value, walk.m, resolve_spec(walk.spec_name, spec), method, **options)


def analyze_statistic(
    statistic,
    m: int,
    spec: StepSpec,
    method: str,
    *,
    epsilon: float = 0.0,
    candidates: StepCandidateSet | Sequence[StepDistribution] | None = None,
    lenient_parity: bool = False,
    dataset: str | None = None,
    marginals: SettingMarginals | None = None,
) -> AnalysisReport:
    """p-value (or bound) for a statistic of ``spec`` observed after ``m``
    relevant trials.

    ``binomial`` and ``normal`` need a +/-1 statistic and honour ``epsilon``
    by raising the null success probability; ``mcdiarmid`` needs steps in
    {+1, -1, -2}; ``exact_dp`` maximises over adaptive local strategies
    using ``candidates`` (by default the step distributions of local
    strategies at the setting probabilities ``spec`` is designed for).
    """
    method = normalize_method(method)
    if m < 0:
        raise InvalidParameterError("m must be nonnegative")
    eps = epsilon_model(epsilon)
    stat = Fraction(statistic)
    values = set(spec.step_values)
    common = dict(
        spec=spec.name, method=method, statistic=float(stat), statistic_exact=fraction_text(stat),
        m=m, epsilon=float(epsilon), dataset=dataset, marginals=marginals,
        parameters={"lenient_parity": lenient_parity},
    )
    notes: list = []

    if method in ("binomial", "normal"):
        if not values <= {1, -1}:
            steps = ", ".join(fraction_text(v) for v in sorted(values))
            raise IncompatibleMethodError(f"{method} needs a +/-1 statistic; {spec.name} has steps {steps}")
        if stat.denominator != 1:
            raise InvalidParameterError("a +/-1 walk has an integer final value")
        p0 = eps.adjusted_p0
        if m == 0:
            return AnalysisReport(p_value=1.0, log_p_value=0.0, is_bound=False, kind="exact", p0=p0,
                                  notes=["empty walk"], **common)
        J = int(stat)
        if method == "binomial":
            logp = log_binomial_pvalue(J, m, p0, lenient=lenient_parity)
            p = math.exp(logp)
            kind = "exact" if epsilon == 0 else "upper_bound"
        else:
            p, logp = normal_pvalue(J, m, p0)
            kind = "approximate"
        if epsilon:
            notes.append(f"null success probability raised to {p0:.6f}")
        return AnalysisReport(p_value=p, log_p_value=_log_or_none(logp), is_bound=epsilon != 0, kind=kind,
                              p0=p0, notes=notes, **common)

    if method == "mcdiarmid":
        if epsilon:
            raise IncompatibleMethodError("the McDiarmid bound has no setting-bias correction")
        if not values <= CH_STEPS:
            raise IncompatibleMethodError("the McDiarmid bound applies to steps in {+1, -1, -2}")
        if stat <= 0:
            return AnalysisReport(p_value=1.0, log_p_value=0.0, is_bound=True, kind="upper_bound",
                                  notes=["statistic not positive; trivial bound"], **common)
        if stat.denominator != 1:
            raise DomainError("the McDiarmid bound needs an integer statistic")
        logp = log_mcdiarmid_bound(int(stat), m)
        return AnalysisReport(p_value=math.exp(logp), log_p_value=logp, is_bound=True, kind="upper_bound",
                              L=int(stat), **common)

    if epsilon:
        raise IncompatibleMethodError("exact_dp assumes known setting probabilities; epsilon is not supported")
    cands = candidates if candidates is not None else step_candidates(spec)
    scaled = stat * spec.lattice_scale
    if scaled.denominator != 1:
        raise InvalidParameterError("statistic is off the walk lattice")
    if m == 0:
        hit = scaled <= 0
        return AnalysisReport(p_value=1.0 if hit else 0.0, log_p_value=0.0 if hit else None,
                              is_bound=False, kind="exact", L=int(scaled), notes=["empty walk"], **common)
    res = exact_pvalue_dp(int(scaled), m, cands, lattice_scale=spec.lattice_scale)
    if res.p_value == 0:
        notes.append("value below the smallest normal double")
    return AnalysisReport(p_value=res.p_value, log_p_value=_log_or_none(res.log_p_value),
                          is_bound=False, kind="exact", L=int(scaled), notes=notes, **common)
