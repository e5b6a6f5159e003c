"""Statistical analysis of Clauser-Horne Bell tests under the memory
loophole: trial reduction, the local polytope, closed-form and exact
backward-induction p-values, and Monte Carlo cross-checks."""

__version__ = "0.1.0"

from .errors import (
    ChBellError,
    DomainError,
    IncompatibleMethodError,
    InvalidParameterError,
    TrialDataError,
)
from .trials import (
    OutcomeDistribution,
    ReducedWalk,
    StepSpec,
    TrialRecord,
    builtin_spec,
    generalized_j_spec,
    reduce_trials,
)
from .polytope import check_constraints, fine_construct, step_candidates, strategy_distribution
from .pvalues import binomial_pvalue, epsilon_model, mcdiarmid_bound, normal_sigma
from .dp import DpResult, exact_pvalue_dp
from .analysis import AnalysisReport, analyze

__all__ = [
    "AnalysisReport", "ChBellError", "DomainError", "DpResult", "IncompatibleMethodError",
    "InvalidParameterError", "OutcomeDistribution", "ReducedWalk", "StepSpec", "TrialDataError",
    "TrialRecord", "analyze", "binomial_pvalue", "builtin_spec", "check_constraints",
    "epsilon_model", "exact_pvalue_dp", "fine_construct", "generalized_j_spec", "mcdiarmid_bound",
    "normal_sigma", "reduce_trials", "step_candidates", "strategy_distribution",
]
