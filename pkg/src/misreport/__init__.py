"""Trial design under misreported binary outcomes."""

from .estimands import EstimandSet, bias, bias_covariance_form, estimands, reported_means, true_ate
from .optimizer import WorstCaseResult, grid_oracle, inner_subproblem, sweep, worst_case_lambda
from .population import (
    DeltaVector,
    JointClassTable,
    Margins,
    ReportingClass,
    ResponseClass,
    independence_deltas,
    margins,
    table_from_margins_and_deltas,
    validate_table,
)
from .power import (
    DesignParams,
    EffectSignIndeterminate,
    detection_probability,
    normal_cdf,
    normal_quantile,
    sample_size_fixed_delta,
    standard_sample_size,
)
from .sensitivity import GammaModel, delta_box, is_feasible, reduce

__all__ = [
    "DeltaVector",
    "DesignParams",
    "EffectSignIndeterminate",
    "EstimandSet",
    "GammaModel",
    "JointClassTable",
    "Margins",
    "ReportingClass",
    "ResponseClass",
    "WorstCaseResult",
    "bias",
    "bias_covariance_form",
    "delta_box",
    "detection_probability",
    "estimands",
    "grid_oracle",
    "independence_deltas",
    "inner_subproblem",
    "is_feasible",
    "margins",
    "normal_cdf",
    "normal_quantile",
    "reduce",
    "reported_means",
    "sample_size_fixed_delta",
    "standard_sample_size",
    "sweep",
    "table_from_margins_and_deltas",
    "true_ate",
    "validate_table",
    "worst_case_lambda",
]
