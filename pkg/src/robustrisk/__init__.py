"""Divergence-robust risk measures: duals, finiteness checks, elicitation, experiments."""

__version__ = "0.1.0"

from .divergences import (  # noqa: E402
    Divergence,
    construct_from_tail,
    divergence_value,
    eval_conjugate,
    eval_conjugate_deriv,
    eval_phi,
    get_divergence,
    make_tailored,
    perspective_conjugate,
)
from .elicitation import ElicitationResult, ce_recover, elicit_composite  # noqa: E402
from .finiteness import (  # noqa: E402
    FinitenessVerdict,
    classify,
    moment_content_check,
    numeric_probe,
    risk_factor_bound_check,
)
from .models import NominalModel, SampleSet, get_model, importance_sample, quantile, sample  # noqa: E402
from .risk import RiskSpec, exact_oce, get_risk, nominal_oce, nominal_shortfall  # noqa: E402
from .solver import (  # noqa: E402
    DualSolution,
    RobustProblem,
    SolverOptions,
    brute_force_primal,
    compactness_bounds,
    dual_objective,
    solve,
    worst_case_density,
)
