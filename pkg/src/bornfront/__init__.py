"""Critical speeds and front profiles for reaction-diffusion with a saturating flux.

The model is (v'/sqrt(a^2 - b^2 v'^2))' - c v' + f(v) = 0 with v(-inf) = 0, v(+inf) = 1.
"""

from .errors import (BornFrontError, BracketFailure, DomainError, DomainMismatch,
                     HypothesisHViolated, InsufficientData, NoPrediction, NotAdmissible,
                     NotClassifiable, QuadratureFailure, StiffnessFailure)
from .reaction import (CATALOG, ReactionCalculus, ReactionSpec, classify, combustion,
                       cubic_bistable, eval_F, eval_f, fisher, from_catalog, huxley, nagylaki,
                       piecewise, polynomial, sup_ratio)
from .reduction import (DEFAULT_CONTROLS, Controls, ModelParams, R, ReductionSolution,
                        E_inverse, E_transform, integrate_backward, integrate_forward,
                        y_max_closed_form)
from .speed import (LimitSpeed, SpeedBounds, SpeedResult, compute_bounds, compute_speed,
                    limit_speed_prediction, matching_gap)
from .profile import (FrontProfile, LimitProfile, Regime, classify_regime, distance_to_limit,
                      front_profile, glued, linear_critical, make_limit_profile,
                      profile_residual, reconstruct_profile)
from .sweep import FitResult, SweepPlan, SweepReport, coupled_params, fit_order, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BornFrontError", "BracketFailure", "DomainError", "DomainMismatch", "HypothesisHViolated",
    "InsufficientData", "NoPrediction", "NotAdmissible", "NotClassifiable",
    "QuadratureFailure", "StiffnessFailure",
    "CATALOG", "ReactionCalculus", "ReactionSpec", "classify", "combustion", "cubic_bistable",
    "eval_F", "eval_f", "fisher", "from_catalog", "huxley", "nagylaki", "piecewise",
    "polynomial", "sup_ratio",
    "DEFAULT_CONTROLS", "Controls", "ModelParams", "R", "ReductionSolution", "E_inverse",
    "E_transform", "integrate_backward", "integrate_forward", "y_max_closed_form",
    "LimitSpeed", "SpeedBounds", "SpeedResult", "compute_bounds", "compute_speed",
    "limit_speed_prediction", "matching_gap",
    "FrontProfile", "LimitProfile", "Regime", "classify_regime", "distance_to_limit",
    "front_profile", "glued", "linear_critical", "make_limit_profile", "profile_residual",
    "reconstruct_profile",
    "FitResult", "SweepPlan", "SweepReport", "coupled_params", "fit_order", "run_sweep",
]
