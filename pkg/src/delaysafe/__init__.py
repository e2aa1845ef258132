"""Safety-critical control under input delay and input disturbance.

Library and CLI simulator for predictor-feedback control with tunable
input-to-state-safe control barrier functions, benchmarked on a connected
automated truck braking scenario.
"""

from .core import (
    Barrier,
    Dynamics,
    KappaFn,
    NonFiniteError,
    SigmaFn,
    check_gradient,
    check_kappa,
    hdot,
    lie_derivatives,
    linear_kappa,
    vec3,
)
from .delayline import InputHistory
from .predictor import Prediction, PredictorKind, predict, rk4_step
from .safety import (
    ControlDecision,
    ControllerSpec,
    SafetyConfig,
    SynthesizedController,
    cbf_margin,
    gamma,
    h_delta,
    synthesize,
    tissf_margin,
)
from .sim import (
    CSV_COLUMNS,
    MarginViolation,
    Metrics,
    SimConfig,
    StepRecord,
    TrajectoryLog,
    effective_disturbance,
    metrics_from_log,
    run,
)
from .truck import (
    LagPlant,
    LeadProfile,
    TruckParams,
    headway_barrier,
    lag_disturbance_oracle,
    lag_step,
    longitudinal_dynamics,
    nominal_control,
    range_policy,
    speed_policy,
)

__all__ = [
    "Barrier", "ControlDecision", "ControllerSpec", "CSV_COLUMNS", "Dynamics",
    "InputHistory", "KappaFn", "LagPlant", "LeadProfile", "MarginViolation",
    "Metrics", "NonFiniteError", "Prediction", "PredictorKind", "SafetyConfig",
    "SigmaFn", "SimConfig", "StepRecord", "SynthesizedController", "TrajectoryLog",
    "TruckParams", "cbf_margin", "check_gradient", "check_kappa",
    "effective_disturbance", "gamma", "h_delta", "hdot", "headway_barrier",
    "lag_disturbance_oracle", "lag_step", "lie_derivatives", "linear_kappa",
    "longitudinal_dynamics", "metrics_from_log", "nominal_control", "predict",
    "range_policy", "rk4_step", "run", "speed_policy", "synthesize",
    "tissf_margin", "vec3",
]

__version__ = "0.1.0"
