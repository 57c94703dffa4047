"""Numerical laboratory for radially symmetric invasion fronts with a free boundary."""

__version__ = "0.1.0"

from .errors import (
    BelowThreshold,
    BracketFailure,
    FrontierSimError,
    InsufficientData,
    InvalidInitialData,
    NewtonDivergence,
    NonConvergence,
    ParseError,
    StabilityFailure,
    SweepConsistencyError,
    ValidationError,
)
from .habitat import (
    CoefficientProfile,
    Habitat,
    HabitatReport,
    TailLimits,
    classify_habitat,
    constant,
    eval_profile,
    linear_ramp,
    step,
    tabulated,
    tanh_transition,
    tail_limits,
)
from .eigen import (
    EigenResult,
    RadialGrid,
    ThresholdResult,
    compute_R0,
    find_Dstar,
    find_hstar,
    principal_eigenvalue,
    R0_front,
    solve_eigenproblem,
)
from .pde import (
    SimConfig,
    SimState,
    SteadyState,
    TimeSeries,
    front_speed_estimate,
    init_state,
    run,
    solve_steady_state,
    step as step_state,
)
from .semiwave import SemiWaveProblem, SemiWaveResult, find_k0, solve_profile
from .classify import (
    ClassifyRules,
    DichotomyResult,
    Outcome,
    SweepRow,
    VerdictStopRule,
    classify_outcome,
    find_delta0,
    sweep,
)

__all__ = [
    "__version__",
    "BelowThreshold",
    "BracketFailure",
    "FrontierSimError",
    "InsufficientData",
    "InvalidInitialData",
    "NewtonDivergence",
    "NonConvergence",
    "ParseError",
    "StabilityFailure",
    "SweepConsistencyError",
    "ValidationError",
    "CoefficientProfile",
    "Habitat",
    "HabitatReport",
    "TailLimits",
    "classify_habitat",
    "constant",
    "eval_profile",
    "linear_ramp",
    "step",
    "tabulated",
    "tanh_transition",
    "tail_limits",
    "EigenResult",
    "RadialGrid",
    "ThresholdResult",
    "compute_R0",
    "find_Dstar",
    "find_hstar",
    "principal_eigenvalue",
    "R0_front",
    "solve_eigenproblem",
    "SimConfig",
    "SimState",
    "SteadyState",
    "TimeSeries",
    "front_speed_estimate",
    "init_state",
    "run",
    "solve_steady_state",
    "step_state",
    "SemiWaveProblem",
    "SemiWaveResult",
    "find_k0",
    "solve_profile",
    "ClassifyRules",
    "DichotomyResult",
    "Outcome",
    "SweepRow",
    "VerdictStopRule",
    "classify_outcome",
    "find_delta0",
    "sweep",
]
