"""Monte Carlo laboratory for systems driven by independent symmetric
stable noises with distinct indices, plus the quadrature and statistics
used to test their scaling behaviour."""

__version__ = "0.1.0"

from .coefficients import CoefficientField, FIELD_PRESETS, build_field
from .drivers import (
    JumpDecomposition,
    JumpLayerPlan,
    StableIndexSet,
    decompose_jumps,
    levy_constant,
    path_stream,
    sample_stable_increment,
    tail_mass,
    truncated_variance_rate,
)
from .engine import (
    ExitProbe,
    ExitRecord,
    FinalStateProbe,
    HitProbe,
    JumpMark,
    SimulationConfig,
    Trajectory,
    count_transitions,
    first_exit,
    first_hit,
    resolve_threshold,
    run_ensemble,
    simulate_path,
)
from .errors import (
    ConfigurationError,
    EstimationError,
    InsufficientResolution,
    QuadratureError,
    SimulationError,
    StableLabError,
)
from .estimators import (
    ConstantPayoff,
    EstimateReport,
    HolderFit,
    IndicatorPayoff,
    RampPayoff,
    SlopeFit,
    estimate_big_jump_exit,
    estimate_exit_time,
    estimate_hitting,
    estimate_targeted_jump,
    estimate_tube_probability,
    fit_holder_exponent,
    harmonic_evaluate,
    oscillation_decay,
)
from .geometry import AnisotropicBox, AxisAlignedSet, aniso_metric
from .operator import (
    Affine,
    Constant,
    CosineRidge,
    DynkinReport,
    LevySystemReport,
    LinearCombination,
    QuadratureConfig,
    QuadratureResult,
    dynkin_check,
    generator_apply,
    jump_intensity,
    jump_intensity_batch,
    levy_system_check,
    symbol_value,
)

__all__ = [
    "__version__",
    "AnisotropicBox",
    "AxisAlignedSet",
    "Affine",
    "CoefficientField",
    "Constant",
    "ConstantPayoff",
    "ConfigurationError",
    "CosineRidge",
    "DynkinReport",
    "EstimateReport",
    "EstimationError",
    "ExitProbe",
    "ExitRecord",
    "FIELD_PRESETS",
    "FinalStateProbe",
    "HitProbe",
    "HolderFit",
    "IndicatorPayoff",
    "InsufficientResolution",
    "JumpDecomposition",
    "JumpLayerPlan",
    "JumpMark",
    "LevySystemReport",
    "LinearCombination",
    "QuadratureConfig",
    "QuadratureError",
    "QuadratureResult",
    "RampPayoff",
    "SimulationConfig",
    "SimulationError",
    "SlopeFit",
    "StableIndexSet",
    "StableLabError",
    "Trajectory",
    "aniso_metric",
    "build_field",
    "count_transitions",
    "decompose_jumps",
    "dynkin_check",
    "estimate_big_jump_exit",
    "estimate_exit_time",
    "estimate_hitting",
    "estimate_targeted_jump",
    "estimate_tube_probability",
    "first_exit",
    "first_hit",
    "fit_holder_exponent",
    "generator_apply",
    "harmonic_evaluate",
    "jump_intensity",
    "jump_intensity_batch",
    "levy_constant",
    "levy_system_check",
    "oscillation_decay",
    "path_stream",
    "resolve_threshold",
    "run_ensemble",
    "sample_stable_increment",
    "simulate_path",
    "symbol_value",
    "tail_mass",
    "truncated_variance_rate",
]
