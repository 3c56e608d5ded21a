"""ftcarnot - Finite-time Carnot cycles of a two-level engine.

Exact master-equation strokes, maximum-power search over stroke durations,
and the analytic low-dissipation model with its self-consistency regime.
"""

__version__ = "0.1.0"

# Parameters and derived quantities
from .params import (
    INFINITE,
    DerivedParams,
    EngineParams,
    InfiniteCoupling,
    ParameterError,
    derive,
    format_coupling,
    parse_coupling,
    require_engine_orientation,
    two_level_entropy,
)

# Stroke dynamics
from .dynamics import (
    AffineMap,
    BathContact,
    IntegratorError,
    Ramp,
    SolverError,
    StrokeResult,
    bose_occupation,
    equilibrium_population,
    integrate_stroke,
    rates,
    relaxation_time,
    stroke_affine_map,
)

# Cycles
from .cycle import (
    CycleError,
    CycleResult,
    CycleSpec,
    CycleStatus,
    IdealColdStroke,
    run_cycle,
    run_finite_cycle,
    run_ideal_cold_cycle,
)

# Low-dissipation model
from .lowdiss import (
    LowDissInputs,
    LowDissPrediction,
    asymptotic_coefficients,
    asymptotic_dissipation,
    composed_dimensionless_times,
    emp_bounds,
    entropy_scaling,
    high_T_coefficients,
    high_T_dissipation,
    high_T_entropy_change,
    ld_dimensionless_times,
    ld_emp,
    ld_heats,
    ld_optimal_times,
    ld_power,
    plateau_fit,
    predict,
    regime_check,
)

# Power optimization
from .optimize import (
    EmpPoint,
    NoEngineRegimeError,
    PowerOptimum,
    PowerOptimum2D,
    ScanGrid,
    emp_sweep,
    golden_section_max,
    maximize_power_1d,
    maximize_power_2d,
    maximize_power_fixed_cold,
    scan_power_1d,
)

# Output files
from .artifacts import (
    RunManifest,
    parse_duration,
    parse_durations,
    write_csv,
    write_json,
    write_manifest,
)

__all__ = [
    # Version
    "__version__",
    # Parameters
    "INFINITE",
    "DerivedParams",
    "EngineParams",
    "InfiniteCoupling",
    "ParameterError",
    "derive",
    "format_coupling",
    "parse_coupling",
    "require_engine_orientation",
    "two_level_entropy",
    # Dynamics
    "AffineMap",
    "BathContact",
    "IntegratorError",
    "Ramp",
    "SolverError",
    "StrokeResult",
    "bose_occupation",
    "equilibrium_population",
    "integrate_stroke",
    "rates",
    "relaxation_time",
    "stroke_affine_map",
    # Cycles
    "CycleError",
    "CycleResult",
    "CycleSpec",
    "CycleStatus",
    "IdealColdStroke",
    "run_cycle",
    "run_finite_cycle",
    "run_ideal_cold_cycle",
    # Low-dissipation model
    "LowDissInputs",
    "LowDissPrediction",
    "asymptotic_coefficients",
    "asymptotic_dissipation",
    "composed_dimensionless_times",
    "emp_bounds",
    "entropy_scaling",
    "high_T_coefficients",
    "high_T_dissipation",
    "high_T_entropy_change",
    "ld_dimensionless_times",
    "ld_emp",
    "ld_heats",
    "ld_optimal_times",
    "ld_power",
    "plateau_fit",
    "predict",
    "regime_check",
    # Optimization
    "EmpPoint",
    "NoEngineRegimeError",
    "PowerOptimum",
    "PowerOptimum2D",
    "ScanGrid",
    "emp_sweep",
    "golden_section_max",
    "maximize_power_1d",
    "maximize_power_2d",
    "maximize_power_fixed_cold",
    "scan_power_1d",
    # Output files
    "RunManifest",
    "parse_duration",
    "parse_durations",
    "write_csv",
    "write_json",
    "write_manifest",
]
