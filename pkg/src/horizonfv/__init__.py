"""Finite volume solver for scalar hyperbolic balance laws on a black hole
exterior, with a method-of-characteristics oracle, steady-state generator,
and discrete entropy / maximum-principle diagnostics."""

from .characteristics import (
    CharPath,
    CharState,
    Fate,
    FhatTable,
    build_fhat_table,
    classify_fate,
    escape_velocity,
    exterior_invariant,
    fhat,
    fhat_inverse,
    h_prime_interior,
    interior_invariant,
    rhs_exterior,
    steady_profile,
    trace_exterior,
    trace_interior,
)
from .entropy import (
    EntropyLedger,
    cell_entropy_residuals,
    convex_decomposition_check,
    numerical_entropy_flux,
)
from .errors import (
    CflError,
    ConfigError,
    ContractError,
    DomainError,
    HorizonFVError,
    NumericsError,
    PresetError,
    RangeError,
    StepSizeError,
    UnsupportedModelError,
)
from .geometry import Background, RadialMesh, build_uniform_mesh, lapse, max_timestep
from .harness import (
    ConvergenceResult,
    FuzzReport,
    Preset,
    crossing_time_guard,
    exact_solution_by_shooting,
    fuzz_invariants,
    oracle_compare,
    oracle_convergence,
    presets,
    self_convergence,
    steady_drift,
)
from .model import (
    DEFAULT_KRUZHKOV_LEVELS,
    EntropyPair,
    FluxModel,
    StructureReport,
    burgers_model,
    check_structure,
    kruzhkov_pair,
    polynomial_model,
    quadratic_pair,
    validate_derivatives,
)
from .scheme import (
    COPY_BOUNDARY,
    NumericalFlux,
    OuterBoundary,
    RunResult,
    StateVector,
    StepReport,
    convex_coefficients,
    fixed_boundary,
    flux_engquist_osher,
    flux_godunov,
    flux_rusanov,
    numerical_flux,
    project_initial,
    run,
    step,
)

__version__ = "0.1.0"
