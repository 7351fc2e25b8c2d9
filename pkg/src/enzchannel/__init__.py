"""Diffusive molecular communication channel with enzymatic degradation:
particle-based simulator, closed-form receiver models, and an experiment
harness that reproduces the published observation curves."""

__version__ = "0.1.0"

from .analytic import (
    AnalyticalCurve,
    ChannelGeometry,
    EnzymeFieldParams,
    ModelTag,
    diffusion_only_concentration,
    diffusion_peak_time,
    enzyme_lower_bound_concentration,
    expected_count,
    intermediate_concentration,
    peak_of_curve,
    sample_curve,
)
from .engine import (
    Box,
    EmissionMode,
    EmitterSpec,
    ParticleState,
    SimulationConfig,
    SpatialHash,
    bind_step,
    diffuse_step,
    emit_impulse,
    enforce_boundary,
    init_state,
    match_binding_pairs,
    observe,
    run_simulation,
    step,
    unimolecular_step,
)
from .errors import (
    ConfigurationError,
    EnzChannelError,
    GridMismatchError,
    InvalidParameterError,
)
from .harness import (
    AveragedSeries,
    ComparisonReport,
    ExperimentMode,
    ExperimentSpec,
    ObservationSeries,
    SummaryMetrics,
    compare,
    run_experiment,
    run_trial,
    summarize,
    trial_seed,
)
from .physics import (
    BOLTZMANN,
    DerivedStepParameters,
    PhysicalEnvironment,
    ReactionRates,
    Species,
    SpeciesSpec,
    StepRegimeReport,
    binding_radius,
    derive_step_parameters,
    einstein_diffusion,
    rms_step,
    unimolecular_probabilities,
    validate_long_step_regime,
)

__all__ = [name for name in dir() if not name.startswith("_")]
