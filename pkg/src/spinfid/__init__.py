"""Forward simulation and inverse analysis of optically detected
electron-spin free induction decay."""

from .dynamics import (
    BlochState,
    DecoherenceModel,
    ExperimentConfig,
    NoiseModel,
    OkeArtifact,
    TraceSeries,
    effective_t2star,
    evolve_bloch,
    excited_state_weight,
    initialize_polarization,
    phase_offset,
    simulate_trace,
)
from .errors import (
    DegenerateFitError,
    DomainError,
    GuessFailureError,
    ParseError,
    RangeError,
    SpinfidError,
    ValidationError,
)
from .fitting import (
    FitResult,
    ModelSpec,
    extract_t2star,
    initial_guess_damped_cosine,
    model_damped_cosine,
    model_exponential,
    model_hahn_echo,
    model_inversion_recovery,
    nonlinear_least_squares,
)
from .modulation import ModulationConfig, RawShotPair, demodulate, pulse_helicities, synthesize_raw_shots
from .physics import (
    CODATA2018,
    GValue,
    MagneticField,
    PhysicalConstants,
    g_from_resonance,
    ground_level_population,
    larmor_frequency,
    resonance_field,
    rotational_correlation_time,
)
from .pipelines import (
    RelaxationSeries,
    SweepResult,
    deadtime_truncate,
    detection_limit,
    extract_g_from_sweep,
    extrapolate_t1,
    field_sweep,
    glycerol_viscosity,
    viscosity_regression,
    viscosity_sweep,
)

__version__ = "0.1.0"
