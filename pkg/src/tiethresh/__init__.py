"""Tie-decay temporal networks: SIS epidemics and spectral epidemic thresholds.

Build tie-decay networks from synthetic or real interaction streams, run
discrete-time SIS dynamics whose infection probabilities track the decaying
tie strengths, and estimate the epidemic-threshold critical value as the
per-step spectral radius of the periodic system-matrix product.
"""

from ._version import __version__
from .errors import (
    ConfigError,
    ContactParseError,
    ResampleExhaustedError,
    StructuralError,
    TieThreshError,
    UndefinedCorrelationError,
    UnknownScenarioError,
)
from .events import EventLog, write_event_log
from .ingestion import DiscretizationPlan, choose_dt, discretize, parse_contact_file
from .sis import (
    EnsembleResult,
    SISParams,
    SISState,
    Trajectory,
    run_ensemble,
    simulate,
    sis_step,
)
from .synthetic import (
    ErConfig,
    WaitingTimeConfig,
    generate_er,
    generate_event_times,
    initial_tie_matrix,
)
from .threshold import (
    CriticalValueSeries,
    SpectralRadiusResult,
    SystemOperator,
    classify,
    critical_value_grid,
    critical_value_series,
    mean_field_trajectory,
    spectral_radius_product,
)
from .tie_decay import (
    DecayParams,
    InteractionMatrix,
    SnapshotSequence,
    TieMatrix,
    capped,
    closed_form_strength,
    step,
)
from .windowed import (
    WindowedNetwork,
    bin_windows,
    rescale_windows,
    simulate_windowed,
    windowed_threshold,
)

__all__ = [
    "__version__",
    "TieThreshError",
    "StructuralError",
    "ConfigError",
    "ResampleExhaustedError",
    "ContactParseError",
    "UndefinedCorrelationError",
    "UnknownScenarioError",
    "TieMatrix",
    "InteractionMatrix",
    "DecayParams",
    "SnapshotSequence",
    "step",
    "closed_form_strength",
    "capped",
    "EventLog",
    "write_event_log",
    "ErConfig",
    "WaitingTimeConfig",
    "generate_er",
    "generate_event_times",
    "initial_tie_matrix",
    "DiscretizationPlan",
    "parse_contact_file",
    "choose_dt",
    "discretize",
    "SISParams",
    "SISState",
    "Trajectory",
    "EnsembleResult",
    "sis_step",
    "simulate",
    "run_ensemble",
    "SystemOperator",
    "SpectralRadiusResult",
    "CriticalValueSeries",
    "spectral_radius_product",
    "critical_value_series",
    "critical_value_grid",
    "classify",
    "mean_field_trajectory",
    "WindowedNetwork",
    "bin_windows",
    "rescale_windows",
    "windowed_threshold",
    "simulate_windowed",
]
