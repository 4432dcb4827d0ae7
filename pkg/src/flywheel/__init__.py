"""Measurement-stabilized quantum flywheel simulator and analysis library."""

__version__ = "0.1.0"

from .engine import ControlSpec, EffectiveBath, EngineSpec
from .fock import DensityMatrix, FockSpace
from .lindblad import (
    ComposedGenerator,
    Generator,
    build_engine_dissipator,
    build_feedback_dissipator,
    build_monitoring_dissipator,
    compose,
    compose_from_params,
    moment_flow,
    propagate,
    steady_state,
    unstable_temperature,
)
from .sme import (
    EnsembleSummary,
    NoiseIncrement,
    TrajectoryConfig,
    TrajectoryRecord,
    run_ensemble,
    run_trajectory,
    suggested_dt,
)
from .steady import SteadyPrediction, efficiency_surface, optimal_monitoring, predict, threshold
from .energy import EnergyLedger, dissipator_current, driving_power, feedback_power_estimate, ledger
from .tripartite import (
    ClassicalDriveSpec,
    build_tripartite_generator,
    classical_drive_power,
    validate_reduction,
)
