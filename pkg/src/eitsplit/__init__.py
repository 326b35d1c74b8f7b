"""Simulation and analysis of EIT light storage used as a dynamic beam splitter."""

from .analysis import (
    InterferenceResult,
    NoOscillation,
    PhaseMatch,
    beat_period,
    combine,
    dual_rail_state,
    fringe_scan,
    interference,
    phase_match,
    splitting_ratio,
    visibility,
)
from .medium import (
    MediumParams,
    Susceptibility,
    eit_susceptibility,
    eit_transmission,
    group_delay,
    two_level_transmission,
)
from .schedule import ControlSchedule, ProbePulse, Segment, evaluate_control, evaluate_probe
from .solver import Grid, NumericalError, SimResult, SimState, StabilityError, run, storage_efficiency

__version__ = "0.1.0"

__all__ = [
    "ControlSchedule",
    "Grid",
    "InterferenceResult",
    "MediumParams",
    "NoOscillation",
    "NumericalError",
    "PhaseMatch",
    "ProbePulse",
    "Segment",
    "SimResult",
    "SimState",
    "StabilityError",
    "Susceptibility",
    "beat_period",
    "combine",
    "dual_rail_state",
    "eit_susceptibility",
    "eit_transmission",
    "evaluate_control",
    "evaluate_probe",
    "fringe_scan",
    "group_delay",
    "interference",
    "phase_match",
    "run",
    "splitting_ratio",
    "storage_efficiency",
    "two_level_transmission",
    "visibility",
]
