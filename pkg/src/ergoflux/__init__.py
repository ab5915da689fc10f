"""Work extraction from a driven dissipative qubit into a waveguide battery.

The package simulates a two-level emitter coupled to a one-dimensional
waveguide, splits the emitted energy into work-like (coherent) and heat-like
(incoherent) parts, and provides optimizers and self-verification suites for
the extraction protocols studied here.
"""

from .dynamics import (
    ALWAYS_ON,
    AnalyticCoefficients,
    CouplingSchedule,
    DriveProfile,
    ExponentialPulse,
    IntegrationAccuracyError,
    OffDrive,
    Preparation,
    QubitState,
    Regime,
    SquarePulse,
    SquarePulseSolution,
    TabulatedPulse,
    Trajectory,
    Units,
    analytic_square_trajectory,
    bloch_rhs,
    evolve_numeric,
    evolve_square_analytic,
    free_decay,
    free_decay_trajectory,
    prepare_initial,
    square_pulse_coefficients,
)
from .energetics import (
    EnergeticsTrace,
    WorkSplit,
    accumulate,
    ergotropy,
    extraction_yield,
    heat_rate,
    mean_energy,
    square_drive_work,
    square_drive_work_fn,
    suggested_grid_step,
    work_rate,
    work_split,
)
from .scenarios import (
    ScenarioResult,
    SweepAxis,
    SweepGrid,
    SweepResult,
    optimal_square_work,
    scenario_continuous,
    scenario_pulsed,
    scenario_spontaneous,
    sweep,
)
from .optimizer import (
    ControlProblem,
    ExponentialTauResult,
    OptimalPulse,
    control_times,
    control_work,
    control_work_and_gradient,
    exponential_drive,
    optimize_exponential_tau,
    project_to_budget,
    pulse_distance,
    solve_optimal_control,
)
from .emitted_field import (
    HusimiGrid,
    OutputFieldState,
    coherent_amplitude,
    husimi,
    husimi_at,
    mean_photon_number,
    output_state,
)
from .verification import (
    BoundScanReport,
    ConservationReport,
    ConservationSuiteReport,
    ScaleInvarianceReport,
    conservation_audit,
    conservation_suite,
    ergotropy_bound_scan,
    scale_invariance_check,
)

__all__ = [
    "ALWAYS_ON",
    "AnalyticCoefficients",
    "BoundScanReport",
    "ConservationReport",
    "ConservationSuiteReport",
    "ControlProblem",
    "CouplingSchedule",
    "DriveProfile",
    "EnergeticsTrace",
    "ExponentialPulse",
    "ExponentialTauResult",
    "HusimiGrid",
    "IntegrationAccuracyError",
    "OffDrive",
    "OptimalPulse",
    "OutputFieldState",
    "Preparation",
    "QubitState",
    "Regime",
    "ScaleInvarianceReport",
    "ScenarioResult",
    "SquarePulse",
    "SquarePulseSolution",
    "SweepAxis",
    "SweepGrid",
    "SweepResult",
    "TabulatedPulse",
    "Trajectory",
    "Units",
    "WorkSplit",
    "accumulate",
    "analytic_square_trajectory",
    "bloch_rhs",
    "coherent_amplitude",
    "conservation_audit",
    "conservation_suite",
    "control_times",
    "control_work",
    "control_work_and_gradient",
    "ergotropy",
    "ergotropy_bound_scan",
    "evolve_numeric",
    "evolve_square_analytic",
    "exponential_drive",
    "extraction_yield",
    "free_decay",
    "free_decay_trajectory",
    "heat_rate",
    "husimi",
    "husimi_at",
    "mean_energy",
    "mean_photon_number",
    "optimal_square_work",
    "optimize_exponential_tau",
    "output_state",
    "prepare_initial",
    "project_to_budget",
    "pulse_distance",
    "scale_invariance_check",
    "scenario_continuous",
    "scenario_pulsed",
    "scenario_spontaneous",
    "solve_optimal_control",
    "square_drive_work",
    "square_drive_work_fn",
    "square_pulse_coefficients",
    "suggested_grid_step",
    "sweep",
    "work_rate",
    "work_split",
]

__version__ = "0.1.0"
