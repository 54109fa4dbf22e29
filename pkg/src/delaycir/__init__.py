"""Balanced implicit simulation of the delay CIR model with jumps.

The building blocks are re-exported here; the submodules hold the details:

``model``        parameters, initial history, validation
``driver``       seeded Brownian/Poisson increments and their aggregation
``schemes``      BIM and Euler steppers, path integration
``observables``  step process, moments, mean bound, bond and barrier prices
``experiments``  convergence, positivity and moment studies
``cli``          ``delaycir`` command-line tool
"""

from .driver import GridSpec, IncrementTable, SeedPolicy, aggregate, generate, generate_block
from .errors import DelayCIRError
from .experiments import (
    convergence_study,
    default_h_list,
    moment_study,
    positivity_census,
    simulate_ensemble,
)
from .model import EXAMPLE_1, EXAMPLE_2, InitialHistory, ModelParams, history_at, validate
from .observables import (
    StepProcessView,
    barrier_option_price,
    bond_price,
    mean_bound,
    moment_report,
    step_process_at,
)
from .schemes import (
    BIM,
    EULER,
    ControlConfig,
    PathRecorder,
    bim_step,
    control_c1,
    euler_step,
    simulate_path,
    simulate_paths,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "IncrementTable", "SeedPolicy", "aggregate", "generate", "generate_block",
    "DelayCIRError",
    "convergence_study", "default_h_list", "moment_study", "positivity_census",
    "simulate_ensemble",
    "EXAMPLE_1", "EXAMPLE_2", "InitialHistory", "ModelParams", "history_at", "validate",
    "StepProcessView", "barrier_option_price", "bond_price", "mean_bound", "moment_report",
    "step_process_at",
    "BIM", "EULER", "ControlConfig", "PathRecorder", "bim_step", "control_c1", "euler_step",
    "simulate_path", "simulate_paths",
]
