"""Explicit time-adaptive variational integrators for accelerated optimisation.

The integrators discretise Bregman dynamics, which minimise an objective at
rate ``O(1/t**p)``, after a Poincare-type time rescaling that lets a uniform
fictive step produce physical steps growing like ``t**(1 - p_ring/p)``.
"""
from .bregman import BregmanParams, MonitorKind, exact_time_map, monitor_g
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    MismatchedProblem,
    NoConvergence,
    NonFinite,
    NonpositiveTime,
    NotRotation,
    NotSkew,
    StepTooLarge,
    TaviError,
)
from .harness import RunConfig, Trace, check_termination, compare_runs, parse_config, run_trajectory, write_trace
from .integrators_so3 import So3State, llgvi_adaptive_step, llgvi_init
from .integrators_vector import (
    STEPPERS,
    VectorState,
    htvi_adaptive_step,
    htvi_direct_step,
    initial_state,
    ltvi_adaptive_step,
    ltvi_direct_step,
)

__version__ = "0.1.0"
