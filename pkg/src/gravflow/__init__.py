"""Grid simulator for a reactive, heat-conducting, self-gravitating viscous compressible fluid.

The solution is built by Picard linearization: the density is carried along
backward characteristics, the potential comes from a Poisson solve, and
temperature, mass fraction and velocity take implicit linear steps.  Monitors
audit the proved invariants and watch blow-up functionals during a run.
"""

from .core import Grid, NonFiniteError, SimParams, State, Trajectory
from .monitors import (CompatibilityReport, DiagnosticsSeries, Watchdog, WatchdogEvent, WatchdogThresholds,
                       check_compatibility, invariant_audit, watchdog_scan)
from .picard import InitialData, PicardReport, linearized_sweep, picard_iterate, step_stream, vacuum_continuation
from .presets import PRESETS, get_preset

__version__ = "0.1.0"

__all__ = [
    "CompatibilityReport", "DiagnosticsSeries", "Grid", "InitialData", "NonFiniteError", "PRESETS",
    "PicardReport", "SimParams", "State", "Trajectory", "Watchdog", "WatchdogEvent", "WatchdogThresholds",
    "check_compatibility", "get_preset", "invariant_audit", "linearized_sweep", "picard_iterate", "step_stream",
    "vacuum_continuation", "watchdog_scan",
]
