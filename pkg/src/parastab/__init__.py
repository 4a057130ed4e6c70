"""Stability analysis of the Helmholtz oscillator with periodically varying mass."""

from parastab.core_ode import (
    IntegratorSettings,
    OscillatorParams,
    ParameterError,
    State,
    StepSizeUnderflow,
    Trajectory,
    integrate,
    integrate_until_escape,
)

__version__ = "0.1.0"

__all__ = [
    "IntegratorSettings",
    "OscillatorParams",
    "ParameterError",
    "State",
    "StepSizeUnderflow",
    "Trajectory",
    "integrate",
    "integrate_until_escape",
]
