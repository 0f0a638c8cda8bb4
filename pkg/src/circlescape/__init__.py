"""Stationary landscapes of driven diffusions on the circle."""
from .model import (
    CircleSystem,
    ConfigError,
    DegenerateError,
    LandscapeError,
    LandscapeFn,
    NumericalError,
    PeriodicPotential,
    QuadratureError,
    drift,
    eval_potential,
    load_config,
    system_from_dict,
    tilted_potential,
)

__version__ = "0.1.0"
