"""Built-in example systems: tilted single-well and three-well sine potentials."""
from __future__ import annotations

import math

from .model import CircleSystem, PeriodicPotential


def single_well(f: float, epsilon: float | None = None) -> CircleSystem:
    """U = -cos(2 pi theta)/(2 pi), so the drift is f - sin(2 pi theta)."""
    return CircleSystem(PeriodicPotential((-1.0 / (2 * math.pi),)), f, epsilon)


def three_well(f: float, epsilon: float | None = None) -> CircleSystem:
    """U = -cos(6 pi theta)/(6 pi): three identical wells, drift f - sin(6 pi theta)."""
    return CircleSystem(PeriodicPotential((0.0, 0.0, -1.0 / (6 * math.pi))), f, epsilon)


EXAMPLES = {"single_well": single_well, "three_well": three_well}
