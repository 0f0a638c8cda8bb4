"""
Fixed points, basins, barriers and Kramers rates on the driven circle.

On the circle the Freidlin-Wentzell action of a path is the total uphill
variation of the tilted potential ``Ut = U - f theta`` along it, so every
barrier is a difference of ``Ut`` at critical points.  Direction ``"cw"``
means increasing theta (the direction a positive tilt pushes).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import (
    CircleSystem,
    DegenerateError,
    LandscapeFn,
    NumericalError,
    drift_zeros,
    tilted_potential,
    uniform_grid,
)

TWO_PI = 2.0 * math.pi
FLAT_SLOPE = 1e-6


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class FixedPoint:
    theta: float
    kind: Stability
    slope: float  # d(drift)/d(theta) = -U''(theta)

    @property
    def curvature(self) -> float:
        """U''(theta), positive at stable points."""
        return -self.slope


def find_fixed_points(sys: CircleSystem, n_grid: int = 8192) -> list[FixedPoint]:
    """All zeros of f - U' on [0, 1), sorted, stable iff the drift decreases."""
    z = drift_zeros(sys, n_grid)
    if z.degenerate:
        raise DegenerateError(z.degenerate[0])
    pts = [
        FixedPoint(float(t), Stability.STABLE if s < 0 else Stability.UNSTABLE, float(s))
        for t, s in zip(z.theta, z.slope)
    ]
    kinds = [p.kind for p in pts]
    if any(a is b for a, b in zip(kinds, kinds[1:] + kinds[:1])) and len(pts) > 1:
        raise NumericalError("fixed points do not alternate; refine n_grid")
    if len(pts) % 2:
        raise NumericalError("odd number of fixed points on the circle")
    return pts


@dataclass(frozen=True)
class Barrier:
    source: int
    target: int
    direction: str  # "cw" or "ccw"
    height: float
    saddle: float  # wrapped position of the crossed saddle


@dataclass(frozen=True, eq=False)
class AttractorGraph:
    """Stable points ``attractors[i]`` in increasing theta, with their basins.

    ``saddle_cw[i]`` and ``saddle_ccw[i]`` are the lifted basin boundaries:
    ``saddle_ccw[i] < attractors[i].theta < saddle_cw[i]``.
    """

    system: CircleSystem
    attractors: tuple[FixedPoint, ...]
    saddles: tuple[FixedPoint, ...]
    saddle_cw: np.ndarray
    saddle_ccw: np.ndarray

    @property
    def n(self) -> int:
        return len(self.attractors)

    @property
    def theta(self) -> np.ndarray:
        return np.array([a.theta for a in self.attractors])

    def basin_of(self, x) -> np.ndarray:
        """Index of the basin containing each wrapped x."""
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        right = np.mod(self.saddle_cw, 1.0)
        order = np.argsort(right)
        k = np.searchsorted(right[order], x, side="right") % self.n
        return order[k]

    def lift_into_basin(self, i: int, x) -> np.ndarray:
        """Representative of x in (saddle_ccw[i], saddle_cw[i]]."""
        lo = self.saddle_ccw[i]
        return lo + np.mod(np.asarray(x, dtype=float) - lo, 1.0)

    def _slope_at(self, theta: float) -> float:
        return float(-self.system.potential(theta, 2))


def build_graph(sys: CircleSystem, n_grid: int = 8192) -> AttractorGraph:
    pts = find_fixed_points(sys, n_grid)
    stable = [p for p in pts if p.kind is Stability.STABLE]
    unstable = [p for p in pts if p.kind is Stability.UNSTABLE]
    if not stable:
        raise NumericalError("no stable fixed point: the system has a limit cycle")
    ut = np.array([p.theta for p in unstable])
    cw, ccw = [], []
    for a in stable:
        after = np.mod(ut - a.theta, 1.0)
        cw.append(a.theta + after.min())
        before = np.mod(a.theta - ut, 1.0)
        ccw.append(a.theta - before.min())
    return AttractorGraph(sys, tuple(stable), tuple(unstable), np.array(cw), np.array(ccw))


def barriers(g: AttractorGraph) -> list[Barrier]:
    """Both exits of every basin; for N = 1 both lead back to attractor 0."""
    sys = g.system
    out = []
    for i, a in enumerate(g.attractors):
        base = tilted_potential(sys, a.theta)
        out.append(Barrier(i, (i + 1) % g.n, "cw", tilted_potential(sys, g.saddle_cw[i]) - base,
                           float(g.saddle_cw[i] % 1.0)))
        out.append(Barrier(i, (i - 1) % g.n, "ccw", tilted_potential(sys, g.saddle_ccw[i]) - base,
                           float(g.saddle_ccw[i] % 1.0)))
    return out


def barrier_matrix(g: AttractorGraph) -> np.ndarray:
    """V[i, j]: lowest barrier from i to j; inf if not adjacent or i == j."""
    v = np.full((g.n, g.n), np.inf)
    for b in barriers(g):
        if b.source != b.target:
            v[b.source, b.target] = min(v[b.source, b.target], b.height)
    return v


def revolution_defect(g: AttractorGraph) -> float:
    """Sum of cw barriers minus the reverse barriers over one revolution (= -f)."""
    bs = barriers(g)
    cw = {b.source: b.height for b in bs if b.direction == "cw"}
    ccw = {b.source: b.height for b in bs if b.direction == "ccw"}
    return float(sum(cw[i] - ccw[(i + 1) % g.n] for i in range(g.n)))


@dataclass(frozen=True)
class RateEstimate:
    """rate = prefactor * exp(-exponent/eps), summed over parallel channels.

    ``prefactor`` is None when only the exponent is claimed; the rate is
    then reported with unit prefactors.
    """

    exponent: float
    prefactor: float | None
    log_rate: float
    epsilon: float
    channels: tuple[Barrier, ...]

    @property
    def rate(self) -> float:
        return math.exp(self.log_rate)


def kramers_prefactor(g: AttractorGraph, b: Barrier) -> float | None:
    """sqrt(|drift slope at well| * |drift slope at saddle|) / (2 pi); None if flat."""
    well = abs(g.attractors[b.source].slope)
    saddle = abs(g._slope_at(b.saddle))
    if well < FLAT_SLOPE or saddle < FLAT_SLOPE:
        return None
    return math.sqrt(well * saddle) / TWO_PI


def kramers_rate(
    g: AttractorGraph,
    i: int,
    j: int,
    epsilon: float,
    with_prefactor: bool = False,
    direction: str | None = None,
) -> RateEstimate:
    """Transition rate from attractor i to adjacent attractor j.

    With two channels between the same pair (N <= 2) the rates add unless
    ``direction`` selects one.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    chans = [b for b in barriers(g) if b.source == i and b.target == j]
    if direction is not None:
        chans = [b for b in chans if b.direction == direction]
    if not chans:
        raise ValueError(f"attractors {i} and {j} are not adjacent")
    logs = []
    use_prefactor = with_prefactor
    for b in chans:
        p = kramers_prefactor(g, b) if with_prefactor else 1.0
        if p is None:
            warnings.warn(f"flat drift at barrier {b}; reporting the exponent only", RuntimeWarning)
            use_prefactor = False
            p = 1.0
        logs.append(math.log(p) - b.height / epsilon)
    if use_prefactor != with_prefactor:
        logs = [-b.height / epsilon for b in chans]
    exponent = min(b.height for b in chans)
    log_rate = float(logsumexp(logs))
    prefactor = math.exp(log_rate + exponent / epsilon) if use_prefactor else None
    return RateEstimate(exponent, prefactor, log_rate, epsilon, tuple(chans))


# ---------------------------------------------------------------------------
# actions from an attractor to an arbitrary point
# ---------------------------------------------------------------------------


def _critical_points(g: AttractorGraph) -> np.ndarray:
    return np.sort(np.concatenate([g.theta, [s.theta for s in g.saddles]]))


def _uphill_action(sys: CircleSystem, start: float, crit: np.ndarray, x: np.ndarray, sign: int) -> np.ndarray:
    """Uphill variation of Ut along the monotone path start -> start + sign*d.

    ``x`` holds offsets d in [0, 1); ``crit`` the wrapped critical points.
    Between consecutive critical points Ut is monotone, so the action is a
    sum of positive parts of Ut differences at the breakpoints.
    """
    off = np.sort(np.mod(sign * (crit - start), 1.0))
    off = off[off > 0]
    nodes = np.concatenate([[0.0], off])
    pos = start + sign * nodes
    ut = tilted_potential(sys, pos)
    acc = np.concatenate([[0.0], np.cumsum(np.maximum(np.diff(ut), 0.0))])
    k = np.searchsorted(nodes, x, side="right") - 1
    here = tilted_potential(sys, start + sign * x)
    return acc[k] + np.maximum(here - ut[k], 0.0)


def action_from(g: AttractorGraph, i: int, x) -> np.ndarray:
    """Minimal action to reach wrapped x from attractor i, going either way round."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    t = g.attractors[i].theta
    crit = _critical_points(g)
    cw = _uphill_action(g.system, t, crit, np.mod(x - t, 1.0), +1)
    ccw = _uphill_action(g.system, t, crit, np.mod(t - x, 1.0), -1)
    return np.minimum(cw, ccw)


def local_landscape(g: AttractorGraph, i: int, grid_size: int = 4096) -> LandscapeFn:
    """phi_i: Ut - Ut(theta_i) inside basin i, continued outside by the
    minimal action (constant after each crossed saddle, rising again past
    the next attractor)."""
    if not 0 <= i < g.n:
        raise IndexError(i)
    theta = uniform_grid(grid_size)
    return LandscapeFn.sampled(theta, action_from(g, i, theta))
