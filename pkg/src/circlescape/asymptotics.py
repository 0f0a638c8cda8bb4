"""
Small-noise limit of the circle diffusion.

``sup_construct`` builds

    U*(theta) = sup_{theta <= z < theta + 1} (U(z) - f z)

and ``landscape_V`` the periodic ``V = U* - U + f theta``; the stationary
density behaves like ``exp(V/eps)``, so ``max V - V`` is the rate function.
When the drift never vanishes the sup sits at the left endpoint, ``V == 0``
and the limiting density is the normalized inverse speed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CircleSystem,
    DegenerateError,
    LandscapeError,
    LandscapeFn,
    drift,
    drift_zeros,
    slope_range,
    tilted_potential,
    uniform_grid,
)

#: |f - max U'| below this is treated as the saddle-node boundary
DEGENERACY_TOL = 1e-9
PLATEAU_RTOL = 1e-9


class RegimeError(LandscapeError, ValueError):
    """Operation requested in the wrong dynamical regime."""


class Regime(enum.Enum):
    LIMIT_CYCLE = "limit_cycle"
    FIXED_POINTS = "fixed_points"


@dataclass(frozen=True, eq=False)
class LaplaceClassification:
    regime: Regime
    nu: float
    degenerate: bool
    grid: np.ndarray
    interior_max: np.ndarray


class DensityKind(enum.Enum):
    DELTA = "delta"
    CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class LimitingDensity:
    kind: DensityKind
    delta_locations: tuple[float, ...] = ()
    density: LandscapeFn | None = None

    @property
    def delta_location(self) -> float:
        if self.kind is not DensityKind.DELTA:
            raise RegimeError("continuous limit has no delta location")
        if len(self.delta_locations) != 1:
            raise RegimeError(f"limit is split over {len(self.delta_locations)} tied attractors")
        return self.delta_locations[0]


def _local_maxima(sys: CircleSystem) -> np.ndarray:
    """Interior maxima of the tilted potential: zeros where the drift increases."""
    z = drift_zeros(sys)
    return z.theta[z.slope > 0]


def _merged_points(sys: CircleSystem, grid: np.ndarray):
    """Grid plus local maxima of the tilted potential, sorted, with grid positions."""
    peaks = _local_maxima(sys)
    pts = np.concatenate([grid, peaks])
    is_grid = np.concatenate([np.ones(grid.size, bool), np.zeros(peaks.size, bool)])
    order = np.argsort(pts, kind="stable")
    return pts[order], is_grid[order]


def _window_sup(sys: CircleSystem, theta: np.ndarray):
    """(U*(theta), argmax is interior) at sorted points theta in [0, 1).

    The sup over a window is attained at the left end, in the limit at the
    right end (only for f < 0), or at an interior local maximum; all three
    are in the merged point set, so the sweep below is exact.
    """
    pts, is_grid = _merged_points(sys, theta)
    vals = tilted_potential(sys, pts)
    m = pts.size
    # window starting at position p covers [p, m) and (shifted by one period) [0, p)
    suffix = np.maximum.accumulate(vals[::-1])[::-1]
    prefix = np.full(m, -np.inf)
    prefix[1:] = np.maximum.accumulate(vals[:-1])
    best = np.maximum(suffix, prefix - sys.f)
    best = np.maximum(best, vals - sys.f)  # right-end limit
    ustar = best[is_grid]
    left = vals[is_grid]
    return ustar, ustar > left


def sup_construct(sys: CircleSystem, grid_size: int = 4096) -> LandscapeFn:
    """U* on a uniform grid; values are the tilted (non-periodic) sup.

    Kinks are located on the periodic part U* + f theta.
    """
    if grid_size < 256:
        raise ValueError("grid_size must be at least 256")
    theta = uniform_grid(grid_size)
    ustar, _ = _window_sup(sys, theta)
    probe = LandscapeFn.sampled(theta, ustar + sys.f * theta)
    return LandscapeFn(theta, ustar, probe.kinks)


def landscape_V(sys: CircleSystem, grid_size: int = 4096) -> LandscapeFn:
    """V = U* - U + f theta >= 0, periodic, with kinks."""
    theta = uniform_grid(grid_size)
    ustar, _ = _window_sup(sys, theta)
    v = np.maximum(ustar - tilted_potential(sys, theta), 0.0)
    return LandscapeFn.sampled(theta, v)


def v_max(sys: CircleSystem) -> float:
    """Exact max V.

    U* is piecewise: the left end (V = 0), the right end (V = -f) or a
    constant local max, where V peaks at a stable fixed point.
    """
    ends = max(-sys.f, 0.0)
    z = drift_zeros(sys)
    stable = np.sort(z.theta[z.slope < 0])
    if stable.size == 0:
        return ends
    ustar, _ = _window_sup(sys, stable)
    return max(ends, float(np.max(ustar - tilted_potential(sys, stable))))


def quasi_potential(sys: CircleSystem, grid_size: int = 4096) -> LandscapeFn:
    """Rate function max V - V (zero on the most stable attractor)."""
    v = landscape_V(sys, grid_size)
    top = max(v_max(sys), float(v.values.max()))
    return LandscapeFn(v.grid, top - v.values, v.kinks)


def flat_regions(v: LandscapeFn, tol: float | None = None) -> list[tuple[float, float]]:
    """Arcs where V vanishes (the zero plateaus of V)."""
    if tol is None:
        tol = PLATEAU_RTOL * (float(np.max(np.abs(v.values))) + 1.0)
    return v.flat_regions(tol)


def classify(sys: CircleSystem, grid_size: int = 4096) -> LaplaceClassification:
    lo, hi = slope_range(sys.potential)
    f = sys.f
    degenerate = abs(f - hi) <= DEGENERACY_TOL or abs(f - lo) <= DEGENERACY_TOL
    if not degenerate and (f > hi or f < lo):
        regime, nu = Regime.LIMIT_CYCLE, 1.0
    else:
        regime, nu = Regime.FIXED_POINTS, 0.5
    theta = uniform_grid(grid_size)
    _, interior = _window_sup(sys, theta)
    return LaplaceClassification(regime, nu, degenerate, theta, interior)


def _require_regular(sys: CircleSystem) -> LaplaceClassification:
    cls = classify(sys, 256)
    if cls.degenerate:
        lo, hi = slope_range(sys.potential)
        z = drift_zeros(sys)
        where = z.degenerate[0] if z.degenerate else math.nan
        raise DegenerateError(where, f"saddle-node boundary f={sys.f:g} (U' spans [{lo:g}, {hi:g}])")
    return cls


def limit_cycle_period(sys: CircleSystem, grid_size: int = 4096) -> float:
    """T = int_0^1 dtheta / |f - U'|; periodic trapezoid, spectrally accurate."""
    if _require_regular(sys).regime is not Regime.LIMIT_CYCLE:
        raise RegimeError("no limit cycle: the drift has zeros")
    speed = np.abs(drift(sys, uniform_grid(grid_size)))
    return float(np.mean(1.0 / speed))


def limit_cycle_flux(sys: CircleSystem, grid_size: int = 4096) -> float:
    """Rotation number 1/T, signed like f."""
    return math.copysign(1.0 / limit_cycle_period(sys, grid_size), sys.f)


def wkb_prefactor(sys: CircleSystem, grid_size: int = 4096) -> LandscapeFn:
    """C0 = J/|f - U'| on the limit cycle (inverse speed, normalized)."""
    period = limit_cycle_period(sys, grid_size)
    theta = uniform_grid(grid_size)
    return LandscapeFn(theta, 1.0 / (period * np.abs(drift(sys, theta))))


def limiting_density(sys: CircleSystem, grid_size: int = 4096) -> LimitingDensity:
    cls = _require_regular(sys)
    if cls.regime is Regime.LIMIT_CYCLE:
        return LimitingDensity(DensityKind.CONTINUOUS, density=wkb_prefactor(sys, grid_size))
    z = drift_zeros(sys)
    stable = np.sort(z.theta[z.slope < 0])
    ustar, _ = _window_sup(sys, stable)
    v = ustar - tilted_potential(sys, stable)
    top = v.max()
    tied = stable[v >= top - 1e-12 * (abs(top) + 1.0)]
    return LimitingDensity(DensityKind.DELTA, delta_locations=tuple(float(t) for t in tied))
