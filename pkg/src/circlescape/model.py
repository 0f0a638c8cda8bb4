"""
Domain types for overdamped diffusion on the unit circle.

The process is

    d(theta) = (f - U'(theta)) dt + sqrt(2 eps) dB,

with ``U`` a finite Fourier series of period 1 and ``f`` a constant tilt.
All angles live on ``[0, 1)``; lifted (unwrapped) coordinates are used
wherever winding matters.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

TWO_PI = 2.0 * math.pi

#: relative kink tolerance; a kink is a one-sided slope gap above
#: ``KINK_RTOL * (max|values| + 1)``
KINK_RTOL = 1e-3


class LandscapeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LandscapeError, ValueError):
    """Malformed system description."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class NumericalError(LandscapeError, ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""


class QuadratureError(NumericalError):
    pass


class DegenerateError(NumericalError):
    """Double zero of the drift (saddle-node) where a simple zero is required."""

    def __init__(self, theta: float, message: str = "degenerate zero of the drift"):
        self.theta = theta
        super().__init__(f"{message} at theta={theta:.12g}")


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicPotential:
    """U(theta) = sum_k a_k cos(2 pi k theta) + b_k sin(2 pi k theta), k >= 1."""

    cosine_coeffs: tuple[float, ...] = ()
    sine_coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cosine_coeffs", tuple(float(a) for a in self.cosine_coeffs))
        object.__setattr__(self, "sine_coeffs", tuple(float(b) for b in self.sine_coeffs))
        for name in ("cosine_coeffs", "sine_coeffs"):
            if not all(math.isfinite(c) for c in getattr(self, name)):
                raise ConfigError(name, "coefficients must be finite")

    @property
    def k_max(self) -> int:
        return max(len(self.cosine_coeffs), len(self.sine_coeffs))

    def _padded(self):
        n = self.k_max
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.cosine_coeffs)] = self.cosine_coeffs
        b[: len(self.sine_coeffs)] = self.sine_coeffs
        return a, b

    def __call__(self, theta, order: int = 0):
        return eval_potential(self, theta, order)

    def reflected(self) -> "PeriodicPotential":
        """The potential theta -> U(-theta)."""
        return PeriodicPotential(self.cosine_coeffs, tuple(-b for b in self.sine_coeffs))

    @property
    def is_zero(self) -> bool:
        return not any(self.cosine_coeffs) and not any(self.sine_coeffs)

    @classmethod
    def from_samples(cls, values: Sequence[float], k_max: int | None = None) -> "PeriodicPotential":
        """Spectral interpolation of ``values`` sampled at ``theta_j = j/n``.

        This adapter is second-class: the result is only as smooth and as
        accurate as the trigonometric interpolant of the samples. The mean
        (k = 0 term) is dropped since it does not affect the dynamics.
        """
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 3:
            raise ConfigError("values", "need at least 3 samples")
        coeffs = np.fft.rfft(values) / n
        kmax = (n - 1) // 2 if k_max is None else min(int(k_max), (n - 1) // 2)
        c = coeffs[1 : kmax + 1]
        return cls(tuple(2.0 * c.real), tuple(-2.0 * c.imag))


def eval_potential(p: PeriodicPotential, theta, derivative_order: int = 0):
    """Exact evaluation of U, U' or U'' at ``theta`` (scalar or array)."""
    if derivative_order not in (0, 1, 2):
        raise ValueError(f"derivative_order must be 0, 1 or 2, got {derivative_order!r}")
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    a, b = p._padded()
    if a.size == 0:
        out = np.zeros_like(theta)
        return float(out) if scalar else out
    k = np.arange(1, a.size + 1, dtype=float)
    # reduce mod 1 first so huge lifted arguments keep full precision
    phase = TWO_PI * np.multiply.outer(np.mod(theta, 1.0), k)
    c, s = np.cos(phase), np.sin(phase)
    w = TWO_PI * k
    if derivative_order == 0:
        out = c @ a + s @ b
    elif derivative_order == 1:
        out = s @ (-a * w) + c @ (b * w)
    else:
        out = c @ (-a * w**2) + s @ (-b * w**2)
    return float(out) if scalar else out


def slope_range(p: PeriodicPotential, n_grid: int = 4096) -> tuple[float, float]:
    """(min U', max U') over the circle, polished with a bounded scalar search."""
    if p.is_zero:
        return 0.0, 0.0
    grid = np.arange(n_grid) / n_grid
    d1 = eval_potential(p, grid, 1)
    h = 1.0 / n_grid
    out = []
    for sign in (1.0, -1.0):
        # minimise sign * U'
        k = int(np.argmin(sign * d1))
        res = minimize_scalar(
            lambda t: sign * eval_potential(p, t, 1),
            bounds=(grid[k] - h, grid[k] + h),
            method="bounded",
            options={"xatol": 1e-13},
        )
        out.append(sign * min(float(res.fun), sign * d1[k]))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# the system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleSystem:
    """The triple (U, f, eps). ``epsilon`` may be None for deterministic analysis."""

    potential: PeriodicPotential
    f: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", float(self.f))
        if not math.isfinite(self.f):
            raise ConfigError("f", "must be finite")
        if self.epsilon is not None:
            eps = float(self.epsilon)
            if not (math.isfinite(eps) and eps > 0):
                raise ConfigError("epsilon", f"must be a positive real, got {self.epsilon!r}")
            object.__setattr__(self, "epsilon", eps)

    def drift(self, theta):
        return drift(self, theta)

    def tilted(self, theta):
        return tilted_potential(self, theta)

    def with_epsilon(self, epsilon: float) -> "CircleSystem":
        return replace(self, epsilon=epsilon)

    def with_f(self, f: float) -> "CircleSystem":
        return replace(self, f=f)

    def require_epsilon(self) -> float:
        if self.epsilon is None:
            raise ConfigError("epsilon", "a positive noise strength is required here")
        return self.epsilon

    def reflected(self) -> "CircleSystem":
        """Image under theta -> -theta (which also sends f -> -f)."""
        return CircleSystem(self.potential.reflected(), -self.f, self.epsilon)

    def to_dict(self) -> dict:
        d = {"cos": list(self.potential.cosine_coeffs), "sin": list(self.potential.sine_coeffs), "f": self.f}
        if self.epsilon is not None:
            d["epsilon"] = self.epsilon
        return d


def drift(sys: CircleSystem, theta):
    """f - U'(theta)."""
    return sys.f - eval_potential(sys.potential, theta, 1)


def drift_slope(sys: CircleSystem, theta):
    """d(drift)/d(theta) = -U''(theta)."""
    return -eval_potential(sys.potential, theta, 2)


def tilted_potential(sys: CircleSystem, theta):
    """The lift U(theta) - f theta on the real line; shifts by -f per revolution."""
    theta = np.asarray(theta, dtype=float)
    out = eval_potential(sys.potential, theta, 0) - sys.f * theta
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# zeros of the drift
# ---------------------------------------------------------------------------

ROOT_XTOL = 1e-12
DOUBLE_ROOT_VALUE = 1e-10
DOUBLE_ROOT_SLOPE = 1e-6


@dataclass(frozen=True)
class DriftZeros:
    """Simple zeros of the drift on [0, 1) and any near-double zeros seen."""

    theta: np.ndarray
    slope: np.ndarray
    degenerate: tuple[float, ...] = ()


def drift_zeros(sys: CircleSystem, n_grid: int = 8192) -> DriftZeros:
    """Bracket sign changes of f - U' on a uniform grid, then bisect.

    Touching zeros (drift reaches zero without changing sign) and simple
    zeros with vanishing slope are collected in ``degenerate`` instead of
    being returned as roots.
    """
    if sys.potential.is_zero:
        return DriftZeros(np.empty(0), np.empty(0), (0.0,) if sys.f == 0 else ())
    grid = np.arange(n_grid + 1) / n_grid
    d = drift(sys, grid)
    d[-1] = d[0]
    fn = lambda t: drift(sys, t)
    roots, slopes, degenerate = [], [], []
    for k in range(n_grid):
        lo, hi = d[k], d[k + 1]
        if lo == 0.0:
            t = grid[k]
        elif hi != 0.0 and (lo < 0) != (hi < 0):
            t = brentq(fn, grid[k], grid[k + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        else:
            continue
        s = drift_slope(sys, t)
        if lo == 0.0 and (d[(k - 1) % n_grid] < 0) == (d[k + 1] < 0):
            degenerate.append(t % 1.0)
        elif abs(s) < DOUBLE_ROOT_SLOPE:
            degenerate.append(t % 1.0)
        else:
            roots.append(t % 1.0)
            slopes.append(s)

    # touching zeros: local minima of |drift| without a sign change
    ad = np.abs(d[:-1])
    left, right = np.roll(ad, 1), np.roll(ad, -1)
    h = 1.0 / n_grid
    for k in np.flatnonzero((ad <= left) & (ad <= right) & (ad > 0)):
        sgn = math.copysign(1.0, d[k])
        res = minimize_scalar(
            lambda t: sgn * drift(sys, t),
            bounds=(grid[k] - h, grid[k] + h),
            method="bounded",
            options={"xatol": 1e-13},
        )
        if abs(res.fun) < DOUBLE_ROOT_VALUE and abs(drift_slope(sys, res.x)) < DOUBLE_ROOT_SLOPE:
            if not any(abs((res.x - t + 0.5) % 1.0 - 0.5) < 2 * h for t in degenerate):
                degenerate.append(res.x % 1.0)

    order = np.argsort(roots)
    return DriftZeros(np.asarray(roots)[order], np.asarray(slopes)[order], tuple(sorted(degenerate)))


# ---------------------------------------------------------------------------
# sampled periodic functions
# ---------------------------------------------------------------------------


def uniform_grid(n: int) -> np.ndarray:
    return np.arange(n) / n


def one_sided_slopes(grid: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Second-order one-sided derivative estimates on a periodic grid."""
    n = values.size
    if n < 5:
        raise ValueError("need at least 5 samples")
    x = np.concatenate([grid[-2:] - 1.0, grid, grid[:2] + 1.0])
    v = np.concatenate([values[-2:], values, values[:2]])
    i = np.arange(2, n + 2)
    # three-point stencils on possibly non-uniform spacing
    def stencil(x0, x1, x2, v0, v1, v2):
        h1, h2 = x1 - x0, x2 - x0
        return (v1 - v0) * h2 / (h1 * (h2 - h1)) - (v2 - v0) * h1 / (h2 * (h2 - h1))

    right = stencil(x[i], x[i + 1], x[i + 2], v[i], v[i + 1], v[i + 2])
    left = stencil(x[i], x[i - 1], x[i - 2], v[i], v[i - 1], v[i - 2])
    return left, right


def detect_kinks(grid: np.ndarray, values: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Grid points where left and right slopes disagree by more than ``tol``.

    A kink that falls between grid points disturbs a few neighbouring
    stencils; each such cluster is reported once, at its largest gap.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if tol is None:
        tol = KINK_RTOL * (np.max(np.abs(values)) + 1.0)
    left, right = one_sided_slopes(grid, values)
    gap = np.abs(right - left)
    # a curvature jump between grid points also opens a gap, of order
    # h * |v''|; compare against the curvature a few cells away on each side
    h = np.diff(np.append(grid, grid[0] + 1.0))
    second = (np.roll(values, -1) - 2 * values + np.roll(values, 1)) / (h * h)
    curv = np.maximum(np.abs(np.roll(second, 3)), np.abs(np.roll(second, -3)))
    flagged = (gap > tol) & (gap > 4.0 * h * curv)
    if not flagged.any():
        return np.empty(0)
    if flagged.all():
        return np.asarray([grid[int(np.argmax(gap))]])
    # one kink disturbs stencils up to two cells away, so flags within a
    # cluster need not be contiguous: bridge holes of up to two cells
    bridged = flagged | (np.roll(flagged, 1) & np.roll(flagged, -1))
    bridged |= np.roll(flagged, 1) & np.roll(flagged, -2)
    bridged |= np.roll(flagged, 2) & np.roll(flagged, -1)
    if bridged.all():
        return np.asarray([grid[int(np.argmax(gap))]])
    # rotate so a cluster never straddles the seam
    start = int(np.argmin(bridged))
    idx = np.roll(np.arange(grid.size), -start)
    fl = bridged[idx]
    kinks = []
    k = 0
    while k < fl.size:
        if not fl[k]:
            k += 1
            continue
        j = k
        while j < fl.size and fl[j]:
            j += 1
        cluster = idx[k:j]
        score = np.where(flagged[cluster], gap[cluster], -1.0)
        kinks.append(grid[cluster[int(np.argmax(score))]])
        k = j
    return np.sort(np.asarray(kinks))


@dataclass(frozen=True, eq=False)
class LandscapeFn:
    """Periodic function sampled on a strictly increasing grid in [0, 1)."""

    grid: np.ndarray
    values: np.ndarray
    kinks: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size and (grid[0] < 0 or grid[-1] >= 1 or np.any(np.diff(grid) <= 0)):
            raise ValueError("grid must be strictly increasing in [0, 1)")
        grid.setflags(write=False)
        values.setflags(write=False)
        kinks = np.asarray(self.kinks, dtype=float)
        kinks.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kinks", kinks)

    @classmethod
    def sampled(cls, grid, values, kink_tol: float | None = None) -> "LandscapeFn":
        """Build from samples, detecting kinks with ``kink_tol``."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(grid, values, detect_kinks(grid, values, kink_tol))

    def __len__(self):
        return self.grid.size

    def __call__(self, theta):
        """Periodic linear interpolation."""
        x = np.concatenate([self.grid, [self.grid[0] + 1.0]])
        v = np.concatenate([self.values, [self.values[0]]])
        return np.interp(np.mod(theta, 1.0), x, v)

    @property
    def spacing(self) -> float:
        return 1.0 / self.grid.size

    def seam_gap(self) -> float:
        """Jump across theta = 1 -> 0 relative to the typical step size."""
        v = self.values
        inner = np.max(np.abs(np.diff(v))) if v.size > 1 else 0.0
        return max(0.0, abs(v[0] - v[-1]) - inner)

    def shifted_min(self) -> "LandscapeFn":
        return LandscapeFn(self.grid, self.values - self.values.min(), self.kinks)

    def flat_regions(self, tol: float) -> list[tuple[float, float]]:
        """Arcs (start, end) of consecutive grid points with value below ``tol``.

        An arc crossing the seam is reported with ``end < start``.
        """
        low = self.values < tol
        if not low.any():
            return []
        if low.all():
            return [(0.0, float(self.grid[-1]))]
        start = int(np.argmin(low))
        idx = np.roll(np.arange(low.size), -start)
        arcs = []
        k = 0
        while k < idx.size:
            if not low[idx[k]]:
                k += 1
                continue
            j = k
            while j < idx.size and low[idx[j]]:
                j += 1
            arcs.append((float(self.grid[idx[k]]), float(self.grid[idx[j - 1]])))
            k = j
        return arcs

    def smooth_mask(self, width: int = 3) -> np.ndarray:
        """True at grid points at least ``width`` cells away from every kink."""
        mask = np.ones(self.grid.size, dtype=bool)
        n = self.grid.size
        for t in self.kinks:
            k = int(np.argmin(np.abs((self.grid - t + 0.5) % 1.0 - 0.5)))
            mask[np.arange(k - width, k + width + 1) % n] = False
        return mask


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

CONFIG_FIELDS = ("cos", "sin", "f", "epsilon")


def _real(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a real number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ConfigError(name, "must be finite")
    return float(value)


def system_from_dict(data: dict) -> CircleSystem:
    """Validate ``{"cos": [...], "sin": [...], "f": x, "epsilon": y}``.

    ``cos``, ``sin`` and ``epsilon`` are optional; ``f`` defaults to 0.
    """
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    unknown = sorted(set(data) - set(CONFIG_FIELDS))
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    coeffs = {}
    for key in ("cos", "sin"):
        raw = data.get(key, [])
        if not isinstance(raw, list):
            raise ConfigError(key, "expected a list of reals")
        coeffs[key] = tuple(_real(f"{key}[{i}]", c) for i, c in enumerate(raw))
    f = _real("f", data.get("f", 0.0))
    eps = data.get("epsilon")
    if eps is not None:
        eps = _real("epsilon", eps)
        if eps <= 0:
            raise ConfigError("epsilon", "must be positive")
    return CircleSystem(PeriodicPotential(coeffs["cos"], coeffs["sin"]), f, eps)


def load_config(path: str | Path) -> CircleSystem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from exc
    return system_from_dict(data)
