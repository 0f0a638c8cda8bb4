"""
Euler-Maruyama ensembles on the circle.

Positions are kept on the real line so the winding number of a path is
just its displacement; they are wrapped only when binned.  Every path owns
a Philox stream spawned from the run seed, so results do not depend on how
paths are spread over threads (``LANDSCAPE_THREADS``).
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .model import CircleSystem, LandscapeError, drift, uniform_grid

CHUNK = 1 << 16
MIN_DT = 1e-6


class SimulationError(LandscapeError, ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    n_paths: int = 100
    seed: int = 0
    dt: float | None = None
    burn_in: float = 0.0
    n_bins: int = 100
    force: bool = False

    def __post_init__(self):
        if not self.horizon > 0:
            raise SimulationError("horizon must be positive")
        if self.n_paths < 1:
            raise SimulationError("n_paths must be at least 1")
        if not 0 <= self.burn_in < self.horizon:
            raise SimulationError("burn_in must lie in [0, horizon)")
        if self.dt is not None and not self.dt > 0:
            raise SimulationError("dt must be positive")


def max_abs_drift(sys: CircleSystem) -> float:
    return float(np.max(np.abs(drift(sys, uniform_grid(2048)))))


def stable_dt(sys: CircleSystem) -> float:
    """0.1 eps / max|drift|^2, the step-size safeguard."""
    eps = sys.require_epsilon()
    m = max_abs_drift(sys)
    return math.inf if m == 0 else 0.1 * eps / (m * m)


def resolve_dt(sys: CircleSystem, cfg: SimConfig) -> float:
    eps = sys.require_epsilon()
    limit = stable_dt(sys)
    if cfg.dt is None:
        return max(min(eps / 100.0, limit), MIN_DT)
    if cfg.dt > limit:
        msg = f"dt={cfg.dt:g} exceeds the stability safeguard {limit:.3g}"
        if not cfg.force:
            raise SimulationError(msg + " (set force=True to run anyway)")
        warnings.warn(msg, RuntimeWarning)
    return cfg.dt


def _threads() -> int:
    raw = os.environ.get("LANDSCAPE_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, min(cap, int(raw)))
        except ValueError:
            pass
    return cap


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _coeffs(sys: CircleSystem):
    p = sys.potential
    a, b = p._padded()
    return np.ascontiguousarray(a), np.ascontiguousarray(b)


@numba.njit(cache=True, nogil=True)
def _drift_at(x, f, a, b):
    th = x - math.floor(x)
    up = 0.0
    for k in range(a.size):
        w = 2.0 * math.pi * (k + 1)
        up += w * (b[k] * math.cos(w * th) - a[k] * math.sin(w * th))
    return f - up


@numba.njit(cache=True, nogil=True)
def _advance(x, noise, dt, scale, f, a, b, hist):
    """Step ``noise.size`` times; bin wrapped positions when hist.size > 0."""
    nb = hist.size
    for s in range(noise.size):
        x += _drift_at(x, f, a, b) * dt + scale * noise[s]
        if nb > 0:
            k = int((x - math.floor(x)) * nb)
            if k >= nb:
                k = nb - 1
            hist[k] += 1
    return x


@numba.njit(cache=True, nogil=True)
def _advance_until(x, noise, dt, scale, f, a, b, lower, upper):
    """Step until x leaves (lower, upper); returns (x, steps used, side)."""
    for s in range(noise.size):
        x += _drift_at(x, f, a, b) * dt + scale * noise[s]
        if x >= upper:
            return x, s + 1, 1
        if x <= lower:
            return x, s + 1, -1
    return x, noise.size, 0


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Histogram of wrapped positions after burn-in and per-path windings.

    ``winding`` is the signed number of revolutions over the observation
    window, so ``flux == winding.sum() / (n_paths * observed_time)``.
    """

    histogram: np.ndarray
    bin_edges: np.ndarray
    winding: np.ndarray
    flux: float
    flux_stderr: float
    observed_time: float
    dt: float
    n_samples: int


def _one_path(gen, x0, n_burn, n_obs, dt, scale, f, a, b, n_bins):
    x = x0
    empty = np.zeros(0, dtype=np.int64)
    left = n_burn
    while left > 0:
        m = min(CHUNK, left)
        x = _advance(x, gen.standard_normal(m), dt, scale, f, a, b, empty)
        left -= m
    start = x
    hist = np.zeros(n_bins, dtype=np.int64)
    left = n_obs
    while left > 0:
        m = min(CHUNK, left)
        x = _advance(x, gen.standard_normal(m), dt, scale, f, a, b, hist)
        left -= m
    return x - start, hist


def run_ensemble(sys: CircleSystem, cfg: SimConfig) -> EnsembleStats:
    """Independent paths started uniformly on the circle."""
    eps = sys.require_epsilon()
    dt = resolve_dt(sys, cfg)
    n_burn = int(round(cfg.burn_in / dt))
    n_obs = int(round(cfg.horizon / dt)) - n_burn
    if n_obs < 1:
        raise SimulationError("observation window shorter than one step")
    a, b = _coeffs(sys)
    scale = math.sqrt(2.0 * eps * dt)
    gens = _streams(cfg.seed, cfg.n_paths)
    starts = [g.random() for g in gens]

    def job(p):
        return _one_path(gens[p], starts[p], n_burn, n_obs, dt, scale, sys.f, a, b, cfg.n_bins)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(job, range(cfg.n_paths)))
    winding = np.array([r[0] for r in results])
    counts = np.zeros(cfg.n_bins, dtype=np.int64)
    for _, h in results:
        counts += h
    t_obs = n_obs * dt
    per_path = winding / t_obs
    flux = math.fsum(winding) / (cfg.n_paths * t_obs)
    stderr = float(np.std(per_path, ddof=1) / math.sqrt(cfg.n_paths)) if cfg.n_paths > 1 else math.nan
    return EnsembleStats(
        histogram=counts / counts.sum(),
        bin_edges=np.linspace(0.0, 1.0, cfg.n_bins + 1),
        winding=winding,
        flux=flux,
        flux_stderr=stderr,
        observed_time=t_obs,
        dt=dt,
        n_samples=int(counts.sum()),
    )


@dataclass(frozen=True, eq=False)
class PassageSamples:
    """Hitting times of the upper target; exits through ``lower`` and
    paths still inside at the horizon are counted, not timed."""

    times: np.ndarray
    lower_times: np.ndarray
    censored: int
    n_paths: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.times)) if self.times.size else math.nan

    @property
    def stderr(self) -> float:
        n = self.times.size
        return float(np.std(self.times, ddof=1) / math.sqrt(n)) if n > 1 else math.nan

    @property
    def cv(self) -> float:
        return float(np.std(self.times, ddof=1) / np.mean(self.times)) if self.times.size > 1 else math.nan


def first_passage(
    sys: CircleSystem,
    cfg: SimConfig,
    start: float,
    target: float,
    lower: float = -math.inf,
) -> PassageSamples:
    """Times for lifted paths from ``start`` to first reach ``target``.

    Positions are not wrapped: ``target`` above ``start`` means escape in
    the +theta direction.  ``lower`` (below ``start``) optionally absorbs
    escapes the other way.
    """
    eps = sys.require_epsilon()
    if not lower < start < target:
        raise SimulationError("need lower < start < target")
    dt = resolve_dt(sys, cfg)
    n_max = int(round(cfg.horizon / dt))
    a, b = _coeffs(sys)
    scale = math.sqrt(2.0 * eps * dt)
    gens = _streams(cfg.seed, cfg.n_paths)

    def job(p):
        gen = gens[p]
        x, used = start, 0
        while used < n_max:
            m = min(CHUNK, n_max - used)
            x, k, side = _advance_until(x, gen.standard_normal(m), dt, scale, sys.f, a, b, lower, target)
            used += k
            if side:
                return side, used * dt
        return 0, math.nan

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(job, range(cfg.n_paths)))
    up = np.array([t for s, t in results if s == 1])
    down = np.array([t for s, t in results if s == -1])
    censored = sum(1 for s, _ in results if s == 0)
    return PassageSamples(up, down, censored, cfg.n_paths)
