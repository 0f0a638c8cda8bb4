"""
Machine-checkable consistency tests between the solvers.

Conventions: ``phi`` is a rate function (density ~ C0 exp(-phi/eps)), so
the eikonal equation reads ``C0 (phi' + F) phi' = 0`` and the transport
equation ``C0' (2 phi' + F) + C0 (phi'' + F') = 0``.  A Lyapunov function
decreases along the flow: ``F L' <= 0``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import Regime, classify, limiting_density, quasi_potential
from .attractors import build_graph
from .chain import build_chain, chain_exponents, paste_global, single_well_asymptotics
from .exact_stationary import solve_stationary
from .model import CircleSystem, LandscapeFn, drift, drift_slope, eval_potential, uniform_grid
from .simulate import _threads
from .systems import single_well, three_well

SPECTRAL_CUTOFF = 1e-13
WKB_TOL = 1e-10
FAULT_TOL = 1e-2
LYAPUNOV_TOL = 1e-6
TORUS_TOL = 0.02


# ---------------------------------------------------------------------------
# derivatives of sampled periodic functions
# ---------------------------------------------------------------------------


def _is_uniform(grid: np.ndarray) -> bool:
    n = grid.size
    return bool(np.allclose(grid, np.arange(n) / n, atol=1e-12, rtol=0))


def spectral_derivatives(values: np.ndarray, orders=(1, 2)) -> list[np.ndarray]:
    """Fourier derivatives on a uniform periodic grid.

    Modes below ``SPECTRAL_CUTOFF`` times the largest one are dropped so
    round-off is not amplified by k^2.
    """
    n = values.size
    c = np.fft.rfft(values)
    mag = np.abs(c[1:])
    if mag.size:
        c[1:][mag < SPECTRAL_CUTOFF * max(mag.max(), 1e-300)] = 0.0
    if n % 2 == 0:
        c[-1] = 0.0
    ik = 2j * np.pi * np.arange(c.size)
    return [np.fft.irfft(c * ik**m, n) for m in orders]


def fd_derivatives(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order centred first and second differences, periodic."""
    r = lambda k: np.roll(values, -k)  # noqa: E731
    d1 = (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)
    d2 = (-r(2) + 16 * r(1) - 30 * values + 16 * r(-1) - r(-2)) / (12 * h * h)
    return d1, d2


def _derivatives(fn: LandscapeFn):
    """(d1, d2, usable-point mask, method name)."""
    if not _is_uniform(fn.grid):
        raise ValueError("derivatives need a uniform grid starting at 0")
    if fn.kinks.size == 0:
        d1, d2 = spectral_derivatives(np.asarray(fn.values))
        return d1, d2, np.ones(fn.grid.size, bool), "spectral"
    d1, d2 = fd_derivatives(np.asarray(fn.values), fn.spacing)
    return d1, d2, fn.smooth_mask(width=4), "fd4"


# ---------------------------------------------------------------------------
# WKB hierarchy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WkbResidual:
    eikonal: float
    transport: float
    n_points: int
    method: str

    def passed(self, tol: float = WKB_TOL) -> bool:
        return self.eikonal < tol and self.transport < tol


def wkb_residual(sys: CircleSystem, phi: LandscapeFn, c0: LandscapeFn) -> WkbResidual:
    """Sup residuals of the eikonal and transport equations over smooth points."""
    if phi.grid.shape != c0.grid.shape or not np.allclose(phi.grid, c0.grid):
        raise ValueError("phi and C0 must share a grid")
    p1, p2, m1, how1 = _derivatives(phi)
    c1, _, m2, how2 = _derivatives(c0)
    theta = phi.grid
    big_f = drift(sys, theta)
    big_f1 = drift_slope(sys, theta)
    c = np.asarray(c0.values)
    eik = np.abs(c * (p1 + big_f) * p1)
    tra = np.abs(c1 * (2 * p1 + big_f) + c * (p2 + big_f1))
    mask = m1 & m2
    method = how1 if how1 == how2 else f"{how1}+{how2}"
    return WkbResidual(float(eik[mask].max()), float(tra[mask].max()), int(mask.sum()), method)


def limit_cycle_pair(sys: CircleSystem, grid_size: int = 4096) -> tuple[LandscapeFn, LandscapeFn]:
    """phi = 0 and C0 = J/F with J the deterministic rotation number."""
    dens = limiting_density(sys, grid_size).density
    theta = dens.grid
    return LandscapeFn(theta, np.zeros(theta.size)), dens


def boltzmann_pair(sys: CircleSystem, grid_size: int = 4096) -> tuple[LandscapeFn, LandscapeFn]:
    """phi = U - min U and a constant C0 (gradient systems only)."""
    if sys.f != 0:
        raise ValueError("the Boltzmann pair needs f = 0")
    theta = uniform_grid(grid_size)
    u = eval_potential(sys.potential, theta)
    return LandscapeFn(theta, u - u.min()), LandscapeFn(theta, np.ones(theta.size))


def perturb_c0(c0: LandscapeFn, amplitude: float = 0.1) -> LandscapeFn:
    """C0 * (1 + amplitude sin 2 pi theta): a deliberately wrong prefactor."""
    return LandscapeFn(c0.grid, c0.values * (1 + amplitude * np.sin(2 * np.pi * c0.grid)), c0.kinks)


# ---------------------------------------------------------------------------
# Lyapunov property
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LyapunovReport:
    passed: bool
    violations: np.ndarray
    excluded: np.ndarray
    worst: float


def _plateau_edges(values: np.ndarray) -> np.ndarray:
    """Indices where an exactly flat run meets a sloped piece.

    The join is C1 but the curvature jumps, which costs a difference
    stencil straddling it one order of accuracy.
    """
    v = np.asarray(values)
    flat = np.abs(np.roll(v, -1) - v) <= 1e-13 * (1.0 + np.abs(v).max())
    if flat.all() or not flat.any():
        return np.empty(0, dtype=int)
    return np.flatnonzero(flat != np.roll(flat, 1))


def lyapunov_check(sys: CircleSystem, landscape: LandscapeFn, tol: float = LYAPUNOV_TOL) -> LyapunovReport:
    """F L' <= tol at every grid point away from kinks and plateau edges."""
    d1, _, mask, _ = _derivatives(landscape)
    n = landscape.grid.size
    edges = _plateau_edges(landscape.values) if landscape.kinks.size else np.empty(0, dtype=int)
    for k in edges:
        mask[np.arange(k - 4, k + 5) % n] = False
    prod = drift(sys, landscape.grid) * d1
    bad = mask & (prod > tol)
    worst = float(prod[mask].max()) if mask.any() else -math.inf
    excluded = np.sort(np.concatenate([landscape.kinks, landscape.grid[edges]]))
    return LyapunovReport(not bad.any(), landscape.grid[bad], excluded, worst)


# ---------------------------------------------------------------------------
# epsilon sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    shape_error: float  # sup |(-eps log u - min) - (max V - V)|
    offset: float  # min of -eps log u
    density_error: float  # sup |u - u0|, limit cycle only
    flux: float


@dataclass(frozen=True, eq=False)
class SweepTable:
    rows: list[SweepRow]
    regime: Regime

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def shape_monotone(self) -> bool:
        return bool(np.all(np.diff(self.column("shape_error")) < 0))

    @property
    def density_monotone(self) -> bool:
        d = self.column("density_error")
        return bool(np.all(np.isfinite(d)) and np.all(np.diff(d) < 0))


def shape_error(sys: CircleSystem, epsilon: float, grid_size: int | None = None) -> tuple[float, float]:
    """(sup shape error of -eps log u against max V - V, offset)."""
    s = sys.with_epsilon(epsilon)
    return _shape_vs_quasi(s, solve_stationary(s, grid_size))


def _shape_vs_quasi(s: CircleSystem, sol) -> tuple[float, float]:
    e = -sol.epsilon * np.asarray(sol.log_density.values)
    offset = float(e.min())
    q = quasi_potential(s, 4096)
    return float(np.max(np.abs(e - offset - q(sol.grid)))), offset


def epsilon_sweep(sys: CircleSystem, eps_list, grid_size: int | None = None) -> SweepTable:
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    regime = classify(sys.with_epsilon(eps_list[0]), 256).regime
    u0 = limiting_density(sys) if regime is Regime.LIMIT_CYCLE else None

    def row(eps):
        s = sys.with_epsilon(eps)
        sol = solve_stationary(s, grid_size)
        err, offset = _shape_vs_quasi(s, sol)
        dens = math.nan
        if u0 is not None:
            dens = float(np.max(np.abs(sol.density.values - u0.density(sol.grid))))
        return SweepRow(eps, err, offset, dens, sol.flux)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(row, eps_list))
    return SweepTable(rows, regime)


# ---------------------------------------------------------------------------
# decoupled torus
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TorusReport:
    joint_vs_product: float
    joint_vs_uniform: float
    marginal_vs_uniform: tuple[float, float]
    histogram: np.ndarray

    def passed(self, tol: float = TORUS_TOL) -> bool:
        return (
            self.joint_vs_product < tol
            and self.joint_vs_uniform < tol
            and max(self.marginal_vs_uniform) < tol
        )


def torus_product_check(
    theta_drift: float,
    xi_drift: float,
    epsilon: float,
    d1: float = 1.0,
    d2: float = 1.0,
    *,
    n_paths: int = 400_000,
    horizon: float = 4.0,
    dt: float = 0.02,
    n_bins: int = 8,
    seed: int = 0,
    shared_noise: bool = False,
) -> TorusReport:
    """Simulate two independent circle diffusions from (0, 0) and bin the
    final positions on an ``n_bins`` x ``n_bins`` grid (one sample per path).

    ``shared_noise`` drives both coordinates with the same Brownian motion,
    which correlates them and must be flagged.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n_steps = max(1, int(round(horizon / dt)))
    s1 = math.sqrt(2 * epsilon * d1 * dt)
    s2 = math.sqrt(2 * epsilon * d2 * dt)
    x = np.zeros(n_paths)
    y = np.zeros(n_paths)
    for _ in range(n_steps):
        n1 = rng.standard_normal(n_paths)
        n2 = n1 if shared_noise else rng.standard_normal(n_paths)
        x += theta_drift * dt + s1 * n1
        y += xi_drift * dt + s2 * n2
    ix = np.minimum((np.mod(x, 1.0) * n_bins).astype(int), n_bins - 1)
    iy = np.minimum((np.mod(y, 1.0) * n_bins).astype(int), n_bins - 1)
    joint = np.bincount(ix * n_bins + iy, minlength=n_bins * n_bins).reshape(n_bins, n_bins) / n_paths
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    flat = 1.0 / n_bins
    return TorusReport(
        joint_vs_product=float(np.abs(joint - np.outer(px, py)).sum()),
        joint_vs_uniform=float(np.abs(joint - flat * flat).sum()),
        marginal_vs_uniform=(float(np.abs(px - flat).sum()), float(np.abs(py - flat).sum())),
        histogram=joint,
    )


# ---------------------------------------------------------------------------
# suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value,
                "threshold": self.threshold, "detail": self.detail}


def _global_w(sys: CircleSystem) -> LandscapeFn:
    g = build_graph(sys)
    if g.n == 1:
        return paste_global(g, single_well_asymptotics()).W
    chain = build_chain(g, 1e-3)
    return paste_global(g, chain_exponents(chain), chain=chain).W


def run_suite(quick: bool = False) -> list[CheckResult]:
    """All consistency checks on the built-in single-well and three-well systems.

    ``quick`` drops the smallest noise level from each sweep.
    """
    out: list[CheckResult] = []

    lc = single_well(2.0)
    phi, c0 = limit_cycle_pair(lc)
    r = wkb_residual(lc, phi, c0)
    out.append(CheckResult("wkb_limit_cycle", r.passed(), max(r.eikonal, r.transport), WKB_TOL,
                           {"eikonal": r.eikonal, "transport": r.transport}))
    r = wkb_residual(lc, phi, perturb_c0(c0))
    out.append(CheckResult("wkb_fault_detected", r.transport > FAULT_TOL, r.transport, FAULT_TOL))
    for name, s in (("single_well", single_well(0.0)), ("three_well", three_well(0.0))):
        phi, c0 = boltzmann_pair(s)
        r = wkb_residual(s, phi, c0)
        out.append(CheckResult(f"wkb_boltzmann_{name}", r.passed(), max(r.eikonal, r.transport), WKB_TOL,
                               {"eikonal": r.eikonal, "transport": r.transport}))

    for name, s in (("single_well_f0.5", single_well(0.5)), ("three_well_f0.1", three_well(0.1))):
        q = quasi_potential(s)
        rep = lyapunov_check(s, q)
        out.append(CheckResult(f"lyapunov_quasi_potential_{name}", rep.passed, rep.worst, LYAPUNOV_TOL))
        rep = lyapunov_check(s, _global_w(s))
        out.append(CheckResult(f"lyapunov_global_W_{name}", rep.passed, rep.worst, LYAPUNOV_TOL))
        neg = LandscapeFn(q.grid, -q.values, q.kinks)
        rep = lyapunov_check(s, neg)
        out.append(CheckResult(f"lyapunov_sign_flip_detected_{name}", not rep.passed, rep.worst, LYAPUNOV_TOL))

    t = epsilon_sweep(single_well(2.0), [0.1, 0.05, 0.02] if quick else [0.1, 0.05, 0.02, 0.01])
    out.append(CheckResult("sweep_limit_cycle_density", t.density_monotone,
                           float(t.rows[-1].density_error), math.nan,
                           {"density_error": t.column("density_error").tolist()}))
    t = epsilon_sweep(single_well(0.5), [0.1, 0.05] if quick else [0.1, 0.05, 0.02])
    out.append(CheckResult("sweep_fixed_point_shape", t.shape_monotone,
                           float(t.rows[-1].shape_error), math.nan,
                           {"shape_error": t.column("shape_error").tolist()}))

    sol = solve_stationary(single_well(2.0, 1e-3))
    rel = abs(sol.flux - math.sqrt(3.0)) / math.sqrt(3.0)
    out.append(CheckResult("flux_rotation_number", rel < 0.01, rel, 0.01, {"flux": sol.flux}))

    paths = 400_000  # L1 sampling noise over 64 cells is ~0.01 at this size
    for name, (a, b) in (("irrational", (1.0, math.sqrt(2.0))), ("still", (0.0, 0.0))):
        rep = torus_product_check(a, b, 0.1, n_paths=paths, seed=1)
        out.append(CheckResult(f"torus_product_{name}", rep.passed(), rep.joint_vs_product, TORUS_TOL,
                               {"joint_vs_uniform": rep.joint_vs_uniform}))
    rep = torus_product_check(1.0, math.sqrt(2.0), 0.1, n_paths=paths, seed=2, shared_noise=True)
    out.append(CheckResult("torus_shared_noise_detected", not rep.passed(), rep.joint_vs_product, TORUS_TOL))
    return out
