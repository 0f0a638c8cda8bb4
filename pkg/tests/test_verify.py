import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circlescape.asymptotics import Regime, landscape_V, quasi_potential
from circlescape.model import LandscapeFn, uniform_grid
from circlescape.systems import single_well, three_well
from circlescape.verify import (
    FAULT_TOL,
    WKB_TOL,
    boltzmann_pair,
    epsilon_sweep,
    fd_derivatives,
    limit_cycle_pair,
    lyapunov_check,
    perturb_c0,
    run_suite,
    shape_error,
    spectral_derivatives,
    torus_product_check,
    wkb_residual,
)
from strategies import systems


def test_spectral_derivatives_exact_for_trig():
    t = uniform_grid(64)
    y = np.sin(2 * np.pi * t) + 0.5 * np.cos(6 * np.pi * t)
    d1, d2 = spectral_derivatives(y)
    assert np.allclose(d1, 2 * np.pi * np.cos(2 * np.pi * t) - 3 * np.pi * np.sin(6 * np.pi * t), atol=1e-11)
    assert np.allclose(d2, -4 * np.pi**2 * np.sin(2 * np.pi * t) - 18 * np.pi**2 * np.cos(6 * np.pi * t),
                       atol=1e-9)


def test_fd_is_fourth_order():
    errs = []
    for n in (64, 128):
        t = uniform_grid(n)
        d1, _ = fd_derivatives(np.sin(2 * np.pi * t), 1.0 / n)
        errs.append(np.max(np.abs(d1 - 2 * np.pi * np.cos(2 * np.pi * t))))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.05)


@given(st.floats(1.05, 6.0))
def test_limit_cycle_pair_solves_hierarchy(f):
    sys = single_well(f)
    phi, c0 = limit_cycle_pair(sys, 1024)
    r = wkb_residual(sys, phi, c0)
    assert r.method == "spectral"
    # C0 ~ 1/(f - sin) is analytic but its spectrum decays like ((f - sqrt(f^2-1)))^k
    assert r.passed(WKB_TOL if f > 1.5 else 1e-6)


@given(systems(f=st.floats(1.5, 3.0)))
def test_limit_cycle_pair_random_potentials(sys):
    from circlescape.model import slope_range

    lo, hi = slope_range(sys.potential)
    if not sys.f > hi + 0.5:
        return
    r = wkb_residual(sys, *limit_cycle_pair(sys, 2048))
    assert r.passed(1e-8)


def test_fault_is_detected():
    sys = single_well(2.0)
    phi, c0 = limit_cycle_pair(sys)
    r = wkb_residual(sys, phi, perturb_c0(c0))
    assert r.eikonal < WKB_TOL and r.transport > FAULT_TOL


@pytest.mark.parametrize("sys", [single_well(0.0), three_well(0.0)], ids=["single", "three"])
def test_boltzmann_pair(sys):
    assert wkb_residual(sys, *boltzmann_pair(sys)).passed()


def test_boltzmann_needs_gradient_system():
    with pytest.raises(ValueError):
        boltzmann_pair(single_well(0.3))


def test_grids_must_match():
    phi, c0 = limit_cycle_pair(single_well(2.0), 512)
    with pytest.raises(ValueError):
        wkb_residual(single_well(2.0), phi, limit_cycle_pair(single_well(2.0), 256)[1])


@pytest.mark.parametrize("sys", [single_well(0.5), three_well(0.1), single_well(-0.3)],
                         ids=["single", "three", "negative"])
def test_quasi_potential_is_lyapunov(sys):
    rep = lyapunov_check(sys, quasi_potential(sys))
    assert rep.passed and rep.violations.size == 0


@given(systems(f=st.floats(-0.8, 0.8)))
def test_quasi_potential_is_lyapunov_random(sys):
    assert lyapunov_check(sys, quasi_potential(sys, 2048)).passed


def test_v_itself_increases_along_the_flow():
    # V carries the opposite sign: it grows towards the attractor
    sys = single_well(0.5)
    assert not lyapunov_check(sys, landscape_V(sys)).passed


def test_lyapunov_excludes_kink_and_plateau_edge():
    sys = single_well(0.5)
    q = quasi_potential(sys)
    rep = lyapunov_check(sys, q)
    assert q.kinks.size == 1
    # the kink (where the plateau also ends) and the C1 join at the saddle 5/12
    assert q.kinks[0] in rep.excluded
    assert np.min(np.abs(rep.excluded - 5 / 12)) < 2e-3
    assert np.all(np.min(np.abs(rep.excluded[:, None] - np.array([5 / 12, q.kinks[0]])), axis=1) < 2e-3)
    # without kink exclusion, the corner would be differentiated across
    bare = LandscapeFn(q.grid, q.values)
    assert lyapunov_check(sys, bare).worst >= rep.worst


class TestSweep:
    def test_limit_cycle_density_converges(self):
        t = epsilon_sweep(single_well(2.0), [0.1, 0.05, 0.02])
        assert t.regime is Regime.LIMIT_CYCLE
        assert t.density_monotone
        assert np.all(np.diff(np.abs(t.column("flux") - math.sqrt(3))) < 0)

    def test_fixed_point_shape_converges(self):
        t = epsilon_sweep(single_well(0.5), [0.1, 0.05, 0.02])
        assert t.regime is Regime.FIXED_POINTS
        assert t.shape_monotone
        assert np.all(np.isnan(t.column("density_error")))

    def test_order_enforced(self):
        with pytest.raises(ValueError):
            epsilon_sweep(single_well(2.0), [0.01, 0.1])

    def test_shape_error_matches_sweep_row(self):
        err, offset = shape_error(single_well(0.5), 0.05)
        row = epsilon_sweep(single_well(0.5), [0.05]).rows[0]
        assert err == pytest.approx(row.shape_error) and offset == pytest.approx(row.offset)


class TestTorus:
    def test_independent_coordinates_pass(self):
        rep = torus_product_check(1.0, math.sqrt(2), 0.1, n_paths=400_000, seed=3)
        assert rep.passed()
        assert rep.histogram.sum() == pytest.approx(1.0)

    def test_zero_drift_passes(self):
        assert torus_product_check(0.0, 0.0, 0.1, n_paths=400_000, seed=4).passed()

    def test_shared_noise_fails(self):
        rep = torus_product_check(1.0, math.sqrt(2), 0.1, n_paths=50_000, seed=5, shared_noise=True)
        assert not rep.passed()
        assert rep.joint_vs_product > 0.5

    def test_too_short_to_mix_fails(self):
        # started at the origin, the law has not spread over the torus yet
        assert not torus_product_check(0.3, 0.7, 0.1, n_paths=50_000, horizon=0.2).passed()


def test_full_suite_passes():
    results = run_suite(quick=True)
    assert len(results) == 16
    failed = [r.name for r in results if not r.passed]
    assert not failed
    json.dumps([r.to_dict() for r in results])
