import math

import numpy as np
import pytest

from circlescape.exact_stationary import solve_stationary
from circlescape.model import CircleSystem, ConfigError, PeriodicPotential
from circlescape.simulate import (
    SimConfig,
    SimulationError,
    first_passage,
    resolve_dt,
    run_ensemble,
    stable_dt,
)
from circlescape.systems import single_well


def test_bitwise_reproducible():
    sys = single_well(1.5, 0.05)
    cfg = SimConfig(horizon=2.0, n_paths=8, seed=11)
    a, b = run_ensemble(sys, cfg), run_ensemble(sys, cfg)
    assert np.array_equal(a.winding, b.winding)
    assert np.array_equal(a.histogram, b.histogram)


def test_seed_changes_result():
    sys = single_well(1.5, 0.05)
    a = run_ensemble(sys, SimConfig(horizon=1.0, n_paths=4, seed=1))
    b = run_ensemble(sys, SimConfig(horizon=1.0, n_paths=4, seed=2))
    assert not np.array_equal(a.winding, b.winding)


def test_thread_count_does_not_matter(monkeypatch):
    sys = single_well(0.7, 0.05)
    cfg = SimConfig(horizon=1.0, n_paths=6, seed=3)
    monkeypatch.setenv("LANDSCAPE_THREADS", "1")
    one = run_ensemble(sys, cfg)
    monkeypatch.setenv("LANDSCAPE_THREADS", "4")
    four = run_ensemble(sys, cfg)
    assert np.array_equal(one.winding, four.winding)
    assert np.array_equal(one.histogram, four.histogram)


def test_flux_is_total_winding_over_time():
    st = run_ensemble(single_well(2.0, 0.05), SimConfig(horizon=3.0, n_paths=10, burn_in=0.5))
    assert st.flux == pytest.approx(math.fsum(st.winding) / (10 * st.observed_time), rel=1e-15)
    assert st.observed_time == pytest.approx(2.5)


def test_free_diffusion_is_uniform():
    sys = CircleSystem(PeriodicPotential(), 0.0, 0.1)
    st = run_ensemble(sys, SimConfig(horizon=20.0, n_paths=40, dt=1e-3, n_bins=10))
    assert np.max(np.abs(st.histogram - 0.1)) < 0.01
    assert abs(st.flux) < 3 * st.flux_stderr


def test_constant_drift_flux_is_exact():
    # no potential: displacement is f t + Gaussian noise
    sys = CircleSystem(PeriodicPotential(), 0.8, 0.02)
    st = run_ensemble(sys, SimConfig(horizon=10.0, n_paths=50, dt=1e-3))
    assert st.flux == pytest.approx(0.8, abs=3 * math.sqrt(2 * 0.02 / 10 / 50))


def test_flux_agrees_with_exact_solution():
    sys = single_well(1.2, 0.05)
    exact = solve_stationary(sys).flux
    st = run_ensemble(sys, SimConfig(horizon=40.0, n_paths=64, dt=2.5e-4, burn_in=1.0, seed=5))
    assert abs(st.flux - exact) < 3 * st.flux_stderr


def test_histogram_tracks_density():
    sys = single_well(0.5, 0.1)
    sol = solve_stationary(sys)
    st = run_ensemble(sys, SimConfig(horizon=40.0, n_paths=64, dt=1e-3, burn_in=2.0, n_bins=20, seed=2))
    centers = 0.5 * (st.bin_edges[1:] + st.bin_edges[:-1])
    assert np.max(np.abs(st.histogram * 20 - sol.density(centers))) < 0.15


class TestStepSize:
    def test_default_respects_safeguard(self):
        sys = single_well(5.0, 0.01)
        dt = resolve_dt(sys, SimConfig(horizon=1.0))
        assert dt <= stable_dt(sys)
        assert stable_dt(sys) == pytest.approx(0.1 * 0.01 / 36.0, rel=1e-6)

    def test_oversized_step_rejected(self):
        sys = single_well(2.0, 0.01)
        with pytest.raises(SimulationError):
            resolve_dt(sys, SimConfig(horizon=1.0, dt=0.1))

    def test_force_warns(self):
        sys = single_well(2.0, 0.01)
        with pytest.warns(RuntimeWarning):
            assert resolve_dt(sys, SimConfig(horizon=1.0, dt=0.1, force=True)) == 0.1

    def test_needs_epsilon(self):
        with pytest.raises(ConfigError):
            run_ensemble(single_well(1.0), SimConfig(horizon=1.0))


@pytest.mark.parametrize(
    "kw",
    [dict(horizon=0.0), dict(horizon=1.0, n_paths=0), dict(horizon=1.0, burn_in=1.0), dict(horizon=1.0, dt=-1.0)],
)
def test_config_validation(kw):
    with pytest.raises(SimulationError):
        SimConfig(**kw)


def test_symmetric_two_sided_exit():
    # f = 0: both saddles are reached equally often and equally fast
    # (a one-sided target would have an infinite mean on the lifted line)
    sys = single_well(0.0, 0.1)
    ps = first_passage(sys, SimConfig(horizon=200.0, n_paths=400, dt=1e-3, seed=4), 0.0, 0.5, -0.5)
    assert ps.censored == 0
    assert ps.times.size + ps.lower_times.size == 400
    assert abs(ps.times.size - 200) < 3 * 10  # binomial sd = 10
    up, down = ps.times, ps.lower_times
    se = math.hypot(up.std(ddof=1) / math.sqrt(up.size), down.std(ddof=1) / math.sqrt(down.size))
    assert abs(up.mean() - down.mean()) < 3 * se


def test_censoring_is_counted():
    sys = single_well(0.5, 0.01)
    ps = first_passage(sys, SimConfig(horizon=0.5, n_paths=5), 1 / 12, 5 / 12)
    assert ps.censored == 5
    assert math.isnan(ps.mean)


def test_passage_bounds_validated():
    with pytest.raises(SimulationError):
        first_passage(single_well(0.5, 0.1), SimConfig(horizon=1.0), 0.5, 0.4)


def test_histogram_l1_against_exact_bin_masses():
    # ~1e8 binned samples at eps = 0.05
    sys = single_well(2.0, 0.05)
    st = run_ensemble(sys, SimConfig(horizon=500.0, n_paths=100, burn_in=1.0, n_bins=50, seed=8))
    assert st.n_samples >= 0.99e8
    sol = solve_stationary(sys)
    fine = (np.arange(50 * 64) + 0.5) / (50 * 64)
    mass = sol.density(fine).reshape(50, 64).mean(axis=1) / 50
    assert np.abs(st.histogram - mass).sum() < 0.02
