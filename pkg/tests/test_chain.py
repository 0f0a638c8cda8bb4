import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from circlescape.asymptotics import quasi_potential
from circlescape.attractors import build_graph
from circlescape.chain import (
    DiscreteChain,
    ReducibleChainError,
    build_chain,
    chain_exponents,
    equilibrium_test,
    lambda_surgery_lifts,
    log_stationary_pi,
    min_tree_exponents,
    paste_global,
    single_well_asymptotics,
    stationary_pi,
    total_lift,
)
from circlescape.figures import uneven_three_well
from circlescape.systems import single_well, three_well
from oracles import arborescence_W, dense_null_pi, three_state_W, three_state_pi


def rate_matrices(n):
    return arrays(float, (n, n), elements=st.floats(0.05, 20.0))


def exponent_matrices(n, sparse=False):
    elems = st.one_of(st.floats(0.0, 5.0), st.just(math.inf)) if sparse else st.floats(0.0, 5.0)
    return arrays(float, (n, n), elements=elems)


@given(rate_matrices(3))
def test_gth_three_state_closed_form(k):
    assert np.allclose(stationary_pi(DiscreteChain.from_rates(k)), three_state_pi(k), rtol=1e-10)


@given(st.integers(2, 7).flatmap(rate_matrices))
def test_gth_matches_null_space(k):
    chain = DiscreteChain.from_rates(k)
    pi = stationary_pi(chain)
    assert pi.sum() == pytest.approx(1.0)
    assert np.allclose(pi, dense_null_pi(k), rtol=1e-8)
    assert np.max(np.abs(pi @ chain.rates)) < 1e-12 * np.abs(chain.rates).max()


def test_gth_survives_extreme_rates():
    # rates spanning ~1300 orders of magnitude
    v = np.array([[np.inf, 1.0, 3.0], [2.0, np.inf, 1.5], [0.5, 2.5, np.inf]])
    chain = DiscreteChain.from_exponents(v, 1e-3)
    lp = log_stationary_pi(chain)
    assert np.all(np.isfinite(lp))
    w = min_tree_exponents(v)
    assert np.allclose(-1e-3 * lp, w - w.min(), atol=1e-2)


def test_reducible_chain_rejected():
    k = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0.0]])
    with pytest.raises(ReducibleChainError):
        stationary_pi(DiscreteChain.from_rates(k))


def test_bad_inputs():
    with pytest.raises(ValueError):
        DiscreteChain.from_rates([[0, -1], [1, 0]])
    with pytest.raises(ValueError):
        DiscreteChain(np.zeros((2, 3)))


@given(exponent_matrices(3))
def test_min_tree_three_state_formula(v):
    assert np.allclose(min_tree_exponents(v), three_state_W(v))


@given(st.integers(3, 5).flatmap(lambda n: exponent_matrices(n, sparse=True)))
def test_min_tree_matches_edmonds(v):
    got = min_tree_exponents(v)
    ref = arborescence_W(v)
    assert np.array_equal(np.isinf(got), np.isinf(ref))
    fin = np.isfinite(ref)
    assert np.allclose(got[fin], ref[fin])


@given(st.integers(3, 5).flatmap(exponent_matrices))
def test_tree_exponents_govern_pi(v):
    # -eps log pi -> W - min W as eps -> 0
    w = min_tree_exponents(v)
    w = w - w.min()
    errs = [np.max(np.abs(-e * log_stationary_pi(DiscreteChain.from_exponents(v, e)) - w))
            for e in (1e-2, 1e-4)]
    assert errs[1] <= 0.02 * errs[0] + 1e-9


class TestEquilibrium:
    def test_zero_force_circle_is_reversible(self):
        g = build_graph(three_well(0.0))
        eq = equilibrium_test(build_chain(g, 0.05))
        assert eq.equilibrium and abs(eq.defect) < 1e-12

    def test_tilted_circle_defect_is_minus_f(self):
        g = build_graph(three_well(0.2))
        eq = equilibrium_test(build_chain(g, 0.05))
        assert not eq.equilibrium
        assert eq.defect == pytest.approx(-0.2, abs=1e-12)

    def test_single_well_pair_defect(self):
        # two wells, four channels: the defect still counts one turn
        from circlescape.model import CircleSystem, PeriodicPotential

        sys = CircleSystem(PeriodicPotential((0.0, 0.05)), 0.1)
        eq = equilibrium_test(build_chain(build_graph(sys), 0.05))
        assert eq.defect == pytest.approx(-0.1, abs=1e-12)

    @given(arrays(float, 4, elements=st.floats(-3, 3)), arrays(float, (4, 4), elements=st.floats(0.1, 3)))
    def test_reversible_by_construction(self, pot, sym):
        # k_ij = s_ij exp(pot_i), s symmetric, has pi_i proportional to exp(-pot_i)
        s = sym + sym.T
        k = s * np.exp(pot)[:, None]
        chain = DiscreteChain.from_rates(k)
        assert equilibrium_test(chain).equilibrium
        p = np.exp(-pot)
        assert np.allclose(stationary_pi(chain), p / p.sum(), rtol=1e-9)

    def test_cycle_with_bias_is_not_reversible(self):
        k = np.array([[0, 2, 1], [1, 0, 2], [2, 1, 0.0]])
        eq = equilibrium_test(DiscreteChain.from_rates(k))
        assert not eq.equilibrium
        assert eq.defect == pytest.approx(-3 * math.log(2))

    def test_one_way_edge(self):
        k = np.array([[0, 1, 1], [0, 0, 1], [1, 1, 0.0]])
        eq = equilibrium_test(DiscreteChain.from_rates(k))
        assert not eq.equilibrium


@pytest.mark.parametrize("f, eps", [(0.1, 0.01), (0.3, 0.05), (0.0, 0.02)])
def test_lifts_sum_to_rate_product_ratio(f, eps):
    g = build_graph(three_well(f))
    chain = build_chain(g, eps, with_prefactor=True)
    lifts = lambda_surgery_lifts(chain_exponents(chain), chain)
    lr = chain.log_rates
    ratio = sum(lr[i, (i + 1) % 3] - lr[(i + 1) % 3, i] for i in range(3))
    assert total_lift(lifts) == pytest.approx(ratio, abs=1e-9)
    assert total_lift(lifts) == pytest.approx(f / eps, rel=1e-9, abs=1e-9)


def test_symmetric_three_well_lifts_are_equal():
    g = build_graph(three_well(0.1))
    chain = build_chain(g, 0.01)
    lifts = lambda_surgery_lifts(chain_exponents(chain), chain)
    assert [(l.source, l.target) for l in lifts] == [(0, 1), (1, 2), (2, 0)]
    assert np.allclose([l.delta_mu for l in lifts], 10 / 3)


def _pasted(sys, eps=0.01, n=2048):
    g = build_graph(sys)
    if g.n == 1:
        return g, paste_global(g, single_well_asymptotics(), n)
    chain = build_chain(g, eps)
    return g, paste_global(g, chain_exponents(chain), n, chain)


@pytest.mark.parametrize("sys", [single_well(0.5), three_well(0.1), three_well(0.3), uneven_three_well()],
                         ids=["single", "three-0.1", "three-0.3", "uneven"])
def test_pasted_equals_quasi_potential(sys):
    _, gl = _pasted(sys)
    assert np.max(np.abs(gl.W.values - quasi_potential(sys, 2048).values)) < 1e-12


@given(st.floats(-0.4, 0.4).filter(lambda f: abs(f) > 1e-3))
def test_pasted_equals_quasi_potential_any_tilt(f):
    sys = three_well(f)
    _, gl = _pasted(sys, n=1024)
    assert np.max(np.abs(gl.W.values - quasi_potential(sys, 1024).values)) < 1e-12


def test_pasted_landscape_properties():
    g, gl = _pasted(three_well(0.1))
    assert 0.0 <= gl.W.values.min() < 1e-6  # grid misses the attractor by < h
    assert len(gl.plateau_kinks) == 3
    assert gl.naive_jump == pytest.approx(-0.1)
    # every attractor owns part of the minimum
    assert set(np.unique(gl.branch)) == {0, 1, 2}
    assert len(gl.local) == 3


def test_zero_force_needs_no_surgery():
    g, gl = _pasted(three_well(0.0, 0.05))
    assert np.allclose(gl.W.values, gl.naive.values, atol=1e-12)
    assert gl.plateau_kinks.size == 0
    assert np.allclose([l.delta_mu for l in gl.lifts], 0.0, atol=1e-9)


def test_build_chain_needs_two_wells():
    with pytest.raises(ValueError):
        build_chain(build_graph(single_well(0.5)), 0.01)
