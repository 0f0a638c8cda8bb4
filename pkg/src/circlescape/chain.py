"""
The emergent jump process between attractors and the pasted global landscape.

Rates between neighbouring wells behave like ``exp(-V(i,j)/eps)``, so at
small eps they span hundreds of orders of magnitude.  Everything here is
therefore carried as log-rates: the stationary law is computed by the
Grassmann-Taksar-Heyman elimination, which needs only sums, products and
quotients of positive numbers and so runs unchanged in the log domain.

The eps -> 0 exponents ``W_i = -lim eps log pi_i`` are min-plus sums over
spanning in-trees rooted at ``i`` (the Markov chain tree theorem with
(+, x) replaced by (min, +)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .attractors import AttractorGraph, action_from, barriers, kramers_rate
from .model import LandscapeError, LandscapeFn, tilted_potential, uniform_grid

EQUILIBRIUM_TOL = 1e-10
TIE_TOL = 1e-12


class ReducibleChainError(LandscapeError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteChain:
    """Jump process on N states given by its off-diagonal log-rates.

    ``exponents`` (V matrix, inf where there is no edge) and ``epsilon``
    are kept when the chain comes from barriers.  ``revolution`` lists,
    for chains built on the circle, the (forward, backward) barrier pair
    of every step i -> i+1 around one turn, channel by channel.
    """

    log_rates: np.ndarray
    exponents: np.ndarray | None = None
    epsilon: float | None = None
    revolution: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        lr = np.array(self.log_rates, dtype=float)
        if lr.ndim != 2 or lr.shape[0] != lr.shape[1]:
            raise ValueError("log_rates must be a square matrix")
        np.fill_diagonal(lr, -np.inf)
        if np.any(np.isnan(lr)) or np.any(lr == np.inf):
            raise ValueError("log_rates must be finite or -inf")
        lr.setflags(write=False)
        object.__setattr__(self, "log_rates", lr)

    @property
    def n(self) -> int:
        return self.log_rates.shape[0]

    @property
    def rates(self) -> np.ndarray:
        """Generator K: k_ij >= 0 off the diagonal, rows summing to zero."""
        k = np.exp(self.log_rates)
        np.fill_diagonal(k, 0.0)
        np.fill_diagonal(k, -k.sum(axis=1))
        return k

    @property
    def adjacency(self) -> np.ndarray:
        return np.isfinite(self.log_rates)

    @classmethod
    def from_rates(cls, k) -> "DiscreteChain":
        k = np.array(k, dtype=float)
        off = ~np.eye(k.shape[0], dtype=bool)
        if np.any(k[off] < 0):
            raise ValueError("off-diagonal rates must be non-negative")
        with np.errstate(divide="ignore"):
            lr = np.where(off & (k > 0), np.log(np.where(k > 0, k, 1.0)), -np.inf)
        return cls(lr)

    @classmethod
    def from_exponents(cls, v, epsilon: float, log_prefactors=None) -> "DiscreteChain":
        """k_ij = p_ij exp(-V_ij/eps); unit prefactors unless given."""
        v = np.array(v, dtype=float)
        np.fill_diagonal(v, np.inf)
        lr = -v / epsilon
        if log_prefactors is not None:
            lr = lr + np.asarray(log_prefactors, dtype=float)
        return cls(lr, exponents=v, epsilon=epsilon)


def build_chain(g: AttractorGraph, epsilon: float, with_prefactor: bool = False) -> DiscreteChain:
    """Rates between neighbouring attractors; parallel channels are summed."""
    if g.n < 2:
        raise ValueError("a chain needs at least two attractors")
    lr = np.full((g.n, g.n), -np.inf)
    v = np.full((g.n, g.n), np.inf)
    for i in range(g.n):
        for j in {(i + 1) % g.n, (i - 1) % g.n}:
            r = kramers_rate(g, i, j, epsilon, with_prefactor)
            lr[i, j] = r.log_rate
            v[i, j] = r.exponent
    heights = {(b.source, b.direction): b.height for b in barriers(g)}
    rev = tuple((heights[(i, "cw")], heights[((i + 1) % g.n, "ccw")]) for i in range(g.n))
    return DiscreteChain(lr, exponents=v, epsilon=epsilon, revolution=rev)


def _check_irreducible(chain: DiscreteChain):
    ncomp, _ = connected_components(chain.adjacency.astype(int), directed=True, connection="strong")
    if ncomp != 1:
        raise ReducibleChainError(f"chain splits into {ncomp} communicating classes")


def log_stationary_pi(chain: DiscreteChain) -> np.ndarray:
    """log pi with pi K = 0, sum pi = 1, by log-domain GTH elimination."""
    _check_irreducible(chain)
    a = np.array(chain.log_rates)
    n = chain.n
    out_rate = np.empty(n)
    for m in range(n - 1, 0, -1):
        s = logsumexp(a[m, :m])
        out_rate[m] = s
        # fold state m into the remaining ones: k_ij += k_im k_mj / s
        with np.errstate(invalid="ignore"):
            via = a[:m, m, None] + a[None, m, :m] - s
        via = np.where(np.isnan(via), -np.inf, via)
        a[:m, :m] = np.logaddexp(a[:m, :m], via)
    log_pi = np.empty(n)
    log_pi[0] = 0.0
    for m in range(1, n):
        log_pi[m] = logsumexp(log_pi[:m] + a[:m, m]) - out_rate[m]
    return log_pi - logsumexp(log_pi)


def stationary_pi(chain: DiscreteChain) -> np.ndarray:
    """Stationary distribution (entries may underflow; see log_stationary_pi)."""
    return np.exp(log_stationary_pi(chain))


# ---------------------------------------------------------------------------
# min-plus tree exponents
# ---------------------------------------------------------------------------


def min_tree_exponents(v) -> np.ndarray:
    """W_i = min over spanning in-trees rooted at i of the summed V(edge).

    Exhaustive branch-and-bound over successor choices; exact for any
    graph, fast for N <= 8 on complete graphs and N <= 12 on the cycle.
    Unreachable roots get +inf.
    """
    v = np.array(v, dtype=float)
    n = v.shape[0]
    np.fill_diagonal(v, np.inf)
    succ_opts = [sorted((j for j in range(n) if np.isfinite(v[i, j])), key=lambda j: v[i, j]) for i in range(n)]
    cheapest = np.array([min((v[i, j] for j in succ_opts[i]), default=np.inf) for i in range(n)])
    w = np.full(n, np.inf)
    for root in range(n):
        others = [i for i in range(n) if i != root]
        succ = {}
        best = [np.inf]

        def creates_cycle(node, target):
            while target in succ:
                if target == node:
                    return True
                target = succ[target]
            return target == node

        def search(k, total):
            if k == len(others):
                best[0] = min(best[0], total)
                return
            rest = sum(cheapest[i] for i in others[k:])
            if total + rest >= best[0]:
                return
            node = others[k]
            for t in succ_opts[node]:
                if total + v[node, t] + (rest - cheapest[node]) >= best[0]:
                    break
                if creates_cycle(node, t):
                    continue
                succ[node] = t
                search(k + 1, total + v[node, t])
                del succ[node]

        search(0, 0.0)
        w[root] = best[0]
    return w


@dataclass(frozen=True, eq=False)
class ChainAsymptotics:
    """Stationary law at the chain's eps and the eps -> 0 exponents."""

    pi: np.ndarray
    log_pi: np.ndarray
    W: np.ndarray  # shifted, min W = 0
    W_raw: np.ndarray
    equilibrium: bool
    defect: float


def chain_exponents(chain: DiscreteChain) -> ChainAsymptotics:
    if chain.exponents is None:
        raise ValueError("chain carries no barrier exponents")
    w_raw = min_tree_exponents(chain.exponents)
    log_pi = log_stationary_pi(chain)
    eq = equilibrium_test(chain)
    return ChainAsymptotics(np.exp(log_pi), log_pi, w_raw - w_raw.min(), w_raw, eq.equilibrium, eq.defect)


# ---------------------------------------------------------------------------
# detailed balance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquilibriumReport:
    equilibrium: bool
    defect: float  # barrier units if exponents are known, else -log(cycle rate ratio)


def _circle_order(adj: np.ndarray) -> list[int] | None:
    n = adj.shape[0]
    if n < 3:
        return None
    for i in range(n):
        if not (adj[i, (i + 1) % n] and adj[(i + 1) % n, i]):
            return None
    if adj.sum() != 2 * n:
        return None
    return list(range(n))


def equilibrium_test(chain: DiscreteChain) -> EquilibriumReport:
    """Kolmogorov cycle criterion.

    On the circle the defect is the signed difference of forward and
    backward barrier sums around one turn, e.g. for three states
    V(1,2)+V(2,3)+V(3,1) - V(2,1)-V(3,2)-V(1,3).
    """
    if chain.revolution is not None:
        d = float(sum(fwd - bwd for fwd, bwd in chain.revolution))
        return EquilibriumReport(abs(d) < EQUILIBRIUM_TOL, d)
    order = _circle_order(chain.adjacency)
    if order is not None:
        n = len(order)
        if chain.exponents is not None:
            x = chain.exponents
            sign = 1.0
        else:
            x, sign = chain.log_rates, -1.0
        d = sign * float(sum(x[i, (i + 1) % n] - x[(i + 1) % n, i] for i in order))
        return EquilibriumReport(abs(d) < EQUILIBRIUM_TOL, d)
    return _kolmogorov_general(chain)


def _kolmogorov_general(chain: DiscreteChain) -> EquilibriumReport:
    """Fit potentials on a spanning tree, then test every other edge."""
    lr = chain.log_rates
    adj = chain.adjacency
    if np.any(adj != adj.T):
        return EquilibriumReport(False, math.inf)
    n = chain.n
    pot = np.full(n, np.nan)
    pot[0] = 0.0
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if np.isnan(pot[j]):
                # detailed balance: pi_i k_ij = pi_j k_ji
                pot[j] = pot[i] + lr[i, j] - lr[j, i]
                stack.append(j)
    worst = 0.0
    for i, j in zip(*np.nonzero(adj)):
        gap = pot[i] + lr[i, j] - pot[j] - lr[j, i]
        if abs(gap) > abs(worst):
            worst = gap
    scale = chain.epsilon if chain.exponents is not None and chain.epsilon else 1.0
    d = -float(worst) * scale
    return EquilibriumReport(abs(d) < EQUILIBRIUM_TOL, d)


# ---------------------------------------------------------------------------
# lambda-surgery and pasting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lift:
    source: int
    target: int
    delta_mu: float


def lambda_surgery_lifts(asym: ChainAsymptotics, chain: DiscreteChain) -> list[Lift]:
    """Free-energy lift log(pi_i k_ij) - log(pi_j k_ji) for each step i -> i+1.

    For chains without circle order every adjacent pair i < j is listed.
    """
    lp, lr = asym.log_pi, chain.log_rates
    n = chain.n
    if chain.revolution is not None or _circle_order(chain.adjacency) is not None:
        pairs = [(i, (i + 1) % n) for i in range(n)]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if chain.adjacency[i, j]]
    return [Lift(i, j, float(lp[i] + lr[i, j] - lp[j] - lr[j, i])) for i, j in pairs]


def total_lift(lifts: list[Lift]) -> float:
    return float(sum(l.delta_mu for l in lifts))


@dataclass(frozen=True, eq=False)
class GlobalLandscape:
    """W(x) = min_i (W_i + V(i, x)) with its branch bookkeeping.

    ``naive`` is the tilted potential on the circle cut at the ccw boundary
    of basin 0, i.e. local landscapes matched saddle by saddle going cw; it
    closes up only in equilibrium, where it coincides with W.
    """

    W: LandscapeFn
    branch: np.ndarray
    lifts: list[Lift]
    plateau_kinks: np.ndarray
    ties: np.ndarray
    naive: LandscapeFn
    naive_jump: float
    local: list[LandscapeFn] = field(default_factory=list)


def paste_global(
    g: AttractorGraph,
    asym: ChainAsymptotics,
    grid_size: int = 4096,
    chain: DiscreteChain | None = None,
) -> GlobalLandscape:
    theta = uniform_grid(grid_size)
    if g.n == 1:
        w_i = np.zeros(1)
    else:
        w_i = np.asarray(asym.W, dtype=float)
    actions = np.stack([action_from(g, i, theta) for i in range(g.n)])
    cand = w_i[:, None] + actions
    branch = np.argmin(cand, axis=0)
    w = cand[branch, np.arange(theta.size)]
    srt = np.sort(cand, axis=0)
    ties = theta[(srt[1] - srt[0] < TIE_TOL) if g.n > 1 else np.zeros(theta.size, bool)]
    wl = LandscapeFn.sampled(theta, w)

    # a plateau kink joins a flat piece to a sloped one
    plateau = []
    h = 1.0 / grid_size
    for t in wl.kinks:
        k = int(round(t * grid_size))
        left = (w[(k - 3) % grid_size] - w[(k - 5) % grid_size]) / (2 * h)
        right = (w[(k + 5) % grid_size] - w[(k + 3) % grid_size]) / (2 * h)
        if min(abs(left), abs(right)) < 1e-8 * (1.0 + max(abs(left), abs(right))):
            plateau.append(t)

    cut = g.saddle_ccw[0]
    lifted = cut + np.mod(theta - cut, 1.0)
    naive_vals = tilted_potential(g.system, lifted)
    naive_vals = naive_vals - tilted_potential(g.system, g.attractors[int(np.argmin(w_i))].theta)
    naive_vals = naive_vals - naive_vals.min() + w.min()
    naive = LandscapeFn(theta, naive_vals)

    lifts = lambda_surgery_lifts(asym, chain) if chain is not None else []
    local = [LandscapeFn(theta, actions[i]) for i in range(g.n)]
    return GlobalLandscape(
        W=wl,
        branch=branch,
        lifts=lifts,
        plateau_kinks=np.asarray(plateau),
        ties=ties,
        naive=naive,
        naive_jump=-float(g.system.f),
        local=local,
    )


def single_well_asymptotics() -> ChainAsymptotics:
    """Trivial asymptotics for a one-attractor circle (W_0 = 0)."""
    z = np.zeros(1)
    return ChainAsymptotics(np.ones(1), z, z, z, False, math.nan)
