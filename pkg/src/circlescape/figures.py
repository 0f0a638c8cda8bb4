"""Data and SVG for the three landscape figures."""
from __future__ import annotations

import numpy as np

from .asymptotics import landscape_V, limiting_density, sup_construct
from .attractors import build_graph
from .chain import build_chain, chain_exponents, paste_global
from .model import CircleSystem, PeriodicPotential, tilted_potential
from .svg import Panel, figure
from .systems import single_well, three_well

FIG2_FORCES = (5.0, 2.0, 1.1, 1.05)


def fig1(f: float = 0.5, grid_size: int = 1024) -> tuple[str, dict]:
    """Tilted potential with its window sup, their combination, and V."""
    sys = single_well(f)
    us = sup_construct(sys, grid_size)
    theta = us.grid
    ut = tilted_potential(sys, theta)
    v = landscape_V(sys, grid_size)
    data = {"theta": theta, "tilted": ut, "ustar": us.values, "V": v.values}
    a = (Panel(title="(A) U - f theta and U*", ylabel="")
         .add(theta, ut, "U - f theta", width=1.0)
         .add(theta, ut[0] - f * theta, "slope -f", dashed=True, width=1.0, color="#777")
         .add(theta, us.values, "U*", width=2.5))
    b = (Panel(title="(B) U* and -U + f theta")
         .add(theta, us.values, "U*", width=2.5)
         .add(theta, -ut, "-U + f theta", width=1.0))
    c = Panel(title="(C) V = U* - U + f theta").add(theta, v.values, "V", width=2.0)
    return figure([a, b, c], cols=3), data


def fig2(forces=FIG2_FORCES, grid_size: int = 1024) -> tuple[str, dict]:
    """Limiting densities on the limit cycle for several driving forces."""
    p = Panel(title="limiting density u0", ylabel="u0")
    data = {}
    for f in forces:
        d = limiting_density(single_well(f), grid_size).density
        data["theta"] = d.grid
        data[f"u0_f{f:g}"] = d.values
        p.add(d.grid, d.values, f"f = {f:g}")
    return figure([p], cols=1, width=520, height=360), data


def uneven_three_well(f: float = 0.1, skew: float = 0.012) -> CircleSystem:
    """Three wells of different depths: the three-well example plus a first harmonic."""
    base = three_well(f).potential
    cos = (skew,) + tuple(base.cosine_coeffs[1:])
    return CircleSystem(PeriodicPotential(cos, base.sine_coeffs), f)


def fig3(sys: CircleSystem | None = None, epsilon: float = 1e-3, grid_size: int = 1024) -> tuple[str, dict]:
    """Local landscapes, naive pasting, lifted pieces and the global landscape."""
    sys = uneven_three_well() if sys is None else sys
    g = build_graph(sys)
    chain = build_chain(g, epsilon)
    asym = chain_exponents(chain)
    gl = paste_global(g, asym, grid_size, chain=chain)
    theta = gl.W.grid
    a = Panel(title="(a) local landscapes")
    for i, loc in enumerate(gl.local):
        a.add(theta, loc.values, f"phi_{i + 1}")
    naive = gl.naive.values.copy()
    k = int(np.argmax(np.abs(np.diff(naive))))
    naive_plot = np.insert(naive, k + 1, np.nan)
    theta_plot = np.insert(theta, k + 1, np.nan)
    b = Panel(title="(b) naive pasting").add(theta_plot, naive_plot, "Ut matched", width=2.0)
    c = Panel(title="(c) lifted pieces")
    for i, loc in enumerate(gl.local):
        c.add(theta, asym.W[i] + loc.values, f"W_{i + 1} + phi_{i + 1}", width=1.0)
    c.add(theta, gl.W.values, "min", dashed=True, color="#000", width=1.5)
    d = Panel(title="(d) global landscape W").add(theta, gl.W.values, "W", width=2.5)
    data = {"theta": theta, "W": gl.W.values, "naive": naive, "branch": gl.branch}
    for i, loc in enumerate(gl.local):
        data[f"phi_{i + 1}"] = loc.values
    return figure([a, b, c, d], cols=2), data
