"""How fast the exact stationary density approaches its small-noise limits.

Limit-cycle regime: sup |u_eps - u0| / max u0 for the sine example near the
saddle-node, where the correction is O(eps / (f - 1)^(3/2)).
Fixed-point regime: sup error of -eps log u_eps against max V - V, which
is dominated by the sub-exponential prefactor and scales like
eps log(1/eps).
"""
import numpy as np

from circlescape.asymptotics import limiting_density, quasi_potential
from circlescape.exact_stationary import solve_stationary
from circlescape.systems import single_well


def limit_cycle_table(forces=(5.0, 2.0, 1.1, 1.05), eps_list=(1e-3, 3e-4, 1e-4)):
    print("limit cycle: sup|u - u0| / max u0")
    print(f"{'f':>6} " + " ".join(f"{e:>10.0e}" for e in eps_list))
    for f in forces:
        lim = limiting_density(single_well(f)).density
        row = []
        for eps in eps_list:
            sol = solve_stationary(single_well(f, eps))
            u0 = lim(sol.grid)
            row.append(np.max(np.abs(sol.density.values - u0)) / u0.max())
        print(f"{f:6.3g} " + " ".join(f"{r:10.3e}" for r in row))


def fixed_point_table(f=0.5, eps_list=(0.02, 0.01, 0.005, 0.0025)):
    print(f"fixed points (f = {f}): sup|-eps log u - min - (max V - V)|")
    q = quasi_potential(single_well(f), 8192)
    for eps in eps_list:
        sol = solve_stationary(single_well(f, eps))
        e = -eps * np.asarray(sol.log_density.values)
        err = np.max(np.abs(e - e.min() - q(sol.grid)))
        peak = sol.grid[np.argmax(sol.density.values)]
        print(f"  eps={eps:<7g} error {err:.4f}  eps*log(1/eps) {eps * np.log(1 / eps):.4f}  argmax {peak:.5f}")


if __name__ == "__main__":
    limit_cycle_table()
    fixed_point_table()
