"""
Bond and barrier option prices
==============================

Treat the state as a short rate. The bond price is
``E[exp(-∫_0^T ŝ dt)]`` with ``ŝ`` the step process of the BIM path. The
up-and-out call pays ``(ŝ(T) - K)^+`` unless the path leaves ``[0, B]`` at
some grid node.
"""

from delaycir import (
    EXAMPLE_1, ControlConfig, GridSpec, barrier_option_price, bond_price, simulate_ensemble,
)

ctrl = ControlConfig(10.0, 1.0)
print("  h        bond (se)            barrier K=0.4 B=1.5 (se)")
for h in (0.1, 0.05, 2.0 ** -5, 2.0 ** -7):
    grid = GridSpec.from_step(1.0, h, EXAMPLE_1.tau)
    paths = simulate_ensemble("bim", EXAMPLE_1, ctrl, grid, n_paths=2000, master_seed=4)
    b, b_se = bond_price(paths)
    c, c_se = barrier_option_price(paths, K=0.4, B=1.5)
    print(f"  {h:<8.5f} {b:.4f} ({b_se:.4f})      {c:.4f} ({c_se:.4f})")

# coarse steps damp the pull from xi=1 down to mu, so the bond price rises as h shrinks
