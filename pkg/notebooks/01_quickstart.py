"""
Solving a Caputo fractional ODE
===============================

D^a phi = -phi, phi(0) = 1, whose solution is E_a(-t^a).
"""

# %%
import numpy as np

from epde import gauss_jacobi_grid, make_case, ml, solve
from epde.stepper import exact_states

alpha = 0.8
problem = make_case("II", alpha)

# %% the collocation grid in the auxiliary variable theta
grid = gauss_jacobi_grid(30, alpha)
print("nodes in (0, 1):", grid.nodes.min(), grid.nodes.max())
print("weights sum:", grid.weights.sum(), " first moment:", grid.weights @ grid.nodes)

# %% BDF-3 with a cascade startup, then with exact starting states
exact = ml(alpha, -1.0)
for mode in ("cascade", "exact"):
    states = exact_states(problem, grid) if mode == "exact" else None
    traj = solve(problem, 30, 3, 1000, startup_mode=mode, exact=states, grid=grid)
    print(f"{mode:8s} phi(1) = {traj.final:.16f}  error {abs(traj.final - exact):.1e}")

# %% storage stays at k + 1 state vectors however long the run
for N in (1_000, 100_000):
    info = solve(problem, 30, 3, N, grid=grid).info
    print(f"N={N:>6d}  peak state size {info['peak_state_size']}  wall {info['wall_time']:.2f}s")

# %% a nonlinear problem: D^a phi = -phi^3
traj = solve(make_case("V", alpha), 30, 3, 400)
print("phi at t = 0, 0.5, 1:", np.interp([0.0, 0.5, 1.0], traj.times, traj.phi))
