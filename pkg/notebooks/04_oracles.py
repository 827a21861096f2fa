"""
Cross-checks with direct-convolution solvers
============================================

The L1 scheme and the fractional Adams method keep the whole history and
cost O(N^2); the extended-system solver keeps k + 1 state vectors.
"""

# %%
from epde import make_case, ml, solve
from epde.oracles import frac_adams_solve, l1_solve

problem = make_case("II", 0.5)
exact = ml(0.5, -1.0)
# default cascade startup: second order in the first steps, see 01_quickstart
for N in (1000, 2000, 4000):
    runs = {"epde": solve(problem, 30, 3, N), "l1": l1_solve(problem, N), "adams": frac_adams_solve(problem, N)}
    line = "  ".join(f"{k} {abs(r.final - exact):.1e} ({r.info['wall_time']:.2f}s)" for k, r in runs.items())
    print(f"N={N}  {line}")

# %% no closed form: D^a phi = -phi + sin t
p3 = make_case("III", 0.5)
print("epde :", solve(p3, 30, 3, 1000).final)
print("adams:", frac_adams_solve(p3, 1000).final)
