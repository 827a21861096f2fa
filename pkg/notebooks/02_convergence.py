"""
Convergence in dt and in M
==========================

Observed orders of BDF-k and the spectral accuracy of the theta quadrature.
"""

# %%
from epde import make_case
from epde.studies import run_convergence, run_mconvergence

steps = [40, 80, 160, 320, 640]

# %% against the closed form E_a(-t^a): orders k until the M = 30 floor near 1e-12
problem = make_case("II", 0.8)
for k in range(1, 6):
    table = run_convergence(problem, k, 30, steps, startup="exact")
    errs = " ".join(f"{r.error:.1e}" for r in table.rows)
    print(f"k={k}  slope {table.slope:5.2f}  errors {errs}")

# %% against the time-exact solution of the same collocated system: pure BDF error
for k in range(1, 6):
    table = run_convergence(problem, k, 30, steps, startup="exact", reference="semidiscrete")
    print(f"k={k}  slope {table.slope:5.2f}")

# %% error against M at dt = 1e-4
mt = run_mconvergence(problem, [5, 10, 15, 20, 25, 30])
for M, e in zip(mt.Ms, mt.errors):
    print(f"M={M:2d}  error {e:.2e}")
print("error(30) / error(5):", mt.ratio)

# %% the cubic problem without forcing is not smooth at t = 0 and loses order
for alpha in (0.3, 0.7):
    table = run_convergence(make_case("V", alpha), 3, 30, [48, 72, 108, 162, 243], reference="self")
    print(f"alpha={alpha}  BDF-3 slope {table.slope:.2f}")
