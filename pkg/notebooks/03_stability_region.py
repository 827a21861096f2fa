"""
Stability regions
=================

Spectral radius of the one-step amplification operator for D^a phi = sigma phi,
over a window of complex sigma, for BDF-3 with M = 30 and dt = 0.01.
"""

# %%
import numpy as np

from epde.stability import RegionSpec, region_scan

# %% the stable set shrinks as alpha grows
fields = {}
for alpha in (0.2, 0.4, 0.6, 0.8):
    fields[alpha] = region_scan(RegionSpec(alpha=alpha, k=3, nx=121, ny=121))
    print(f"alpha={alpha}  stable points {fields[alpha].stable_count} of {fields[alpha].rho.size}")

# %% the unstable set sits on the right half plane close to the origin
f = fields[0.8]
unstable = np.argwhere(f.rho >= 1)
xs, ys = f.xs[unstable[:, 0]], f.ys[unstable[:, 1]]
print("unstable Re(sigma) range:", xs.min(), xs.max(), " Im(sigma) range:", ys.min(), ys.max())

# %% optional picture
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    for alpha, style in zip(fields, ("-", "--", "-.", ":")):
        fd = fields[alpha]
        ax.contour(fd.xs, fd.ys, fd.rho.T, levels=[1.0], linestyles=style)
    ax.set_xlabel("Re sigma")
    ax.set_ylabel("Im sigma")
    fig.savefig("stability_region.png", dpi=120)
    print("wrote stability_region.png")
except ImportError:
    pass
