"""Working in the Dirichlet sine basis.

Projects a grid function onto the first N sine modes, measures the
truncation error, and evaluates the Burgers nonlinearity with fast
transforms. The nonlinearity is orthogonal to the field itself, which is
the energy identity that keeps the deterministic flow bounded.
"""

# %%
import numpy as np

from fbmburgers.spectral import burgers_nonlinearity, interior_grid, project, sobolev_norm

x = interior_grid((1 << 14) - 1)
psi = x * (1 - x)
for N in (4, 8, 16, 32):
    a = project(psi, N)
    print(f"N={N:2d}  truncation error {np.sqrt(max(1 / 30 - a @ a, 0.0)):.3e}")

# %% Sobolev norms of the projection
a = project(psi, 32)
for gamma in (0.0, 0.25, 0.5, 1.0):
    print(f"||P_32 psi||_{gamma}: {sobolev_norm(a, gamma):.6f}")

# %% Nonlinearity of a random field and its energy identity
u = np.random.default_rng(0).normal(size=24)
f = burgers_nonlinearity(u)
print("<u, f(u)> =", float(u @ f))
