"""The stochastic convolution of a single mode.

For one eigenvalue the convolution is a scalar Gaussian process. Its
variance at time t has no closed form for H > 1/2, so it is computed by
quadrature and checked against a Monte Carlo run of the exact-in-law
recursion used by the time stepper.
"""

# %%
import numpy as np

from fbmburgers.stochconv import convolution_variance_oracle, sample_convolution
from fbmburgers.stochconv import convolution_variance_bruteforce

H, t = 0.7, 0.5
modes = [1, 2, 4]
samples = sample_convolution(4, t, H, 4000, seed=3, tau=1 / 32, refine=32, modes=modes)

# %%
for j, k in enumerate(modes):
    lam = (k * np.pi) ** 2
    oracle = convolution_variance_oracle(lam, t, H)
    brute = convolution_variance_bruteforce(lam, t, H, panels=1024)
    mc = np.mean(samples[:, j] ** 2)
    print(f"k={k}: MC {mc:.5f}  oracle {oracle:.5f}  brute force {brute:.5f}")
