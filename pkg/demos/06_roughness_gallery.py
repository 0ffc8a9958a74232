"""How roughness in time shows up in space.

Reference solutions at t = 1 for decreasing H. The discrete H1 seminorm of
the profile grows as the noise gets rougher.
"""

# %%
from fbmburgers import StudyConfig, trajectory_gallery

res = trajectory_gallery([0.95, 0.7, 0.55], StudyConfig(paths=10, N=64, tau_ref=1 / 256, taus=(1 / 256,)))
for H in (0.95, 0.7, 0.55):
    print(f"H={H}: median H1 seminorm {res.median_seminorm(H):.3f}")
