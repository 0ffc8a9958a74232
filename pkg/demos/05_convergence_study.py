"""Strong convergence in time.

All step sizes on a path share one fine noise grid, so the error against
the reference run measures the time discretisation alone. The default
study (N=128, 200 paths, tau_ref=1/512) takes about half a minute on one
core; ``StudyConfig.full_scale()`` is the expensive version.
"""

# %%
from fbmburgers import StudyConfig, convergence_study

table = convergence_study(StudyConfig(N=64, paths=50))
print(table.format())

# %% Rougher noise gives a slower rate
for H in table.hurst:
    print(f"H={H}: final rate {table.final_rate(H):.2f} +/- {table.rate_stderr(H):.2f}")
