# %% [markdown]
# # Picard iterates
#
# Iterate `k+1` is transported by iterate `k` and forced by `P(u^k, u^k)`,
# starting from the truncation `S_{k+1} u0`. With data sitting exactly at
# regularity `s`, the successive differences measured one derivative lower
# shrink roughly like `2^{-n}`.

# %%
import math

from ep_spectra import PeriodicGrid, SolverConfig, picard_experiment, power_law_data

grid = PeriodicGrid(1, 1024, 2 * math.pi)
u0 = power_law_data(grid, decay=2.5, amplitude=0.1, k_max=300, seed=1)
rep = picard_experiment(u0, 8, 2.0, 2.0, SolverConfig(dt=0.01, t_final=0.5), slope_range=(1, 6), compare_n=7)

# %%
print(" n   b_n            distance to direct solve")
for row in rep.rows:
    print(f"{row['n']:2d}   {row['b_n']:.4e}     {row['distance_to_solve']:.4e}")
print("slope over n = 1..6:", rep.summary["slope"])
