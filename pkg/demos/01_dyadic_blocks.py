# %% [markdown]
# # Dyadic blocks of the counterexample family
#
# `f_n` is a bump modulated at frequency `(17/12) 2^n`. On the `24 pi` box that
# frequency is a lattice point, and the bump's spectrum is narrow enough that
# `f_n` sits entirely inside the plateau of block `n`.

# %%
import math

from ep_spectra import (
    NormKind,
    SpaceParams,
    besov_norm,
    block_norms,
    build_partition,
    counterexample_grid,
    make_bump,
    make_fn,
    tl_norm,
)

grid = counterexample_grid(6, 1)
part = build_partition(grid)
bump = make_bump(grid)
print(grid)

# %% [markdown]
# Block norms of `f_3 ... f_6`: exactly one nonzero entry per row.

# %%
s = 2.0
for n in range(3, 7):
    f = make_fn(n, grid, s, bump)
    norms = block_norms(f, 2.0, part)
    live = {j: f"{v:.3e}" for j, v in norms.items() if v > 0}
    print(f"n={n}: {live}")

# %% [markdown]
# The weight `2^{-ns}` normalises the family: its Besov and Triebel-Lizorkin
# norms at regularity `s` stay constant in `n`, while the norms one
# derivative lower decay like `2^{-n}`.

# %%
print(" n   B^s_{2,inf}   F^s_{2,2}    B^{s-1}_{2,inf}")
for n in range(3, 7):
    f = make_fn(n, grid, s, bump)
    b = besov_norm(f, SpaceParams(s, 2, math.inf, NormKind.BESOV), part)
    t = tl_norm(f, SpaceParams(s, 2, 2), part)
    low = besov_norm(f, SpaceParams(s - 1, 2, math.inf, NormKind.BESOV), part)
    print(f"{n:2d}   {b:.6f}      {t:.6f}     {low:.3e}")
