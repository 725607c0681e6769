"""Random degree-n covers as tuples of permutations, and how often they are tangled."""
# %%
import numpy as np

from schottky.covers import (build_colored_graph, is_tangle_free, permutation_matrices, sample_is_tangle_free,
                             sample_symmetric)

smp = sample_symmetric(6, 2, seed=1)
print(smp.sigma)  # rows 2, 3 are the inverses of rows 0, 1
pm = permutation_matrices(smp)
print(np.round(pm.S_centered[0], 3))

# %%
g = build_colored_graph(smp)
print("edges:", g.n_edges, " 1-tangle-free:", bool(is_tangle_free(g, 1)))

# %%
# Tangled radius-1 balls get rarer roughly like 1/n.
for n in (8, 16, 32, 64, 128):
    k = sum(not sample_is_tangle_free(sample_symmetric(n, 2, 0, trial=t), 1) for t in range(2000))
    print(f"n={n:4d}  tangled fraction {k / 2000:.4f}  times n {k / 2000 * n:.2f}")
