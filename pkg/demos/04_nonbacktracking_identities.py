"""The non-backtracking block operator and the exact identities behind it."""
# %%
import numpy as np

from schottky import nonbacktracking as nb
from schottky import reference_config
from schottky.bergman import BasisSpec
from schottky.covers import sample_is_tangle_free, sample_symmetric

data = reference_config()
spec = BasisSpec(8, 64)
smp = sample_symmetric(5, 2, seed=3)

# %%
# Conjugate to the permutation-twisted transfer operator; norms on the
# non-constant part agree for every power.
out = nb.conjugation_check(data, smp, 0.6 + 0.4j, spec)
print("conjugation residual:", out["residual"])
for ell, v in out["norm_transfer"].items():
    print(ell, v["L"], v["B_K0"])

# %%
# Powers of B are sums over non-backtracking paths.
B = nb.assemble_B(data, smp, 0.7, spec).matrix
print(np.abs(B @ B - nb.path_sum_power(data, smp, 0.7, spec, 2)).max())

# %%
# Splitting into centred tangle-free sums and remainders is exact on
# tangle-free covers.
t = next(t for t in range(1000) if sample_is_tangle_free(sample_symmetric(6, 2, 0, trial=t), 1))
res = nb.decomposition_residual(data, sample_symmetric(6, 2, 0, trial=t), 0.7, spec, 1)
print("decomposition residual:", res.residual)

# %%
ht = nb.high_trace_crosscheck(data, sample_symmetric(3, 2, 5), 0.7, spec, ell=2)
print("trace directly:", ht.direct, " as path pairs:", ht.path_sum.real)
