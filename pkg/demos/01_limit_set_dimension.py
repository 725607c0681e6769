"""Four unit discs, two Mobius generators, and the dimension of the limit set."""
# %%
import numpy as np

from schottky import reference_config, validate_schottky
from schottky.thermo import hausdorff_dimension, pressure_estimate

data = reference_config()
rep = validate_schottky(data)
print("valid:", rep.ok, " det error:", rep.max_det_error, " boundary error:", rep.max_boundary_error)
print(data.generators[0])  # maps the outside of disc 2 onto disc 0

# %%
# Word sums at r = 0 only count admissible words: 4 * 3^(N-1) of them.
for N in (3, 5, 8):
    print(N, pressure_estimate(data, 0.0, N).value, np.log(4 * 3 ** (N - 1)) / N)

# %%
# Pressure is decreasing in r; its root is the dimension.
for r in np.linspace(0.1, 0.6, 6):
    print(f"r={r:.1f}  P~{pressure_estimate(data, r, 10).value:+.5f}")

res = hausdorff_dimension(data, 12)
print("delta =", res.delta)
