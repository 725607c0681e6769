"""Zeros of the Fredholm determinant of the base surface, found by winding numbers."""
# %%
import numpy as np

from schottky import reference_config
from schottky.bergman import BasisSpec
from schottky.thermo import hausdorff_dimension
from schottky.transfer import fredholm_det, leading_eigenvalue, resonance_scan

data = reference_config()
delta = hausdorff_dimension(data, 12).delta

# %%
# Truncation: the determinant settles geometrically in the polynomial degree.
s = 0.6 + 0.4j
for M in (4, 8, 12, 16, 20):
    print(M, fredholm_det(data, s, spec=BasisSpec(M, 128)))

# %%
# On the real axis the leading eigenvalue crosses 1 exactly at delta.
for x in (delta - 0.05, delta, delta + 0.05):
    print(f"s={x:.4f}  lambda={leading_eigenvalue(data, x).real:.8f}")

# %%
rep = resonance_scan(data, (0.05, 0.5, -3.0, 3.0), (48, 96), spec=BasisSpec(12, 64))
for z, mult in sorted(rep.zeros, key=lambda p: -p[0].real):
    print(f"zero at {z.real:.6f}{z.imag:+.6f}i  multiplicity {mult}")
print("delta:", delta)
