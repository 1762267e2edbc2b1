"""
Counting and solving bound states of -y'' +/- V y = E y
=======================================================

Square and dipole bumps, the merged spectrum of both operator signs, and
the shallow-well laws E ~ g^2 (square) and E ~ g^4/9 (dipole).
"""

import numpy as np

from boundstates import (
    DIRICHLET,
    DipoleBump,
    Interval,
    SquareBump,
    bump_eigenvalue,
    count_below,
    eigenfunction,
    lowest_eigenvalue,
    merged_spectrum,
)

# A square bump of depth g on (-1, 1).  For -d2/dx2 - g*1_(-1,1) the number
# of bound states grows like sqrt(g); counting is exact (oscillation theory,
# no discretization).
I = Interval(-30.0, 30.0)
for g in (0.5, 3.0, 12.0):
    n = count_below(SquareBump(g), I, DIRICHLET, 0.0)
    print(f"depth {g:5.2f}: {n} negative eigenvalue(s)")

# The merged spectrum solves both -d2/dx2 + V and -d2/dx2 - V and tags each
# magnitude with the sign of the operator it came from.
spec = merged_spectrum(SquareBump(3.0), I)
print("\nmerged spectrum of the depth-3 bump:")
for e in spec.entries:
    print(f"  sign {e.sign}:  E = {e.E:.12f}")

# Ground state profile: normalized, decaying like exp(-sqrt(E)|x|).
lam = lowest_eigenvalue(SquareBump(3.0), I)
f = eigenfunction(SquareBump(3.0), lam, I)
xs = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
print("\nground state at E = %.8f:" % lam)
for x in xs:
    print(f"  f({x:4.1f}) = {f(x):+.6e}")

# Shallow wells: one bound state with a universal depth law.
print("\nshallow square bumps, E/g^2 -> 1:")
for g in (0.1, 0.02, 0.005):
    E = bump_eigenvalue("square", g)
    print(f"  g = {g:6.3f}:  E = {E:.3e}   E/g^2 = {E / g**2:.4f}")

print("\nshallow dipole bumps (zero mean), E/(g^4/9) -> 1:")
for g in (0.3, 0.15, 0.08):
    E = bump_eigenvalue("dipole", g)
    print(f"  g = {g:6.3f}:  E = {E:.3e}   E/(g^4/9) = {9 * E / g**4:.4f}")

# The dipole law is sign-symmetric: the mirrored bump has the same level.
E_plus = bump_eigenvalue("dipole", 0.3)
spec_d = merged_spectrum(DipoleBump(0.3), Interval(-50.0, 50.0))
print("\ndipole merged spectrum (one level per operator sign):")
for e in spec_d.entries:
    print(f"  sign {e.sign}:  E = {e.E:.10e}   (secular root {E_plus:.10e})")
