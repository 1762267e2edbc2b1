"""
The factored operator and the correction potential
==================================================

Writing V = W' + Q splits the Schrodinger operator into a nonnegative
part -d2/dx2 + W' + W^2 = (d/dx - W)*(d/dx - W) plus the correction
Q - W^2.  The first factor never has negative spectrum -- checked here
through the quadratic form int (phi' - W phi)^2 -- and the L1 mass of the
correction is what the certificates control.
"""

from boundstates import (
    DipoleBump,
    GridFunction,
    SquareBump,
    correction_potential,
    positivity_check,
    run_decomposition,
    whole_line,
)

import numpy as np

# Positivity of -d2/dx2 + W' + W^2 for the decomposition's own W field.
for name, V in (("square g=3", SquareBump(3.0)),
                ("dipole g=1.1", DipoleBump(1.1))):
    D = run_decomposition(V, whole_line(40.0))
    res = positivity_check(D.W)
    print(f"{name}: ground state of the factored operator = "
          f"{res['ground']:+.3e}  (nonnegative: {res['nonneg']})")

# A profile that is NOT the W of any decomposition can fail: a tanh step
# has W' + W^2 dipping below zero deep enough to bind a state.
xs = np.linspace(-12.0, 12.0, 2401)
impostor = GridFunction(xs, 1.3 * np.tanh(xs), interp="pl")
res = positivity_check(impostor)
print(f"\ntanh impostor: ground = {res['ground']:+.6f}  "
      f"(nonnegative: {res['nonneg']})")

# The correction V0 = Q - W^2 measures how far the decomposition is from
# the pure factored square.  Its signed integral telescopes exactly:
# int V0 = int V - int W^2  (the W' part integrates to zero).
V = SquareBump(3.0)
D = run_decomposition(V, whole_line(40.0))
corr = correction_potential(D)
signed = corr["V0"].integral()
w2 = D.W.square_integral()
int_V = -3.0 * 2.0  # depth 3 on (-1, 1)
print("\ncorrection potential of the depth-3 square bump:")
print(f"  L1 norm     int |Q - W^2| = {corr['l1_norm']:.6f}")
print(f"  signed      int (Q - W^2) = {signed:.6f}")
print(f"  check: int V - int W^2    = {int_V - w2:.6f}")
