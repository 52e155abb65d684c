"""
Complex powers of an elliptic multiplier
=========================================

The Dunford contour integral is compared with plain diagonalisation, and
the semigroup law A^z A^w = A^(z+w) is spot-checked.  We finish with the
symbol-class test for a couple of scalar symbols.
"""

import numpy as np

from liespec import groups, symbols

SU2 = groups.SU2()
op = symbols.make_operator("diag_perturbed", SU2, 4.0, eta=0.3, seed=1)
print(f"{len(op.duals)} representations, elliptic: {symbols.check_ellipticity(op).elliptic}")

spec = symbols.ContourSpec(epsilon=1e-4)
for z in (-1.0, -0.5):
    cont = symbols.contour_power_symbol(op, z, spec)
    direct = symbols.direct_power(op, z).symbol
    err = max(np.abs(cont[d] - direct[d]).max() for d in op.duals)
    print(f"z = {z:+.1f}: contour vs direct {err:.2e}")

z, w = 0.3 + 0.2j, -0.7 + 0.1j
lhs = symbols.compose(symbols.direct_power(op, z), symbols.direct_power(op, w))
rhs = symbols.direct_power(op, z + w)
print("semigroup defect", max(np.abs(lhs.symbol[d] - rhs.symbol[d]).max() for d in op.duals))

# symbol classes on the circle: order 2 polynomial versus order 3 growth
for label, a in (("1 + 4 pi^2 k^2", lambda x, k: 1 + 4 * np.pi**2 * k**2),
                 ("(1 + k^2)^1.5", lambda x, k: (1.0 + k**2) ** 1.5)):
    rep = symbols.check_symbol_class(a, 2.0, 1.0, 0.0, max_order=2, K=128)
    print(f"{label:>16}: C00 = {rep.constants[(0, 0)]:.4g}, divergent = {rep.divergent}")
