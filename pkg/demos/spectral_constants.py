"""
Observability of band-limited fields on an arc
===============================================

For growing frequency cuts we build the eigenspace, assemble its Gram
matrix on Omega = (0, 0.3) and record the smallest eigenvalue.  The
quantity log(1/sqrt(lam_min)) is then bounded by an affine envelope in
the cut.  Beyond about a dozen modes lam_min sits under the double
precision floor and those rows are flagged, not fitted.
"""

from liespec import groups, spectral, symbols

T1 = groups.Torus(1)
g = groups.panel_quadrature(T1, 64, [0.0, 0.3])
omega = groups.arc_set(T1, g, [(0.0, 0.3)])
op = symbols.make_operator("shifted_power", T1, 160.0)

rows = spectral.spectral_constant_sweep(op, omega, g, [7.0, 13.0, 19.0, 26.0, 38.0, 57.0])
for r in rows:
    flag = "  (below floor)" if r.underflow else ""
    print(f"cut {r.lam:6.1f}  modes {r.n_modes:3d}  lam_min {r.lam_min:.3e}{flag}")

fit = spectral.fit_sweep(rows)
print(f"envelope: log C1 = {fit.log_C1:.3f}, C2 = {fit.C2:.4f}")

# doubling: how much does the sup grow from a ball to its double
sub = spectral.build_subspace(op, 19.0, grid=g)
d = spectral.doubling_ratio(sub, [0.15], 0.05, groups.haar_quadrature(T1, 2048), trials=6)
print(f"doubling ratio on B(0.15, 0.05): {d.ratio_max:.3f}")
