"""
Fourier analysis on the circle and on SU(2)
===========================================

A random band-limited field is synthesised from its coefficients, sampled
on a Haar quadrature grid and transformed back.  Parseval is checked along
the way, then a geodesic ball is carved out of the SU(2) grid.
"""

import math

import numpy as np

from liespec import groups

rng = np.random.default_rng(0)

# circle first: |k| <= 8 on 64 equispaced nodes
T1 = groups.Torus(1)
g = groups.haar_quadrature(T1, 64)
duals = groups.enumerate_dual(T1, T1.dual((8,)).bracket * (1 + 1e-12))
c = groups.FourierCoefficients({d: rng.standard_normal((1, 1)) + 0j for d in duals})
f = groups.inverse_fourier(T1, c, g.nodes)
back = groups.fourier_transform(T1, g, f, duals)
err = max(abs(back[d] - c[d]).max() for d in duals)
print(f"torus: {len(duals)} characters, roundtrip error {err:.2e}")
print(f"  |f|_2 = {groups.l2_norm_on_grid(g, f):.12f}, |c| = {c.norm():.12f}")

# SU(2): matrix coefficients up to spin 3/2
SU2 = groups.SU2()
g = groups.haar_quadrature(SU2, 12)
duals = groups.enumerate_dual(SU2, math.sqrt(1 + 1.5 * 2.5) + 1e-9)
for d in duals:
    print(f"  spin {d.label:>3}  dim {d.dim}  bracket {d.bracket:.4f}")
c = groups.FourierCoefficients({d: rng.standard_normal((d.dim, d.dim)) for d in duals})
f = groups.inverse_fourier(SU2, c, g.nodes)
back = groups.fourier_transform(SU2, g, f, duals)
err = max(abs(back[d] - c[d]).max() for d in duals)
print(f"su2: {g.size} nodes, roundtrip error {err:.2e}")

ball = groups.geodesic_ball(SU2, SU2.identity(), 2.0, g)
print(f"ball of radius 2 holds {ball.measure:.4f} of the Haar mass")
