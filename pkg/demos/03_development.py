"""Integrating immersion data into the quadric.

Immersion data (g, Psi) on a chart define a so(4, C)-valued one-form. When the
Gauss and Codazzi equations hold the form is flat, and integrating it from a
basepoint gives a frame field Phi whose last column traces out the surface.
"""

import numpy as np

from holoforms import cmetric as cm
from holoforms import immersion as im
from holoforms import spaceforms as sf

hyp = cm.hyperbolic_plane()

print("Gauss-Codazzi residuals")
patch = cm.ChartDomain(-0.25, 0.25, 1.0, 1.5, 32, 32)
for label, psi in [("Psi = 0", cm.zero_shape()), ("Psi = id", cm.constant_shape(np.eye(2)))]:
    r = im.gc_residuals(im.ImmersionData(patch, hyp, psi))
    print(f"  hyperbolic, {label:9s} gauss {r['gauss_max']:.1e}  codazzi {r['codazzi_max']:.1e}")

print("\ndeveloping a hyperbolic patch (totally geodesic)")
for n in (32, 64, 128):
    d = cm.ChartDomain(-0.25, 0.25, 1.0, 1.5, n, n)
    dev = im.develop(im.ImmersionData(d, hyp), (n // 2, n // 2))
    print(f"  {n:3d}x{n:<3d} pull-back error {dev.pullback_error():.2e}  quadric {dev.quadric_residual():.1e}")

print("\nan umbilic surface: h / 0.84 with Psi = 0.4 id has K = -0.84 and det Psi = 0.16")
data = im.ImmersionData(patch, hyp.scaled(1 / 0.84), cm.constant_shape(0.4 * np.eye(2)))
dev = im.develop(data, (16, 16))
S = dev.shape_recovery()[patch.interior_mask(2)]
print(f"  recovered shape operator, mean\n{np.real_if_close(np.round(S.mean(axis=0), 6))}")

print("\nuniqueness: another basepoint and frame give the same surface up to SO(4, C)")
Q = sf.random_special_orthogonal(4, np.random.default_rng(3))
other = im.develop(data, (2, 29), frame0=Q)
phi, res = im.align(dev, other)
print(f"  residual {res:.1e}, phi orthogonal to {sf.orthogonality_defect(phi):.1e}")

print("\ncodimension zero: hyperbolic data with Psi = 0 lands in a copy of X_2")
c = im.develop_codim0(hyp, patch)
M, err = im.fit_antimobius(c.f1, c.f2)
print(f"  normal drift {c.normal_drift:.1e}")
print(f"  the two boundary maps are related by an anti-Mobius map ({im.antimobius_type(M)}, fit {err:.1e})")
