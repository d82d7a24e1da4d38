"""Which real space form does complex immersion data land in?

Real metrics with real or purely imaginary shape operators develop into real
forms of X_3: hyperbolic space, anti-de Sitter space, or the sign-reversed
de Sitter space and sphere. Generic complex data land in none of them.
"""

import numpy as np

from holoforms import cmetric as cm
from holoforms import families as fa
from holoforms import immersion as im

dom = cm.ChartDomain(0, 1, 1, 2, 16, 16)
hyp = cm.hyperbolic_plane()


def const(a, b, c):
    return cm.MetricField(lambda x, y: cm._sym(a + 0 * x, b + 0 * x, c + 0 * x))


s = 0.4
rows = [("riemannian, real Psi", hyp, 0.3),
        ("riemannian, imaginary Psi", hyp.scaled(np.cosh(s) ** 2), 1j * np.tanh(s)),
        ("signature (1,1), imaginary Psi", const(1.0, 0.0, -1.0), 0.5j),
        ("negative definite, imaginary Psi", const(-1.0, 0.0, -1.0), 0.5j)]
for label, g, c in rows:
    r = im.classify_target(im.ImmersionData(dom, g, cm.constant_shape(c * np.eye(2))), tol=1e-8)
    print(f"  {label:34s} -> {r.target}")
pair = fa.cylinder_pair(1.5, 16, 16, 0.5)
r = im.classify_target(im.ImmersionData(pair.domain, fa.landslide_metric(pair, z=0.3 + 0.2j)))
print(f"  {'landslide g_z, z = 0.3+0.2i':34s} -> {r.target}")

print("\nthe space of geodesics of H^3: pulling back its metric along the two endpoint maps")
h = hyp.scaled(1 / 0.84)
psi = cm.constant_shape(0.4 * np.eye(2))
gG = im.h3_to_g_metric(h, psi)
for n in (16, 32, 64):
    d = cm.ChartDomain(0, 0.25, 1, 1.25, n, n)
    dev = im.develop(im.ImmersionData(d, h, psi), (n // 2, n // 2))
    P = im.g_pullback(*im.endpoint_pair(dev), d)
    X, Y = d.mesh()
    print(f"  {n:3d}x{n:<3d} closed form vs finite differences: {np.abs(P - gG(X, Y))[d.interior_mask(1)].max():.2e}")
