"""Monodromy of cylinders and its holomorphic dependence on parameters.

On a cylinder the development is equivariant under the deck translation, and
the monodromy is an element of SO(4, C) = SL(2, C) x SL(2, C) / +-1. For the
hyperbolic cylinder of core length l its trace is 2 cosh(l / 2).
"""

import numpy as np

from holoforms import cmetric as cm
from holoforms import families as fa
from holoforms import immersion as im

print("Fuchsian check")
for L in (1.0, 1.5, 2.3):
    data = im.ImmersionData(cm.ChartDomain(0, L, -1, 1, 128, 32, deck=True), cm.hyperbolic_cylinder(L))
    mon = im.monodromy(data, row=16)
    print(f"  l={L}: |tr A| = {abs(mon.trace):.8f}   2 cosh(l/2) = {2 * np.cosh(L / 2):.8f}")

print("\nlandslide family (cosh^2 z h, -tanh z b) with the regular cylinder tensor")
pair = fa.cylinder_pair(1.5, 64, 16)
print(f"  regularity: {fa.regular_check(pair)}")
for z in (0.0, 0.3, 0.3 + 0.2j, 0.5j):
    t = im.monodromy(fa.landslide_family(pair, z), gate=None).trace
    print(f"  z={z!s:10s} trace {t:.8f}")

print("\nthe same traces arise from the codimension-zero data (g_{iz}, 0)")
for z in (0.3, 0.3 + 0.2j):
    g = fa.landslide_metric(pair, z=1j * z)
    t = im.monodromy(im.ImmersionData(pair.domain, g, cm.zero_shape()), gate=None).trace
    print(f"  z={z!s:10s} trace {t:.8f}")

print("\nCauchy-Riemann residual of the trace on a small parameter square")
fam = fa.landslide_holofamily(pair, 0.0, 0.2, 5)
surfaces, ratios = fa.trace_refinement(fam, 2, gate=None)
print(f"  residual {fa.shared_cr_residual(surfaces[0], 0):.2e}, halving ratio {ratios[0]:.2f}  (holomorphic: ratio 4)")
pert = fa.landslide_holofamily(pair, 0.0, 0.2, 5, perturbation=0.01)
ps, pr = fa.trace_refinement(pert, 2, gate=None)
print(f"  with a 0.01 conj(lambda) h perturbation: residual {fa.shared_cr_residual(ps[1], 1):.2e}, ratio {pr[0]:.2f}")
