"""Geodesics of the complex quadric X_n = {z . z = -1}.

The exponential map has a closed form: for <v, v> = mu^2 it is
cosh(mu) p + sinh(mu)/mu v, and along isotropic directions it is the
straight line p + t v. We compare it with a direct RK4 integration of the
geodesic equation z'' = <z', z'> z and then look at the three faces of X_3.
"""

import numpy as np

from holoforms import calg
from holoforms import spaceforms as sf

rng = np.random.default_rng(1)

print("closed form vs RK4 on X_2")
p = sf.random_point(2, rng)
v = sf.random_tangent(p, rng)
v /= np.linalg.norm(v)
for steps in (50, 100, 200):
    err = np.abs(sf.x_geodesic_ode(p, v, 2.0, steps) - sf.x_exp(p, 2 * v)).max()
    print(f"  {steps:4d} steps  error {err:.2e}")
print("  halving the step should divide the error by about 16")

print("\nisotropic direction: the geodesic is a line inside the quadric")
p0 = np.array([0, 0, 1j])
iso = np.array([1, 1j, 0])
for t in (0.5, 1.0, 3.0):
    z = sf.x_exp(p0, t * iso)
    print(f"  t={t}: z={np.round(z, 12)}  z.z+1={sf.quad(z) + 1:.1e}")

print("\nX_3 as SL(2, C) with the determinant form")
z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
z /= np.sqrt(-sf.quad(z))
M = sf.f_iso(z)
print(f"  det f(z) = {np.linalg.det(M):.12f}")
A = np.array([[1, 0.3j], [0.2, 1 + 0.06j]])
A /= np.sqrt(np.linalg.det(A))
B = np.array([[2, 1], [1, 1]], dtype=complex)
Q = sf.sl2_pair_to_so4(A, B)
print(f"  (A, B) -> SO(4, C): orthogonality defect {sf.orthogonality_defect(Q):.1e}")
A2, B2 = sf.so4_to_sl2_pair(Q)
print(f"  recovered up to a common sign: {np.allclose(A2, A) or np.allclose(A2, -A)}")

print("\nthe cross product on sl(2, C) satisfies |[V,W]|^2 = -4|V|^2|W|^2 + 4<V,W>^2")
V = np.array([[1, 2j], [0.5, -1]])
W = np.array([[0.3j, 1], [-1, -0.3j]])
br = V @ W - W @ V
ip = calg.mat2_inner
print(f"  lhs {ip(br, br):.6f}   rhs {-4 * ip(V, V) * ip(W, W) + 4 * ip(V, W) ** 2:.6f}")
