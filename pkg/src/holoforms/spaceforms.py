"""The quadric models X_n = {z in C^{n+1} : z^T z = -1} and their isomorphisms.

Conventions
-----------
* ``<z, w> = z^T w`` (bilinear, no conjugation).
* Projective points are arrays normalized so the entry of largest
  modulus equals 1; the point at infinity of CP^1 is ``(1, 0)``.
* Upper half-space points are pairs ``(w, t)`` with ``w`` complex and
  ``t > 0``; tangent vectors are ``(v_w, v_t)`` in Euclidean components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .calg import csqrt, mat2_inner  # noqa: F401  (re-exported convenience)
from .errors import ArgumentError, DecompositionError, SingularPointError

QUADRIC_TOL = 1e-9
CHORDAL_TOL = 1e-10


def quad(z) -> complex | np.ndarray:
    """``z^T z`` along the last axis."""
    z = np.asarray(z, dtype=complex)
    return np.einsum("...i,...i->...", z, z)


@dataclass(frozen=True)
class XPoint:
    z: np.ndarray

    def __post_init__(self) -> None:
        z = np.array(self.z, dtype=complex)
        if abs(quad(z) + 1) > QUADRIC_TOL:
            raise ArgumentError(f"point off the quadric: <z,z> + 1 = {quad(z) + 1:.3e}")
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[0] - 1


@dataclass(frozen=True)
class XTangent:
    base: XPoint
    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.v, dtype=complex)
        if v.shape != self.base.z.shape:
            raise ArgumentError("tangent vector has the wrong length")
        if abs(self.base.z @ v) > QUADRIC_TOL * max(1.0, np.linalg.norm(v)):
            raise ArgumentError("vector is not tangent to the quadric at the base point")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class GPoint:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        p, q = proj_normalize(self.p), proj_normalize(self.q)
        if chordal(p, q) <= CHORDAL_TOL:
            raise ArgumentError("GPoint needs p != q")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)


@dataclass(frozen=True)
class SL2Point:
    A: np.ndarray

    def __post_init__(self) -> None:
        A = np.array(self.A, dtype=complex)
        if A.shape != (2, 2) or abs(np.linalg.det(A) - 1) > QUADRIC_TOL:
            raise ArgumentError("SL2Point needs a 2x2 matrix of determinant 1")
        object.__setattr__(self, "A", A)


def _z(x) -> np.ndarray:
    if isinstance(x, XPoint):
        return x.z
    if isinstance(x, XTangent):
        return x.v
    return np.asarray(x, dtype=complex)


def tangent_project(p, v) -> np.ndarray:
    """Project ``v`` onto ``T_p X_n = p^perp`` (uses <p,p> = -1)."""
    p, v = _z(p), _z(v)
    return v + (p @ v) * p


# ---------------------------------------------------------------- exponential map

def x_exp(p, v, check: bool = True) -> np.ndarray:
    """Exponential map of X_n at ``p``.

    ``cosh(s) p + sinh(s)/s v`` with ``s^2 = <v,v>``; the expression is
    even in ``s`` so the root branch is irrelevant, and ``p + v`` is
    returned when ``<v,v> = 0``.
    """
    p, v = _z(p), _z(v)
    if check and abs(p @ v) > QUADRIC_TOL * max(1.0, np.linalg.norm(v)):
        raise ArgumentError("v is not tangent at p")
    vv = v @ v
    if vv == 0:
        return p + v
    s = np.sqrt(vv)
    return np.cosh(s) * p + (np.sinh(s) / s) * v


def x_geodesic_ode(p, v, t: float, steps: int) -> np.ndarray:
    """RK4 integration of ``gamma'' = <gamma', gamma'> gamma`` up to time ``t``.

    ``p`` and ``v`` may carry leading batch axes.
    """
    if steps < 1:
        raise ArgumentError("steps must be positive")
    y = np.asarray(_z(p), dtype=complex).copy()
    w = np.asarray(_z(v), dtype=complex).copy()
    if t == 0:
        return y
    dt = t / steps

    def acc(g, gd):
        return quad(gd)[..., None] * g

    for _ in range(steps):
        k1y, k1w = w, acc(y, w)
        k2y, k2w = w + 0.5 * dt * k1w, acc(y + 0.5 * dt * k1y, w + 0.5 * dt * k1w)
        k3y, k3w = w + 0.5 * dt * k2w, acc(y + 0.5 * dt * k2y, w + 0.5 * dt * k2w)
        k4y, k4w = w + dt * k3w, acc(y + dt * k3y, w + dt * k3w)
        y = y + dt / 6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        w = w + dt / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
    return y


def x1_geodesic(mu1: complex, mu2: complex, t):
    """Geodesic ``mu1 * exp(t mu2)`` of C* with the metric dz^2/z^2."""
    if mu1 == 0:
        raise ArgumentError("mu1 must be nonzero")
    return mu1 * np.exp(np.asarray(t) * mu2)


def curvature_scaled_form(k: float) -> float:
    """Multiplier ``-1/k`` turning the standard form into a curvature-k model."""
    if k == 0:
        raise ArgumentError("k must be nonzero")
    return -1.0 / k


# ---------------------------------------------------------------- orthogonal matrices

def retract_orthogonal(Q: np.ndarray, steps: int = 2) -> np.ndarray:
    """Newton steps ``Q <- Q (3I - Q^T Q) / 2`` toward ``Q^T Q = I`` (batched)."""
    Q = np.asarray(Q, dtype=complex)
    eye = np.eye(Q.shape[-1])
    for _ in range(steps):
        Q = 0.5 * Q @ (3 * eye - np.swapaxes(Q, -1, -2) @ Q)
    return Q


def orthogonality_defect(Q: np.ndarray) -> float:
    Q = np.asarray(Q, dtype=complex)
    return float(np.max(np.abs(np.swapaxes(Q, -1, -2) @ Q - np.eye(Q.shape[-1]))))


def is_special_orthogonal(Q: np.ndarray, tol: float = 1e-8) -> bool:
    return orthogonality_defect(Q) <= tol and bool(np.all(np.abs(np.linalg.det(Q) - 1) <= tol))


def random_skew(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    M = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return 0.5 * (M - M.T)


def random_special_orthogonal(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """``expm`` of a random complex skew matrix."""
    return scipy.linalg.expm(random_skew(n, rng, scale))


def random_point(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random point of X_n obtained by moving the base point ``i e_{n+1}``."""
    e = np.zeros(n + 1, dtype=complex)
    e[-1] = 1j
    return random_special_orthogonal(n + 1, rng, scale) @ e


def random_tangent(p, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    p = _z(p)
    v = scale * (rng.standard_normal(p.shape) + 1j * rng.standard_normal(p.shape))
    return tangent_project(p, v)


# ---------------------------------------------------------------- X_3 = SL(2, C)

def f_iso(z) -> np.ndarray:
    """Linear isomorphism C^4 -> Mat(2, C) carrying <.,.> to ``mat2_inner``."""
    z = np.asarray(z, dtype=complex)
    z1, z2, z3, z4 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    out = np.empty(z.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = -z1 - 1j * z4
    out[..., 0, 1] = -z2 - 1j * z3
    out[..., 1, 0] = -z2 + 1j * z3
    out[..., 1, 1] = z1 - 1j * z4
    return out


def f_iso_inv(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
    return np.stack([(d - a) / 2, -(b + c) / 2, 1j * (b - c) / 2, 1j * (a + d) / 2], axis=-1)


_F_BASIS = f_iso(np.eye(4))  # F(e_k), k = 0..3


def sl2_pair_to_so4(A, B) -> np.ndarray:
    """4x4 matrix of ``M -> A M B^{-1}`` read through ``f_iso``."""
    A = np.asarray(A.A if isinstance(A, SL2Point) else A, dtype=complex)
    B = np.asarray(B.A if isinstance(B, SL2Point) else B, dtype=complex)
    imgs = A @ _F_BASIS @ np.linalg.inv(B)
    return f_iso_inv(imgs).T


def _sign_key(A: np.ndarray, tol: float = 1e-12) -> bool:
    """True when ``A`` already satisfies the sign convention on its trace."""
    tr = np.trace(A)
    if abs(tr.real) > tol:
        return tr.real > 0
    return tr.imag >= -tol


def so4_to_sl2_pair(Q, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``Q`` in SO(4, C) as ``M -> A M B^{-1}`` with det A = det B = 1.

    The pair is defined up to a common sign; we return the one with
    ``Re tr A > 0`` (or ``Im tr A >= 0`` when the real part vanishes).
    """
    Q = np.asarray(Q, dtype=complex)
    if Q.shape != (4, 4):
        raise DecompositionError("expected a 4x4 matrix")
    if orthogonality_defect(Q) > tol * max(1.0, np.linalg.norm(Q) ** 2):
        raise DecompositionError("matrix is not complex orthogonal")
    # T acts on row-major vec(M): T = A (x) C^T with C = B^{-1}
    T = np.empty((4, 4), dtype=complex)
    for k in range(4):
        E = np.zeros(4, dtype=complex)
        E[k] = 1
        Ek = E.reshape(2, 2)
        T[:, k] = f_iso(Q @ f_iso_inv(Ek)).reshape(4)
    # rearrangement R[(i,j),(k,l)] = A_ij C^T_kl is rank one
    R = T.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    row, col = np.unravel_index(np.argmax(np.abs(R)), R.shape)
    a = R[:, col].copy()
    det_a = a[0] * a[3] - a[1] * a[2]
    if abs(det_a) < 1e-14 * np.linalg.norm(a) ** 2:
        raise DecompositionError("degenerate left factor")
    a = a / np.sqrt(det_a)
    A = a.reshape(2, 2)
    if not _sign_key(A):
        A = -A
        a = -a
    ct = R[row, :] / a[row]
    resid = np.linalg.norm(R - np.outer(a, ct)) / np.linalg.norm(R)
    if resid > tol:
        raise DecompositionError(f"matrix not in the image of SL2 x SL2 (rank-one residual {resid:.2e})")
    C = ct.reshape(2, 2).T
    B = np.linalg.inv(C)
    return A, B


# ---------------------------------------------------------------- projective helpers

def proj_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    k = np.argmax(np.abs(v))
    if abs(v[k]) == 0:
        raise ArgumentError("zero homogeneous vector")
    return v / v[k]


def chordal(a, b) -> float:
    """Chordal (Fubini-Study sine) distance between projective points."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    # |a ^ b| / (|a| |b|) stays accurate for nearby points, unlike sqrt(1 - cos^2)
    wedge = np.outer(a, b) - np.outer(b, a)
    return float(np.linalg.norm(wedge) / (np.sqrt(2) * np.linalg.norm(a) * np.linalg.norm(b)))


def proj_equal(a, b, tol: float = CHORDAL_TOL) -> bool:
    return chordal(a, b) < tol


def affine_point(t: complex) -> np.ndarray:
    """Homogeneous pair of an affine coordinate; ``inf`` maps to (1, 0)."""
    if np.isinf(t):
        return np.array([1, 0], dtype=complex)
    return np.array([t, 1], dtype=complex)


def to_affine(p) -> complex:
    p = np.asarray(p, dtype=complex)
    if abs(p[1]) <= 1e-300 or abs(p[1]) < 1e-15 * abs(p[0]):
        return complex(np.inf)
    return complex(p[0] / p[1])


def cross(a, b) -> np.ndarray:
    """Bilinear cross product in C^3 (batched)."""
    return np.cross(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


# ---------------------------------------------------------------- X_2 and G

def veronese_vec(t) -> np.ndarray:
    """Unnormalized Veronese image ``(i(t1^2+t2^2), 2 t1 t2, t1^2 - t2^2)`` (batched)."""
    t = np.asarray(t, dtype=complex)
    t1, t2 = t[..., 0], t[..., 1]
    return np.stack([1j * (t1 ** 2 + t2 ** 2), 2 * t1 * t2, t1 ** 2 - t2 ** 2], axis=-1)


def veronese(t) -> np.ndarray:
    """Projective Veronese map CP^1 -> Q = {z1^2 + z2^2 + z3^2 = 0}."""
    t = np.asarray(t, dtype=complex)
    if np.all(t == 0):
        raise ArgumentError("zero homogeneous vector")
    return proj_normalize(veronese_vec(t))


def g_cover(pt: GPoint | tuple) -> np.ndarray:
    """Double cover G -> P(X_2), ``(p, q) -> [v(p) x v(q)]``."""
    p, q = (pt.p, pt.q) if isinstance(pt, GPoint) else (proj_normalize(pt[0]), proj_normalize(pt[1]))
    if chordal(p, q) <= CHORDAL_TOL:
        raise ArgumentError("g_cover needs p != q")
    return proj_normalize(cross(veronese_vec(p), veronese_vec(q)))


def g_lift(p, q) -> np.ndarray:
    """Holomorphic lift of ``g_cover`` to X_2 itself (batched over leading axes).

    ``v(p) x v(q) / (2 det[p q]^2)`` is unchanged by rescaling ``p`` or
    ``q`` and lands on the quadric; swapping ``p, q`` gives the
    antipodal point, so ordered pairs correspond to points of X_2.
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    det = p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0]
    if np.any(det == 0):
        raise SingularPointError("g_lift needs p != q")
    return cross(veronese_vec(p), veronese_vec(q)) / (2 * det ** 2)[..., None]


def g_lift_inv(w) -> tuple[np.ndarray, np.ndarray]:
    """Ordered pair ``(p, q)`` of homogeneous vectors with ``g_lift(p, q) = w``.

    ``p`` and ``q`` are the two isotropic lines in ``w^perp``, i.e. the
    roots of ``a t1^2 + 2 b t1 t2 + c t2^2`` with discriminant ``<w,w> = -1``.
    """
    w = np.asarray(w, dtype=complex)
    a = 1j * w[0] + w[2]
    b = w[1]
    c = 1j * w[0] - w[2]
    # stable quadratic formula: pick the sign of the root that avoids cancellation
    s = 1j if abs(-b + 1j) >= abs(-b - 1j) else -1j
    m = -b + s
    p, q = proj_normalize(np.array([m, a])), proj_normalize(np.array([c, m]))
    if np.linalg.norm(g_lift(p, q) - w) > np.linalg.norm(g_lift(q, p) - w):
        p, q = q, p
    return p, q


def g_metric_coeff(z1: complex, z2: complex) -> complex:
    """Coefficient of ``dz1 dz2`` for the metric of G in an affine chart."""
    if z1 == z2:
        raise SingularPointError("z1 = z2 is on the diagonal")
    return -4 / (z1 - z2) ** 2


def mobius(M, z):
    """Action of a 2x2 matrix on affine coordinates (``inf`` allowed, batched)."""
    M = np.asarray(M, dtype=complex)
    z = np.asarray(z, dtype=complex)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.isinf(z), a / c if c != 0 else np.inf, (a * z + b) / (c * z + d))
    return out


def mobius_derivative(M, z):
    M = np.asarray(M, dtype=complex)
    c, d = M[1, 0], M[1, 1]
    return np.linalg.det(M) / (c * np.asarray(z) + d) ** 2


def cross_ratio(a, b, c, d):
    return (a - c) * (b - d) / ((a - d) * (b - c))


# ---------------------------------------------------------------- pseudo-Riemannian models

def pseudo_embed(signature: tuple[int, int], x, tol: float = QUADRIC_TOL) -> np.ndarray:
    """Embed Q^{n-p,p} = {x1^2+..+x_{n-p}^2 - ... = -1} in X_n by ``i``-scaling the last p+1 coordinates."""
    q_pos, p_neg = signature
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != q_pos + p_neg + 1:
        raise ArgumentError("coordinate length must be n+1 for signature (n-p, p)")
    val = np.sum(x[..., :q_pos] ** 2, axis=-1) - np.sum(x[..., q_pos:] ** 2, axis=-1)
    if np.any(np.abs(val + 1) > tol):
        raise ArgumentError("point violates the quadric constraint of the real model")
    scale = np.ones(x.shape[-1], dtype=complex)
    scale[q_pos:] = 1j
    return x * scale


def pseudo_unembed(signature: tuple[int, int], z) -> np.ndarray:
    """Inverse of :func:`pseudo_embed`; returns real coordinates (imaginary residue dropped)."""
    q_pos, _ = signature
    z = np.asarray(z, dtype=complex)
    out = z.copy()
    out[..., q_pos:] = z[..., q_pos:] / 1j
    return out.real


# ---------------------------------------------------------------- H^3 upper half-space

def hyperboloid_to_halfspace(x) -> tuple[np.ndarray, np.ndarray]:
    """Hyperboloid ``x1^2+x2^2+x3^2-x4^2 = -1`` (x4 > 0) to half-space ``(w, t)``."""
    x = np.asarray(x, dtype=float)
    t = 1.0 / (x[..., 3] - x[..., 2])
    w = (x[..., 0] + 1j * x[..., 1]) * t
    return w, t


def hyperboloid_tangent_to_halfspace(x, v) -> tuple[np.ndarray, np.ndarray]:
    """Push a hyperboloid tangent vector ``v`` at ``x`` to half-space components."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    den = x[..., 3] - x[..., 2]
    dden = v[..., 3] - v[..., 2]
    vt = -dden / den ** 2
    vw = (v[..., 0] + 1j * v[..., 1]) / den - (x[..., 0] + 1j * x[..., 1]) * dden / den ** 2
    return vw, vt


def null_to_boundary(nvec) -> complex:
    """Boundary point in C u {inf} of a future null direction of R^{3,1}."""
    n = np.asarray(nvec, dtype=float)
    den = n[..., 3] - n[..., 2]
    num = n[..., 0] + 1j * n[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(den) <= 1e-14 * np.abs(n[..., 3]), np.inf + 0j, num / den)


def h3_norm2(p, v) -> float:
    """Squared hyperbolic length of ``v = (v_w, v_t)`` at ``p = (w, t)``."""
    _, t = p
    vw, vt = v
    return (abs(vw) ** 2 + vt ** 2) / t ** 2


def h3_ray_endpoint(p, v, sign: int = 1, tol: float = QUADRIC_TOL) -> complex:
    """Endpoint on C u {inf} of the half-space geodesic ray from ``p`` along ``sign * v``.

    Geodesics are vertical lines or semicircles centred on the boundary;
    the centre is found from orthogonality of the radius to ``v``.
    """
    w, t = complex(p[0]), float(p[1])
    vw, vt = complex(v[0]) * sign, float(v[1]) * sign
    if abs(h3_norm2((w, t), (vw, vt)) - 1) > tol:
        raise ArgumentError("tangent vector is not unit length")
    a = abs(vw)
    if a <= 1e-14 * t:
        return complex(np.inf) if vt > 0 else w
    u = vw / a
    c = t * vt / a
    R = np.hypot(c, t)
    return w + u * (c + R)
