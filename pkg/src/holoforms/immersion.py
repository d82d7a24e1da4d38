"""Immersion data, the flat so(4, C) connection and its development into X_3.

For immersion data ``(g, Psi)`` on a chart with orthonormal frame
``X1, X2`` the connection is the 4x4 skew matrix of 1-forms

    [[ 0,       omega,  -Psi^1,  -i theta^1],
     [-omega,   0,      -Psi^2,  -i theta^2],
     [ Psi^1,   Psi^2,   0,       0        ],
     [ i theta^1, i theta^2, 0,   0        ]]

with ``Psi^k(Y) = g(Psi Y, X_k)``.  Integrating ``Phi' = Phi omega`` gives
``sigma = Phi e``, ``e = (0, 0, 0, i)``, tangent images
``sigma_* X_k = Phi v_k`` and the unit normal ``nu = -Phi v_3``, for which
the ambient derivative of ``nu`` is ``sigma_* Psi``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import spaceforms as sf
from .cmetric import (ChartDomain, FrameSpec, MetricField, OrthoFrame, ShapeField, _x1x2_wedge,
                      bicomplex_matrix, coframe_and_omega, curvature_field, frame_at, frame_orthonormal,
                      grid_diff, local_diff, zero_shape)
from .errors import ArgumentError, GateError, GeometryError, NumericalError, SingularPointError

E_BASE = np.array([0, 0, 0, 1j])
GATE_DEFAULT = 1e-4


@dataclass
class ImmersionData:
    domain: ChartDomain
    g: MetricField
    psi: ShapeField = field(default_factory=zero_shape)
    frame_spec: FrameSpec = field(default_factory=FrameSpec)

    def frame(self) -> OrthoFrame:
        return frame_orthonormal(self.g, self.domain, self.frame_spec)

    def self_adjoint_residual(self) -> float:
        X, Y = self.domain.mesh()
        G = self.g(X, Y)
        GP = G @ self.psi(X, Y)
        return float(np.max(np.abs(GP - np.swapaxes(GP, -1, -2))))


# ---------------------------------------------------------------- omega

def _psi_forms(pf, P) -> np.ndarray:
    """``Psi^k_a = g(Psi d_a, X_k)`` as an array (..., k, a)."""
    return np.swapaxes(pf.X, -1, -2) @ pf.G @ P


def _assemble(theta: np.ndarray, w: np.ndarray, psiF: np.ndarray) -> np.ndarray:
    """Stack the connection matrices for the dx and dy components: (..., 2, 4, 4)."""
    shape = w.shape[:-1]
    W = np.zeros(shape + (2, 4, 4), dtype=complex)
    for a in range(2):
        W[..., a, 0, 1] = w[..., a]
        W[..., a, 1, 0] = -w[..., a]
        for k in range(2):
            W[..., a, k, 2] = -psiF[..., k, a]
            W[..., a, 2, k] = psiF[..., k, a]
            W[..., a, k, 3] = -1j * theta[..., k, a]
            W[..., a, 3, k] = 1j * theta[..., k, a]
    return W


@dataclass
class OmegaField:
    """so(4, C)-valued 1-form sampled on the grid, with pointwise evaluation."""

    data: ImmersionData
    frame: OrthoFrame
    W: np.ndarray  # (nx, ny, 2, 4, 4): [..., 0] is the dx coefficient

    @property
    def domain(self) -> ChartDomain:
        return self.data.domain

    def at(self, x, y) -> np.ndarray:
        """Connection coefficients at arbitrary points, shape (..., 2, 4, 4)."""
        pf = self.frame.at(x, y)
        theta, w = coframe_and_omega(pf)
        return _assemble(theta, w, _psi_forms(pf, self.data.psi(x, y)))


def assemble_omega(data: ImmersionData, frame: OrthoFrame | None = None) -> OmegaField:
    frame = frame or data.frame()
    X, Y = data.domain.mesh()
    pf = frame.at(X, Y)
    theta, w = coframe_and_omega(pf)
    return OmegaField(data, frame, _assemble(theta, w, _psi_forms(pf, data.psi(X, Y))))


def omega_from_matrices(domain: ChartDomain, Wx: np.ndarray, Wy: np.ndarray) -> OmegaField:
    """OmegaField from explicit constant coefficient matrices (testing aid)."""
    W = np.zeros((domain.nx, domain.ny, 2, 4, 4), dtype=complex)
    W[..., 0, :, :] = Wx
    W[..., 1, :, :] = Wy

    class _Const(OmegaField):
        def at(self, x, y):
            out = np.zeros(np.shape(x) + (2, 4, 4), dtype=complex)
            out[..., 0, :, :] = Wx
            out[..., 1, :, :] = Wy
            return out
    return _Const(ImmersionData(domain, MetricField(lambda x, y: np.broadcast_to(np.eye(2), np.shape(x) + (2, 2)))),
                  None, W)


def flatness_residual(omega: OmegaField, stencil: str = "grid") -> np.ndarray:
    """``(d omega + omega ^ omega)(X1, X2)`` per grid node, shape (nx, ny, 4, 4).

    The Theta-block entry (1, 2) equals the Gauss defect ``K - det Psi + 1``.
    """
    d = omega.domain
    Wx, Wy = omega.W[..., 0, :, :], omega.W[..., 1, :, :]
    if stencil == "grid":
        dW = grid_diff(Wy, d, 0) - grid_diff(Wx, d, 1)
    elif stencil == "local":
        X, Y = d.mesh()
        ax, ay = local_diff(lambda x, y: omega.at(x, y), X, Y)
        dW = ax[..., 1, :, :] - ay[..., 0, :, :]
    else:
        raise ArgumentError(f"unknown stencil {stencil!r}")
    R = dW + Wx @ Wy - Wy @ Wx
    if omega.frame is None:
        return R
    return R * _x1x2_wedge(omega.frame.X)[..., None, None]


# ---------------------------------------------------------------- Gauss-Codazzi

def gauss_residual(data: ImmersionData, stencil: str = "grid", frame: OrthoFrame | None = None) -> np.ndarray:
    """``K - det Psi + 1`` on the grid."""
    frame = frame or data.frame()
    K = curvature_field(data.g, data.domain, stencil, frame)
    X, Y = data.domain.mesh()
    return K - np.linalg.det(data.psi(X, Y)) + 1


def codazzi_residual(data: ImmersionData, stencil: str = "grid", frame: OrthoFrame | None = None) -> np.ndarray:
    """Components of ``d^nabla Psi (X1, X2)`` in the frame, shape (nx, ny, 2)."""
    frame = frame or data.frame()
    d = data.domain
    X, Y = d.mesh()

    def forms(x, y, refs=None, flips=None):
        if refs is None:
            pf = frame.at(x, y)
        else:
            pf = frame_at(data.g, x, y, frame.spec, refs, flips)
        _, w = coframe_and_omega(pf)
        return _psi_forms(pf, data.psi(x, y)), w

    P, w = forms(X, Y)
    if stencil == "grid":
        dP = grid_diff(P[..., 1], d, 0) - grid_diff(P[..., 0], d, 1)
    elif stencil == "local":
        refs, flips = frame.roots, frame.flip2
        px, py = local_diff(lambda x, y: forms(x, y, refs, flips)[0], X, Y)
        dP = px[..., 1] - py[..., 0]
    else:
        raise ArgumentError(f"unknown stencil {stencil!r}")

    def wedge(a, b):
        return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    r1 = dP[..., 0] + wedge(w, P[..., 1, :])
    r2 = dP[..., 1] - wedge(w, P[..., 0, :])
    return np.stack([r1, r2], axis=-1) * _x1x2_wedge(frame.X)[..., None]


def gc_residuals(data: ImmersionData, frame: OrthoFrame | None = None, stencil: str = "local") -> dict:
    frame = frame or data.frame()
    gr = gauss_residual(data, stencil, frame)
    cr = codazzi_residual(data, stencil, frame)
    mask = data.domain.interior_mask(1) if stencil == "grid" else np.ones(gr.shape, dtype=bool)
    return {"gauss_max": float(np.max(np.abs(gr[mask]))),
            "codazzi_max": float(np.max(np.abs(cr[mask]))),
            "self_adjoint_max": data.self_adjoint_residual()}


def check_gates(data: ImmersionData, gate: float = GATE_DEFAULT, frame: OrthoFrame | None = None) -> dict:
    res = gc_residuals(data, frame)
    if max(res.values()) > gate:
        raise GateError(f"immersion data fails the Gauss-Codazzi gate {gate:g}: {res}", res)
    return res


# ---------------------------------------------------------------- integration

def _rk4_batch(Phi: np.ndarray, A: np.ndarray, dt: float) -> np.ndarray:
    """One step of Phi' = Phi A(t); ``A`` holds samples at t, t+dt/2, t+dt."""
    k1 = Phi @ A[0]
    k2 = (Phi + 0.5 * dt * k1) @ A[1]
    k3 = (Phi + 0.5 * dt * k2) @ A[1]
    k4 = (Phi + dt * k3) @ A[2]
    return Phi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _directional(W: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Contract connection samples (..., 2, 4, 4) with direction(s) v (..., 2)."""
    return np.einsum("...a,...aij->...ij", v, W)


def integrate_path(omega: OmegaField, path, phi0=None, steps_per_unit: float | None = None,
                   substeps: int = 8) -> np.ndarray:
    """Solve ``Phi' = Phi omega(gamma')`` along a polyline with RK4.

    Each segment gets ``substeps`` steps per grid spacing of its length
    (or ``steps_per_unit`` steps per unit length) and a retraction toward
    ``Phi^T Phi = I`` after every step.
    """
    P = np.asarray(path, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or len(P) < 2:
        raise ArgumentError("path must be a polyline of at least two (x, y) points")
    d = omega.domain
    for axis, (lo, hi) in enumerate(((d.x0, d.x1), (d.y0, d.y1))):
        if not d.periodic[axis] and (P[:, axis].min() < lo - 1e-12 or P[:, axis].max() > hi + 1e-12):
            raise ArgumentError("path leaves the chart")
    Phi = np.eye(4, dtype=complex) if phi0 is None else np.array(phi0, dtype=complex)
    h = min(d.hx, d.hy)
    arc = 0.0
    for a, b in zip(P[:-1], P[1:]):
        seg = b - a
        length = float(np.hypot(*seg))
        if length == 0:
            continue
        n = max(1, int(np.ceil(length * steps_per_unit))) if steps_per_unit else max(1, int(np.ceil(length / h - 1e-9)) * substeps)
        tau = np.linspace(0.0, 1.0, 2 * n + 1)
        pts = a + tau[:, None] * seg
        A = _directional(omega.at(pts[:, 0], pts[:, 1]), seg)
        dt = 1.0 / n
        for k in range(n):
            Phi = sf.retract_orthogonal(_rk4_batch(Phi, A[2 * k:2 * k + 3], dt), steps=1)
            if not np.all(np.isfinite(Phi)):
                raise NumericalError(f"non-finite values at arc length {arc + (k + 1) * dt * length:.6g}")
        arc += length
    return sf.retract_orthogonal(Phi)


@dataclass
class Development:
    data: ImmersionData
    omega: OmegaField
    Phi: np.ndarray          # (nx, ny, 4, 4)
    basepoint: tuple[int, int]
    residuals: dict = field(default_factory=dict)

    @property
    def domain(self) -> ChartDomain:
        return self.data.domain

    @property
    def sigma(self) -> np.ndarray:
        return self.Phi @ E_BASE

    @property
    def normal(self) -> np.ndarray:
        return -self.Phi[..., :, 2]

    def quadric_residual(self) -> float:
        return float(np.max(np.abs(sf.quad(self.sigma) + 1)))

    def orthogonality_residual(self) -> float:
        return sf.orthogonality_defect(self.Phi)

    def differential(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.sigma
        return grid_diff(s, self.domain, 0, wrap=False), grid_diff(s, self.domain, 1, wrap=False)

    def pullback_metric(self) -> np.ndarray:
        sx, sy = self.differential()
        P = np.empty(sx.shape[:-1] + (2, 2), dtype=complex)
        P[..., 0, 0] = sf.quad(sx)
        P[..., 0, 1] = P[..., 1, 0] = np.einsum("...i,...i->...", sx, sy)
        P[..., 1, 1] = sf.quad(sy)
        return P

    def pullback_error(self, margin: int = 1) -> float:
        """Max relative deviation of the finite-difference pull-back from ``g``."""
        X, Y = self.domain.mesh()
        G = self.data.g(X, Y)
        err = np.linalg.norm(self.pullback_metric() - G, axis=(-2, -1)) / np.linalg.norm(G, axis=(-2, -1))
        return float(np.max(err[self.domain.interior_mask(margin)]))

    def isometry_error(self, margin: int = 1) -> float:
        """``max |<sigma_* X_i, sigma_* X_j> - delta_ij|`` over interior nodes."""
        Xf = self.omega.frame.X
        P = self.pullback_metric()
        M = np.swapaxes(Xf, -1, -2) @ P @ Xf - np.eye(2)
        return float(np.max(np.abs(M)[self.domain.interior_mask(margin)]))

    def shape_recovery(self) -> np.ndarray:
        """Shape operator in coordinates from finite differences of the normal."""
        sx, sy = self.differential()
        nx_, ny_ = (grid_diff(self.normal, self.domain, a, wrap=False) for a in (0, 1))
        P = self.pullback_metric()
        S = np.stack([sx, sy], axis=-1)           # (..., 4, 2)
        N = np.stack([nx_, ny_], axis=-1)
        rhs = np.swapaxes(S, -1, -2) @ N          # <sigma_b, nu_a>
        return np.linalg.solve(P, rhs)


def _grid_edge_samples(substeps: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, 2 * substeps + 1)


def develop(data: ImmersionData, basepoint: tuple[int, int] = (0, 0), frame0=None, gate: float | None = GATE_DEFAULT,
            substeps: int = 8, omega: OmegaField | None = None) -> Development:
    """Develop immersion data over the grid along a spanning tree.

    The tree runs along the basepoint row in both directions, then up and
    down all columns at once.  ``gate=None`` skips the Gauss-Codazzi check.
    """
    res = check_gates(data, gate) if gate is not None else {}
    omega = omega or assemble_omega(data)
    d = data.domain
    i0, j0 = basepoint
    if not (0 <= i0 < d.nx and 0 <= j0 < d.ny):
        raise ArgumentError("basepoint outside the grid")
    Phi = np.zeros((d.nx, d.ny, 4, 4), dtype=complex)
    Phi[i0, j0] = np.eye(4) if frame0 is None else np.asarray(frame0, dtype=complex)
    xs, ys = d.xs, d.ys
    tau = _grid_edge_samples(substeps)
    dt = 1.0 / substeps

    def step_edge(Phi0, x_from, y_from, dx, dy):
        px = x_from[..., None] + tau * dx
        py = y_from[..., None] + tau * dy
        A = _directional(omega.at(px, py), np.array([dx, dy]))
        A = np.moveaxis(A, -3, 0)
        out = Phi0
        for k in range(substeps):
            out = _rk4_batch(out, A[2 * k:2 * k + 3], dt)
        return sf.retract_orthogonal(out)

    for rng_, sgn in ((range(i0 + 1, d.nx), 1), (range(i0 - 1, -1, -1), -1)):
        for i in rng_:
            prev = i - sgn
            Phi[i, j0] = step_edge(Phi[prev, j0], np.array(xs[prev]), np.array(ys[j0]), xs[i] - xs[prev], 0.0)
    for rng_, sgn in ((range(j0 + 1, d.ny), 1), (range(j0 - 1, -1, -1), -1)):
        for j in rng_:
            prev = j - sgn
            Phi[:, j] = step_edge(Phi[:, prev], xs, np.full(d.nx, ys[prev]), 0.0, ys[j] - ys[prev])
    if not np.all(np.isfinite(Phi)):
        raise NumericalError("development produced non-finite values")
    return Development(data, omega, Phi, basepoint, res)


# ---------------------------------------------------------------- uniqueness

def _complete_frame(cols: np.ndarray) -> np.ndarray:
    """Insert the unit normal of three orthonormal columns as column 2 with det = +1."""
    M = np.asarray(cols, dtype=complex)  # 4 x 3: (v1, v2, v4) images
    _, s, Vh = np.linalg.svd(M.T)
    if s[-1] < 1e-8 * s[0]:
        raise GeometryError("matched vectors are rank deficient: alignment impossible")
    n = Vh[-1].conj()
    nn = n @ n
    if abs(nn) < 1e-10:
        raise GeometryError("normal of the matched vectors is isotropic")
    n = n / np.sqrt(nn)
    F = np.column_stack([M[:, 0], M[:, 1], n, M[:, 2]])
    if np.real(np.linalg.det(F)) < 0:
        F[:, 2] = -n
    return F


def align(dev1: Development, dev2: Development, node: tuple[int, int] | None = None) -> tuple[np.ndarray, float]:
    """Ambient isometry ``phi`` with ``phi sigma1 = sigma2`` from the frames at one node.

    Uses the matched vectors ``sigma, sigma_* X1, sigma_* X2`` (the
    columns of Phi other than the normal) completed by their unit normal.
    Returns ``phi`` and the max over the grid of ``|phi sigma1 - sigma2|``.
    """
    if dev1.domain != dev2.domain:
        raise ArgumentError("developments live on different charts")
    i, j = node or dev1.basepoint
    F1 = _complete_frame(dev1.Phi[i, j][:, [0, 1, 3]])
    F2 = _complete_frame(dev2.Phi[i, j][:, [0, 1, 3]])
    phi = F2 @ np.linalg.inv(F1)
    resid = float(np.max(np.linalg.norm(dev1.sigma @ phi.T - dev2.sigma, axis=-1)))
    return phi, resid


# ---------------------------------------------------------------- monodromy

@dataclass
class Monodromy:
    generator: str
    Q: np.ndarray
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    sign_convention: str = "Re tr A > 0, ties broken by Im tr A >= 0"

    @property
    def trace(self) -> complex | None:
        return None if self.A is None else complex(np.trace(self.A))

    @property
    def trace_B(self) -> complex | None:
        return None if self.B is None else complex(np.trace(self.B))

    def to_json(self) -> dict:
        def cm(M):
            return None if M is None else [[[float(z.real), float(z.imag)] for z in row] for row in M]
        tr = self.trace
        return {"generator": self.generator, "Q": cm(self.Q), "A": cm(self.A), "B": cm(self.B),
                "trace": None if tr is None else [tr.real, tr.imag], "sign_convention": self.sign_convention}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def monodromy(data: ImmersionData, row: int = 0, start: int = 0, power: int = 1, frame0=None,
              gate: float | None = GATE_DEFAULT, substeps: int = 8, omega: OmegaField | None = None) -> Monodromy:
    """Monodromy of the deck generator ``x -> x + L`` of a cylinder chart.

    The frame is continued along the grid row ``row`` from node ``start``
    through ``power`` periods, and ``Q = Phi(delta^k x0) Phi(x0)^{-1}``.
    """
    d = data.domain
    label = "delta" if power == 1 else f"delta^{power}"
    if not d.deck:
        return Monodromy(label, np.eye(4, dtype=complex), np.eye(2, dtype=complex), np.eye(2, dtype=complex))
    if gate is not None:
        check_gates(data, gate)
    omega = omega or assemble_omega(data)
    x0, y0 = d.xs[start], d.ys[row]
    path = [[x0, y0], [x0 + power * d.period, y0]]
    Phi0 = np.eye(4, dtype=complex) if frame0 is None else np.asarray(frame0, dtype=complex)
    Phi1 = integrate_path(omega, path, Phi0, substeps=substeps)
    Q = sf.retract_orthogonal(Phi1 @ np.linalg.inv(Phi0))
    A, B = sf.so4_to_sl2_pair(Q)
    return Monodromy(label, Q, A, B)


# ---------------------------------------------------------------- codimension zero

@dataclass
class Codim0Development:
    dev: Development
    R: np.ndarray            # ambient rotation sending the normal to e_4
    w: np.ndarray            # (nx, ny, 3) points of X_2
    normal_drift: float
    f1: np.ndarray | None = None
    f2: np.ndarray | None = None

    @property
    def needs_flip(self) -> bool:
        """True if sending the normal to e_4 needs an orientation-reversing map."""
        return bool(np.real(np.linalg.det(self.R)) < 0)


def develop_codim0(g: MetricField, domain: ChartDomain, basepoint: tuple[int, int] = (0, 0),
                   gate: float = GATE_DEFAULT, pair: bool = True, frame_spec: FrameSpec | None = None) -> Codim0Development:
    """Develop a curvature -1 metric as a totally geodesic surface and read it in X_2 and G."""
    data = ImmersionData(domain, g, zero_shape(), frame_spec or FrameSpec())
    dev = develop(data, basepoint, gate=gate)
    nu = dev.normal
    nu0 = nu[basepoint]
    drift = float(np.max(np.abs(nu - nu0)))
    if drift > 1e-6:
        raise NumericalError(f"normal drifts by {drift:.2e}; data is not totally geodesic")
    P0 = dev.Phi[basepoint]
    B = np.column_stack([P0[:, 0], P0[:, 1], P0[:, 3], nu0])
    R = B.T
    w = (dev.sigma @ R.T)[..., :3]
    out = Codim0Development(dev, R, w, drift)
    if pair:
        f1 = np.empty(w.shape[:2], dtype=complex)
        f2 = np.empty(w.shape[:2], dtype=complex)
        for idx in np.ndindex(*w.shape[:2]):
            p, q = sf.g_lift_inv(w[idx])
            f1[idx], f2[idx] = sf.to_affine(p), sf.to_affine(q)
        out.f1, out.f2 = f1, f2
    return out


def jacobian_sign(f: np.ndarray, domain: ChartDomain) -> np.ndarray:
    """Sign of the real Jacobian of a complex-valued grid map."""
    fx, fy = grid_diff(f, domain, 0, wrap=False), grid_diff(f, domain, 1, wrap=False)
    return np.sign(fx.real * fy.imag - fx.imag * fy.real)


def fit_antimobius(z: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, float]:
    """Matrix ``M`` with ``w = M . conj(z)`` fitted on three samples; returns ``(M, max error)``."""
    z = np.ravel(z)
    w = np.ravel(w)
    idx = [0, len(z) // 2, len(z) - 1]
    a = np.conj(z[idx])
    b = w[idx]
    # Moebius map sending a_k -> b_k: compose cross-ratio normal forms
    def to_std(p):
        return np.array([[p[1] - p[2], -p[0] * (p[1] - p[2])], [p[1] - p[0], -p[2] * (p[1] - p[0])]])
    M = np.linalg.inv(to_std(b)) @ to_std(a)
    M = M / np.sqrt(np.linalg.det(M))
    err = float(np.max(np.abs(sf.mobius(M, np.conj(z)) - w)))
    return M, err


def antimobius_type(M: np.ndarray) -> str:
    """``reflection`` (fixed circle) or ``antipodal`` (fixed-point free) for ``z -> M conj(z)``."""
    N = M @ np.conj(M)
    c = N[0, 0]
    if np.abs(N - c * np.eye(2)).max() > 1e-6 * abs(c):
        return "not-involution"
    return "reflection" if c.real > 0 else "antipodal"


# ---------------------------------------------------------------- pseudo-Riemannian targets

TARGET_TABLE = {((2, 0), "real"): "H3", ((2, 0), "imaginary"): "AdS3",
                ((1, 1), "real"): "AdS3", ((1, 1), "imaginary"): "-dS3",
                ((0, 2), "real"): "-dS3", ((0, 2), "imaginary"): "-S3"}


@dataclass
class TargetRecord:
    g_real: bool
    signature: tuple[int, int] | None
    psi_real: bool
    psi_imaginary: bool
    candidates: list[str]
    target: str
    ambiguous: bool
    measures: dict


def classify_target(data: ImmersionData, tol: float = 1e-8, borderline: float = 1e3) -> TargetRecord:
    """Which real space form the development lands in, from the reality of ``g`` and ``Psi``.

    A measure within ``[tol, borderline * tol]`` of the decision threshold
    is reported as ambiguous instead of being silently rounded.
    """
    X, Y = data.domain.mesh()
    G = data.g(X, Y)
    P = data.psi(X, Y)
    gs = max(float(np.max(np.abs(G))), 1e-300)
    ps = max(float(np.max(np.abs(P))), 1.0)
    m_g = float(np.max(np.abs(G.imag))) / gs
    m_re = float(np.max(np.abs(P.imag))) / ps
    m_im = float(np.max(np.abs(P.real))) / ps
    measures = {"g_imag": m_g, "psi_imag": m_re, "psi_real": m_im}
    ambiguous = any(tol < m <= borderline * tol for m in measures.values())
    g_real = m_g <= tol
    psi_real, psi_imag = m_re <= tol, m_im <= tol
    signature = None
    if g_real:
        ev = np.linalg.eigvalsh(G.real)
        npos = np.sum(ev > 0, axis=-1)
        if np.all(npos == npos.flat[0]) and np.min(np.abs(ev)) > tol * gs:
            signature = (int(npos.flat[0]), 2 - int(npos.flat[0]))
    cands = []
    if signature is not None:
        if psi_real:
            cands.append(TARGET_TABLE[(signature, "real")])
        if psi_imag:
            cands.append(TARGET_TABLE[(signature, "imaginary")])
    cands = sorted(set(cands))
    if len(cands) > 1:
        ambiguous = True
    target = cands[0] if len(cands) == 1 else ("X3" if not cands else "ambiguous")
    return TargetRecord(g_real, signature, psi_real, psi_imag, cands, target, ambiguous, measures)


# ---------------------------------------------------------------- H^3 -> G

def h3_to_g_metric(h: MetricField, psi: ShapeField, orientation: int = 1) -> MetricField:
    """Complex metric ``h - h(psi., psi.) + i h((psi J - J psi)., .)`` of the geodesic-endpoint map."""
    def g(x, y):
        H = h(x, y)
        P = psi(x, y)
        J = bicomplex_matrix(H, orientation)
        PT = np.swapaxes(P, -1, -2)
        C = P @ J - J @ P
        out = H - PT @ H @ P + 1j * np.swapaxes(C, -1, -2) @ H
        return out
    return MetricField(g, name=f"G-metric({h.name})")


@dataclass
class DegeneracyReport:
    det: np.ndarray
    mask: np.ndarray
    locations: list[tuple[float, float]]


def degeneracy_report(g: MetricField, domain: ChartDomain, tol: float = 1e-10) -> DegeneracyReport:
    X, Y = domain.mesh()
    G = g(X, Y)
    det = np.linalg.det(G)
    scale = np.max(np.abs(G), axis=(-2, -1)) ** 2
    mask = np.abs(det) <= tol * scale
    return DegeneracyReport(det, mask, [(float(X[k]), float(Y[k])) for k in zip(*np.nonzero(mask))])


def _generic_lorentz() -> np.ndarray:
    """Fixed rotation-plus-boost of R^{3,1} moving the standard normal off the vertical."""
    a, b = 0.7, 0.3
    rot = np.eye(4)
    rot[np.ix_([0, 2], [0, 2])] = [[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]]
    boost = np.eye(4)
    boost[np.ix_([1, 3], [1, 3])] = [[np.cosh(b), np.sinh(b)], [np.sinh(b), np.cosh(b)]]
    return boost @ rot


def endpoint_pair(dev: Development, isometry: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of the normal geodesic rays of a developed H^3 surface.

    ``isometry`` (a real Lorentz matrix, default a fixed generic one) is
    applied first so that no ray of the patch ends at infinity; the
    metric on G is invariant under it.
    """
    L = _generic_lorentz() if isometry is None else np.asarray(isometry, dtype=float)
    x = sf.pseudo_unembed((3, 0), dev.sigma) @ L.T
    n = sf.pseudo_unembed((3, 0), dev.normal) @ L.T
    w, t = sf.hyperboloid_to_halfspace(x)
    vw, vt = sf.hyperboloid_tangent_to_halfspace(x, n)
    fp = np.empty(w.shape, dtype=complex)
    fm = np.empty(w.shape, dtype=complex)
    for idx in np.ndindex(*w.shape):
        p, v = (w[idx], t[idx]), (vw[idx], vt[idx])
        fp[idx] = sf.h3_ray_endpoint(p, v, +1, tol=1e-6)
        fm[idx] = sf.h3_ray_endpoint(p, v, -1, tol=1e-6)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise SingularPointError("a normal ray ends at infinity; pass another isometry")
    return fp, fm


def g_pullback(f1: np.ndarray, f2: np.ndarray, domain: ChartDomain) -> np.ndarray:
    """Finite-difference pull-back of ``-4/(z1 - z2)^2 dz1 dz2`` by a grid map ``(f1, f2)``."""
    d1 = [grid_diff(f1, domain, a, wrap=False) for a in (0, 1)]
    d2 = [grid_diff(f2, domain, a, wrap=False) for a in (0, 1)]
    c = -4 / (f1 - f2) ** 2
    out = np.empty(f1.shape + (2, 2), dtype=complex)
    for a in range(2):
        for b in range(2):
            out[..., a, b] = c * 0.5 * (d1[a] * d2[b] + d1[b] * d2[a])
    return out
