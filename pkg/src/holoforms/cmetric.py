"""Complex metrics on rectangular 2D charts.

Sign conventions (fixed once here and used everywhere):

* Tensors are written in the coordinate basis ``(d/dx, d/dy)``; a frame
  is stored as a 2x2 matrix whose columns are ``X1, X2``.
* ``theta^i = g(X_i, .)`` and ``omega = g(nabla X2, X1)``, so that
  ``d theta^1 = -omega ^ theta^2`` and ``d theta^2 = omega ^ theta^1``.
* Curvature is ``K = d omega (X1, X2)``; for a frame with ``X2 = J X1``
  this reads ``d omega = K dA``.  With these rules the hyperbolic frame
  ``(y d/dx, y d/dy)`` has ``omega = -dx/y`` and ``K = -1``.
* The standard complex structure is ``J = [[0, -1], [1, 0]]`` on column
  components (``J d/dx = d/dy``), which is orientation ``+1``.

Derivatives of the metric come from an analytic callback when one is
supplied and otherwise from a fourth-order centred stencil with a small
fixed step, so the connection form is accurate at every sample point.
Exterior derivatives of sampled fields use the grid itself (second
order), which is what the refinement studies measure.
"""

from __future__ import annotations

import ast
import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .calg import csqrt, SqrtBranch
from .errors import ArgumentError, DegenerateFrameError, GeometryError, NumericalError

FD_STEP = 1e-3
DET_TOL = 1e-9

Field2 = Callable[[np.ndarray, np.ndarray], np.ndarray]


# ---------------------------------------------------------------- chart

@dataclass(frozen=True)
class ChartDomain:
    """Rectangle ``[x0, x1] x [y0, y1]`` sampled on an ``nx`` by ``ny`` grid.

    A periodic axis drops its right endpoint.  ``deck=True`` marks the
    x-translation by ``x1 - x0`` as the deck transformation of a cylinder
    quotient (it implies periodicity in x).
    """

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int = 64
    ny: int = 64
    periodic: tuple[bool, bool] = (False, False)
    deck: bool = False
    caps: tuple[tuple[tuple[float, float], float], ...] = ()

    def __post_init__(self) -> None:
        if self.nx < 8 or self.ny < 8:
            raise ArgumentError("grid needs at least 8 points per axis")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ArgumentError("empty chart rectangle")
        if self.deck and not self.periodic[0]:
            object.__setattr__(self, "periodic", (True, self.periodic[1]))

    @property
    def period(self) -> float | None:
        return self.x1 - self.x0 if self.deck else None

    def _axis(self, a: float, b: float, n: int, per: bool) -> np.ndarray:
        if per:
            return a + (b - a) * np.arange(n) / n
        return np.linspace(a, b, n)

    @property
    def xs(self) -> np.ndarray:
        return self._axis(self.x0, self.x1, self.nx, self.periodic[0])

    @property
    def ys(self) -> np.ndarray:
        return self._axis(self.y0, self.y1, self.ny, self.periodic[1])

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def hy(self) -> float:
        return float(self.ys[1] - self.ys[0])

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def refined(self, factor: int = 2) -> "ChartDomain":
        """Same chart with the grid spacing divided by ``factor``."""
        def n_new(n, per):
            return n * factor if per else (n - 1) * factor + 1
        return ChartDomain(self.x0, self.x1, self.y0, self.y1, n_new(self.nx, self.periodic[0]),
                           n_new(self.ny, self.periodic[1]), self.periodic, self.deck, self.caps)

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        m = np.ones((self.nx, self.ny), dtype=bool)
        if not self.periodic[0]:
            m[:margin, :] = False
            m[-margin:, :] = False
        if not self.periodic[1]:
            m[:, :margin] = False
            m[:, -margin:] = False
        for (cx, cy), r in self.caps:
            X, Y = self.mesh()
            m &= np.hypot(X - cx, Y - cy) > r
        return m


def grid_diff(F: np.ndarray, domain: ChartDomain, axis: int, wrap: bool = True) -> np.ndarray:
    """Second-order derivative of a grid field along chart axis 0 (x) or 1 (y).

    ``wrap=False`` uses one-sided edge stencils even on periodic axes, for
    fields such as developed maps that pick up monodromy across the seam.
    """
    h = domain.hx if axis == 0 else domain.hy
    if wrap and domain.periodic[axis]:
        return (np.roll(F, -1, axis=axis) - np.roll(F, 1, axis=axis)) / (2 * h)
    return np.gradient(F, h, axis=axis, edge_order=2)


def local_diff(f: Callable[[np.ndarray, np.ndarray], np.ndarray], x, y, step: float = FD_STEP):
    """Fourth-order centred partial derivatives of a pointwise evaluator."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = (1 / 12, -2 / 3, 2 / 3, -1 / 12)
    offs = (-2, -1, 1, 2)
    fx = sum(ck * f(x + o * step, y) for ck, o in zip(c, offs)) / step
    fy = sum(ck * f(x, y + o * step) for ck, o in zip(c, offs)) / step
    return fx, fy


# ---------------------------------------------------------------- fields

@dataclass(frozen=True)
class MetricField:
    """Symmetric complex 2x2 metric evaluator on a chart.

    ``func(x, y)`` returns an array of shape ``x.shape + (2, 2)``.
    ``dfunc`` (optional) returns the pair of partial derivatives.
    """

    func: Field2
    dfunc: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    name: str = "metric"
    params: dict = field(default_factory=dict)

    def __call__(self, x, y) -> np.ndarray:
        g = np.asarray(self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=complex)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def derivatives(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        if self.dfunc is not None:
            gx, gy = self.dfunc(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
            return np.asarray(gx, dtype=complex), np.asarray(gy, dtype=complex)
        return local_diff(self, x, y)

    def scaled(self, f: Field2 | complex, name: str | None = None) -> "MetricField":
        """Conformal multiple ``f * g`` (``f`` a constant or a function of x, y)."""
        if callable(f):
            return MetricField(lambda x, y: f(x, y)[..., None, None] * self(x, y),
                               name=name or f"conformal({self.name})", params=dict(self.params))
        c = complex(f)
        return MetricField(lambda x, y: c * self(x, y), name=name or f"{c}*{self.name}", params=dict(self.params))


@dataclass(frozen=True)
class ShapeField:
    """Endomorphism field ``Psi`` (2x2 in the coordinate basis, acting on columns)."""

    func: Field2
    name: str = "shape"

    def __call__(self, x, y) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=complex)

    def derivatives(self, x, y):
        return local_diff(self, x, y)


def constant_shape(M) -> ShapeField:
    M = np.asarray(M, dtype=complex)
    return ShapeField(lambda x, y: np.broadcast_to(M, np.shape(x) + (2, 2)).copy(), name="constant")


def zero_shape() -> ShapeField:
    return constant_shape(np.zeros((2, 2)))


# ---------------------------------------------------------------- frames

STD_SEEDS = np.eye(2, dtype=complex)


def _frame_and_derivs(G, Gx, Gy, seeds, ref_roots):
    """Gram-Schmidt frame of seed vectors and its exact derivatives.

    ``G`` and its partials are metric arrays (..., 2, 2); ``seeds`` is a
    constant 2x2 matrix of seed columns.
    """
    W = np.asarray(seeds, dtype=complex)
    S = W.T @ G @ W
    Sx = W.T @ Gx @ W
    Sy = W.T @ Gy @ W
    s11, s12, s22 = S[..., 0, 0], S[..., 0, 1], S[..., 1, 1]
    scale = np.max(np.abs(S), axis=(-2, -1))
    if np.any(np.abs(s11) <= DET_TOL * scale):
        raise DegenerateFrameError(0, "first seed is isotropic at some sample point")
    n2 = s22 - s12 ** 2 / s11
    if np.any(np.abs(n2) <= DET_TOL * scale):
        raise DegenerateFrameError(1, "projected second seed is isotropic at some sample point")
    r1 = csqrt(s11, SqrtBranch(None if ref_roots is None else ref_roots[..., 0]))
    r2 = csqrt(n2, SqrtBranch(None if ref_roots is None else ref_roots[..., 1]))
    w1, w2 = W[:, 0], W[:, 1]
    ratio = s12 / s11
    Y2 = w2 - ratio[..., None] * w1
    X = np.empty(G.shape, dtype=complex)
    X[..., :, 0] = w1 / r1[..., None]
    X[..., :, 1] = Y2 / r2[..., None]
    dX = []
    for Sd in (Sx, Sy):
        d11, d12, d22 = Sd[..., 0, 0], Sd[..., 0, 1], Sd[..., 1, 1]
        dr1 = d11 / (2 * r1)
        dX1 = -(dr1 / r1 ** 2)[..., None] * w1
        dratio = (d12 * s11 - s12 * d11) / s11 ** 2
        dY2 = -dratio[..., None] * w1
        dn2 = d22 - 2 * s12 * d12 / s11 + s12 ** 2 * d11 / s11 ** 2
        dr2 = dn2 / (2 * r2)
        dX2 = dY2 / r2[..., None] - Y2 * (dr2 / r2 ** 2)[..., None]
        D = np.empty(G.shape, dtype=complex)
        D[..., :, 0] = dX1
        D[..., :, 1] = dX2
        dX.append(D)
    roots = np.stack([r1, r2], axis=-1)
    return X, dX[0], dX[1], roots


@dataclass
class FrameSpec:
    """How to build an orthonormal frame: seed vectors, then a constant rotation."""

    seeds: np.ndarray = field(default_factory=lambda: STD_SEEDS.copy())
    rotation: np.ndarray | None = None
    positive: int | None = None  # if set, flip X2 so that X2 = J X1 for this orientation


def rotation2(angle: complex) -> np.ndarray:
    """Element of SO(2, C) with complex angle."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass
class PointFrame:
    """Frame, its partial derivatives and metric data at a batch of points."""

    X: np.ndarray
    Xx: np.ndarray
    Xy: np.ndarray
    roots: np.ndarray
    G: np.ndarray
    Gx: np.ndarray
    Gy: np.ndarray


def frame_at(g: MetricField, x, y, spec: FrameSpec, ref_roots=None, flip2=None) -> PointFrame:
    """Evaluate the frame of ``spec`` at arbitrary points with branch references."""
    G = g(x, y)
    Gx, Gy = g.derivatives(x, y)
    X, Xx, Xy, roots = _frame_and_derivs(G, Gx, Gy, spec.seeds, ref_roots)
    if flip2 is not None:
        sgn = np.where(flip2, -1.0, 1.0)[..., None]
        X[..., :, 1] *= sgn
        Xx[..., :, 1] *= sgn
        Xy[..., :, 1] *= sgn
    if spec.rotation is not None:
        R = np.asarray(spec.rotation, dtype=complex)
        X, Xx, Xy = X @ R, Xx @ R, Xy @ R
    return PointFrame(X, Xx, Xy, roots, G, Gx, Gy)


@dataclass
class OrthoFrame:
    """Orthonormal frame sampled on a chart grid, with branch bookkeeping."""

    metric: MetricField
    domain: ChartDomain
    spec: FrameSpec
    X: np.ndarray          # (nx, ny, 2, 2), columns X1, X2
    roots: np.ndarray      # (nx, ny, 2) chosen square roots
    flip2: np.ndarray      # (nx, ny) bool, X2 sign flips for positivity

    def nearest_refs(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """Reference roots and flip flags of the nearest grid node."""
        d = self.domain
        i = np.rint((np.asarray(x) - d.x0) / d.hx).astype(int)
        j = np.rint((np.asarray(y) - d.y0) / d.hy).astype(int)
        i = np.mod(i, d.nx) if d.periodic[0] else np.clip(i, 0, d.nx - 1)
        j = np.mod(j, d.ny) if d.periodic[1] else np.clip(j, 0, d.ny - 1)
        return self.roots[i, j], self.flip2[i, j]

    def at(self, x, y) -> PointFrame:
        refs, flips = self.nearest_refs(x, y)
        return frame_at(self.metric, x, y, self.spec, refs, flips)


def _continue_roots(roots: np.ndarray) -> np.ndarray:
    """Make principal roots on a grid continuous: along row y0, then up every column."""
    r = roots.copy()
    nx, ny = r.shape[:2]
    for i in range(1, nx):
        flip = np.real(r[i, 0] * np.conj(r[i - 1, 0])) < 0
        r[i, 0] = np.where(flip, -r[i, 0], r[i, 0])
    for j in range(1, ny):
        flip = np.real(r[:, j] * np.conj(r[:, j - 1])) < 0
        r[:, j] = np.where(flip, -r[:, j], r[:, j])
    return r


def frame_orthonormal(g: MetricField, domain: ChartDomain, spec: FrameSpec | None = None,
                      seeds=None, positive: int | None = None) -> OrthoFrame:
    """Branch-continuous Gram-Schmidt frame of ``g`` on the grid.

    Raises :class:`DegenerateFrameError` at isotropic intermediate
    vectors, and :class:`NumericalError` when the frame fails to close
    up across a periodic direction (no deck-invariant choice).
    """
    spec = spec or FrameSpec()
    if seeds is not None:
        spec = FrameSpec(np.asarray(seeds, dtype=complex), spec.rotation, spec.positive)
    if positive is not None:
        spec = FrameSpec(spec.seeds, spec.rotation, positive)
    X, Y = domain.mesh()
    try:
        base = frame_at(g, X, Y, FrameSpec(spec.seeds))
    except DegenerateFrameError as exc:
        raise DegenerateFrameError(exc.index, f"{exc}; chart {g.name}") from None
    roots = _continue_roots(base.roots)
    # closure across periodic directions
    for axis in (0, 1):
        if not domain.periodic[axis]:
            continue
        if axis == 0:
            xe, ye, ref, start = np.full(domain.ny, domain.x1), domain.ys, roots[-1, :], roots[0, :]
        else:
            xe, ye, ref, start = domain.xs, np.full(domain.nx, domain.y1), roots[:, -1], roots[:, 0]
        end = frame_at(g, xe, ye, FrameSpec(spec.seeds), ref).roots
        if np.any(np.real(end * np.conj(start)) < 0):
            raise NumericalError(f"frame is not invariant under the period along axis {axis}")
    flip2 = np.zeros((domain.nx, domain.ny), dtype=bool)
    fr = frame_at(g, X, Y, FrameSpec(spec.seeds), roots)
    if spec.positive is not None:
        J = bicomplex_matrix(fr.G, spec.positive)
        JX1 = J @ fr.X[..., :, 0:1]
        c = np.einsum("...i,...ij,...j->...", JX1[..., 0], fr.G, fr.X[..., :, 1])
        flip2 = np.real(c) < 0
        if np.any(np.abs(np.abs(c) - 1) > 1e-6):
            raise GeometryError("J X1 is not a unit vector orthogonal to X1")
        if np.any(flip2) and not np.all(flip2):
            warnings.warn("positive frame needed non-uniform X2 flips", RuntimeWarning, stacklevel=2)
    frame = frame_at(g, X, Y, FrameSpec(spec.seeds, spec.rotation), roots, flip2)
    return OrthoFrame(g, domain, spec, frame.X, roots, flip2)


# ---------------------------------------------------------------- connection form

def coframe_and_omega(pf: PointFrame) -> tuple[np.ndarray, np.ndarray]:
    """Coframe components ``theta[..., i, a]`` and ``omega[..., a]`` at points.

    ``omega`` is the unique 1-form with ``d theta^1 = -omega ^ theta^2``
    and ``d theta^2 = omega ^ theta^1`` (2x2 linear solve per point).
    """
    G, Gx, Gy, X, Xx, Xy = pf.G, pf.Gx, pf.Gy, pf.X, pf.Xx, pf.Xy
    theta = np.swapaxes(G @ X, -1, -2)  # theta[i, a] = (g X_i)_a
    dth_x = np.swapaxes(Gx @ X + G @ Xx, -1, -2)
    dth_y = np.swapaxes(Gy @ X + G @ Xy, -1, -2)
    D = dth_x[..., :, 1] - dth_y[..., :, 0]  # d theta^i (dx, dy)
    t1x, t1y = theta[..., 0, 0], theta[..., 0, 1]
    t2x, t2y = theta[..., 1, 0], theta[..., 1, 1]
    # [-t2y, t2x; t1y, -t1x] [w_x, w_y]^T = [D1, D2]
    det = t2y * t1x - t2x * t1y
    wx = (-t1x * D[..., 0] - t2x * D[..., 1]) / det
    wy = (-t1y * D[..., 0] - t2y * D[..., 1]) / det
    return theta, np.stack([wx, wy], axis=-1)


@dataclass
class ConnectionForm:
    frame: OrthoFrame
    theta: np.ndarray  # (nx, ny, 2, 2): theta[i, a]
    omega: np.ndarray  # (nx, ny, 2): components on dx, dy

    @property
    def domain(self) -> ChartDomain:
        return self.frame.domain

    def at(self, x, y) -> np.ndarray:
        _, w = coframe_and_omega(self.frame.at(x, y))
        return w

    def structure_residual(self) -> np.ndarray:
        """Grid residuals of both structure equations, ``(nx, ny, 2)``."""
        d = self.domain
        th = self.theta
        dth = grid_diff(th[..., 1], d, 0) - grid_diff(th[..., 0], d, 1)
        w = self.omega
        r1 = dth[..., 0] + (w[..., 0] * th[..., 1, 1] - w[..., 1] * th[..., 1, 0])
        r2 = dth[..., 1] - (w[..., 0] * th[..., 0, 1] - w[..., 1] * th[..., 0, 0])
        return np.stack([r1, r2], axis=-1)


def connection_form(frame: OrthoFrame, warn: bool = True) -> ConnectionForm:
    X, Y = frame.domain.mesh()
    theta, omega = coframe_and_omega(frame.at(X, Y))
    cf = ConnectionForm(frame, theta, omega)
    if warn:
        d = frame.domain
        res = np.abs(cf.structure_residual())[d.interior_mask()]
        h2 = max(d.hx, d.hy) ** 2
        scale = 1.0 + float(np.max(np.abs(theta)))
        if res.size and res.max() > 10 * h2 * scale * (1 + float(np.max(np.abs(omega)))) ** 2:
            warnings.warn(f"structure-equation residual {res.max():.2e} exceeds the O(h^2) scale",
                          RuntimeWarning, stacklevel=2)
    return cf


# ---------------------------------------------------------------- curvature

def _d_omega_local(frame: OrthoFrame, x, y, step: float = FD_STEP) -> np.ndarray:
    refs, flips = frame.nearest_refs(x, y)

    def w(xx, yy):
        _, om = coframe_and_omega(frame_at(frame.metric, xx, yy, frame.spec, refs, flips))
        return om
    wx, wy = local_diff(w, x, y, step)
    return wx[..., 1] - wy[..., 0]


def _x1x2_wedge(X: np.ndarray) -> np.ndarray:
    return X[..., 0, 0] * X[..., 1, 1] - X[..., 1, 0] * X[..., 0, 1]


def curvature_field(g: MetricField, domain: ChartDomain, stencil: str = "grid",
                    frame: OrthoFrame | None = None) -> np.ndarray:
    """Gaussian curvature ``K = d omega (X1, X2)`` on the grid.

    ``stencil="grid"`` differentiates the sampled connection form with
    the grid spacing (second order, boundary rows one-sided);
    ``stencil="local"`` uses a fine fourth-order stencil at each node.
    """
    frame = frame or frame_orthonormal(g, domain)
    if stencil == "grid":
        cf = connection_form(frame, warn=False)
        dw = grid_diff(cf.omega[..., 1], domain, 0) - grid_diff(cf.omega[..., 0], domain, 1)
    elif stencil == "local":
        X, Y = domain.mesh()
        dw = _d_omega_local(frame, X, Y)
    else:
        raise ArgumentError(f"unknown stencil {stencil!r}")
    return dw * _x1x2_wedge(frame.X)


def curvature(g: MetricField, domain: ChartDomain, i: int, j: int, stencil: str = "grid",
              frame: OrthoFrame | None = None) -> complex:
    """Curvature at grid node ``(i, j)``; interior nodes only for the grid stencil."""
    if not (0 <= i < domain.nx and 0 <= j < domain.ny):
        raise ArgumentError("grid index out of range")
    if stencil == "grid" and not domain.interior_mask(1)[i, j] and not domain.caps:
        raise ArgumentError("boundary node: centred grid stencil unavailable")
    return complex(curvature_field(g, domain, stencil, frame)[i, j])


def curvature_at(g: MetricField, x, y, seeds=None, step: float = FD_STEP):
    """Pointwise curvature with fine local stencils (principal branches)."""
    spec = FrameSpec() if seeds is None else FrameSpec(np.asarray(seeds, dtype=complex))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pf = frame_at(g, x, y, spec)
    refs = pf.roots

    def w(xx, yy):
        return coframe_and_omega(frame_at(g, xx, yy, spec, refs))[1]
    wx, wy = local_diff(w, x, y, step)
    return (wx[..., 1] - wy[..., 0]) * _x1x2_wedge(pf.X)


# ---------------------------------------------------------------- positivity and J

@dataclass(frozen=True)
class Classification:
    kind: str        # "positive" or "not-positive"
    subkind: str     # riemannian | negative-definite | positive-complex | real-indefinite | generic-non-positive
    mu: tuple[complex, complex]

    @property
    def positive(self) -> bool:
        return self.kind == "positive"


def isotropic_slopes(G: np.ndarray, tol: float = DET_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Slopes ``mu`` with ``g(dx + mu dy, dx + mu dy) = 0`` (``inf`` if d/dy is isotropic)."""
    G = np.asarray(G, dtype=complex)
    g11, g12, g22 = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    det = g11 * g22 - g12 ** 2
    scale = np.max(np.abs(G), axis=(-2, -1)) ** 2
    if np.any(np.abs(det) <= tol * scale):
        raise GeometryError("degenerate metric: double isotropic direction")
    s = np.sqrt(-det)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.abs(g22) <= 1e-14 * np.sqrt(scale)
        m1 = np.where(small, -g11 / (2 * np.where(small, g12, 1)), (-g12 + s) / np.where(small, 1, g22))
        m2 = np.where(small, np.inf + 0j, (-g12 - s) / np.where(small, 1, g22))
    return m1, m2


SLOPE_TOL = 1e-10


def _opposite_sides(m1, m2, tol: float = SLOPE_TOL):
    """Isotropic slopes in opposite open half-planes, ignoring roundoff-sized imaginary parts."""
    with np.errstate(invalid="ignore"):
        ok = np.isfinite(m1) & np.isfinite(m2) & (m1.imag * m2.imag < 0)
        sep = np.minimum(np.abs(m1.imag) / (1 + np.abs(m1)), np.abs(m2.imag) / (1 + np.abs(m2)))
    return ok & (sep > tol)


def classify_matrix(G, tol: float = 1e-12) -> Classification:
    G = np.asarray(G, dtype=complex)
    m1, m2 = isotropic_slopes(G)
    m1, m2 = complex(m1), complex(m2)
    real = np.max(np.abs(G.imag)) <= tol * np.max(np.abs(G))
    ev = np.linalg.eigvalsh(G.real) if real else None
    positive = bool(_opposite_sides(np.asarray(m1), np.asarray(m2)))
    if positive:
        if real and np.all(ev > 0):
            sub = "riemannian"
        elif real and np.all(ev < 0):
            sub = "negative-definite"
        else:
            sub = "positive-complex"
        return Classification("positive", sub, (m1, m2))
    real_dirs = all(np.isinf(m) or abs(m.imag) <= SLOPE_TOL * max(1.0, abs(m)) for m in (m1, m2))
    return Classification("not-positive", "real-indefinite" if real and real_dirs else "generic-non-positive",
                          (m1, m2))


def classify(g: MetricField, domain: ChartDomain, i: int, j: int) -> Classification:
    X, Y = domain.mesh()
    return classify_matrix(g(X[i, j], Y[i, j]))


def is_positive(g: MetricField, domain: ChartDomain) -> bool:
    X, Y = domain.mesh()
    m1, m2 = isotropic_slopes(g(X, Y))
    return bool(np.all(_opposite_sides(m1, m2)))


def bicomplex_matrix(G: np.ndarray, orientation: int = 1) -> np.ndarray:
    """The bicomplex structure of a positive metric (batched).

    ``J`` acts as ``+i`` on the isotropic line whose slope has negative
    imaginary part when ``orientation=+1``; this reproduces
    ``J d/dx = d/dy`` for the Euclidean metric.
    """
    if orientation not in (1, -1):
        raise ArgumentError("orientation must be +1 or -1")
    m1, m2 = isotropic_slopes(G)
    if not np.all(_opposite_sides(m1, m2)):
        raise GeometryError("metric is not positive: no bicomplex structure")
    lo = np.where(m1.imag < 0, m1, m2)  # +i eigenline for orientation +1
    hi = np.where(m1.imag < 0, m2, m1)
    # J = P diag(i, -i) P^{-1}, P = [[1, 1], [lo, hi]]
    d = hi - lo
    J = np.empty(np.shape(lo) + (2, 2), dtype=complex)
    J[..., 0, 0] = 1j * (hi + lo) / d
    J[..., 0, 1] = -2j / d
    J[..., 1, 0] = 2j * lo * hi / d
    J[..., 1, 1] = -1j * (hi + lo) / d
    return orientation * J


@dataclass
class Bicomplex:
    domain: ChartDomain
    J: np.ndarray  # (nx, ny, 2, 2)
    orientation: int


def bicomplex(g: MetricField, domain: ChartDomain, orientation: int = 1) -> Bicomplex:
    X, Y = domain.mesh()
    return Bicomplex(domain, bicomplex_matrix(g(X, Y), orientation), orientation)


def area_form(g: MetricField, domain: ChartDomain, orientation: int = 1) -> np.ndarray:
    """Coefficient ``a`` of ``dA = a dx ^ dy`` where ``dA = g(J., .)``."""
    X, Y = domain.mesh()
    G = g(X, Y)
    J = bicomplex_matrix(G, orientation)
    return (np.swapaxes(J, -1, -2) @ G)[..., 0, 1]


# ---------------------------------------------------------------- Gauss-Bonnet

@dataclass(frozen=True)
class SurfaceSpec:
    """Closed surface presentation for :func:`gauss_bonnet`.

    ``torus``: chart ``[0, a] x [0, b]`` periodic in both directions.
    ``sphere``: polar chart ``(theta, phi)`` with polar caps of angular
    radius ``cap`` removed; cap frames come from the Cartesian chart
    ``(sin theta cos phi, sin theta sin phi)`` near each pole.
    """

    kind: str
    n1: int = 64
    n2: int = 128
    periods: tuple[float, float] = (1.0, 1.0)
    cap: float = 0.3

    @property
    def chi(self) -> int:
        return {"torus": 0, "sphere": 2}[self.kind]

    def domain(self) -> ChartDomain:
        if self.kind == "torus":
            return ChartDomain(0.0, self.periods[0], 0.0, self.periods[1], self.n1, self.n2, (True, True))
        if self.kind == "sphere":
            return ChartDomain(self.cap, np.pi - self.cap, 0.0, 2 * np.pi, self.n1, self.n2, (False, True))
        raise ArgumentError(f"unknown closed surface {self.kind!r}")


@dataclass
class GaussBonnetResult:
    total: complex
    area_term: complex
    boundary_terms: list[complex]
    winding_terms: list[float]
    chi: int

    @property
    def expected(self) -> float:
        return 2 * np.pi * self.chi

    @property
    def pi_multiple(self) -> float:
        return float(np.real(self.total) / np.pi)


def _winding(z: np.ndarray, max_jump: float = np.pi / 2) -> float:
    """Total change of ``arg z`` along a closed sampled loop (first point not repeated)."""
    ph = np.angle(np.append(z, z[0]))
    jumps = np.diff(ph)
    jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
    if np.any(np.abs(jumps) > max_jump) or np.any(np.abs(z) < 1e-12):
        raise NumericalError("frame angle unresolved on a boundary circle; refine the grid")
    return float(np.sum(jumps))


def gauss_bonnet(surface: SurfaceSpec, g: MetricField, orientation: int = 1) -> GaussBonnetResult:
    """``int K dA`` over a closed surface, assembled as in the proof via caps.

    Over the chart the integrand ``K dA = d omega`` of a positive frame is
    integrated directly.  For every removed cap ``B_k`` the interior
    integral equals ``oint (omega + d alpha_k)`` over its boundary, where
    ``alpha_k`` is the complex angle between the chart frame and a frame
    regular on the cap; ``oint d alpha_k`` is a multiple of pi computed
    as a winding number of ``exp(2 i alpha_k)``.
    """
    d = surface.domain()
    if not is_positive(g, d):
        raise GeometryError("Gauss-Bonnet needs a positive metric")
    frame = frame_orthonormal(g, d, positive=orientation)
    X, Y = d.mesh()
    KdA = _d_omega_local(frame, X, Y)  # d omega on (dx, dy): equals K dA coefficient
    if surface.kind == "torus":
        area = complex(np.sum(KdA) * d.hx * d.hy)
        return GaussBonnetResult(area, area, [], [], surface.chi)

    # sphere: x = theta (Simpson), y = phi (periodic rectangle rule)
    area = complex(simpson(np.sum(KdA, axis=1) * d.hy, x=d.xs))
    phis = d.ys
    boundary, windings = [], []
    for theta0, direction in ((d.x0, 1), (d.x1, -1)):
        th = np.full_like(phis, theta0)
        pf = frame.at(th, phis)
        _, om = coframe_and_omega(pf)
        # phi runs in the direction of the cap boundary orientation
        b = complex(direction * np.sum(om[..., 1]) * d.hy)
        G = pf.G
        Jm = bicomplex_matrix(G, orientation)
        # cap-local reference field d/du in (theta, phi) components
        e = np.stack([np.cos(phis) / np.cos(th), -np.sin(phis) / np.sin(th)], axis=-1)
        Je = np.einsum("...ij,...j->...i", Jm, e)
        Y1 = pf.X[..., :, 0]

        def gg(u, v):
            return np.einsum("...i,...ij,...j->...", u, G, v)
        e2ia = (gg(Y1, e) + 1j * gg(Y1, Je)) ** 2 / (gg(Y1, Y1) * gg(e, e))
        windings.append(direction * _winding(e2ia) / 2)
        boundary.append(b)
    total = area + sum(boundary) + sum(windings)
    return GaussBonnetResult(total, area, boundary, windings, surface.chi)


# ---------------------------------------------------------------- catalog

def _sym(a, b, c):
    a, b, c = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex),
                                  np.asarray(c, dtype=complex))
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = b
    out[..., 1, 1] = c
    return out


def euclidean(sign: float = 1.0) -> MetricField:
    return MetricField(lambda x, y: sign * _sym(np.ones_like(x), 0 * x, np.ones_like(x)),
                       lambda x, y: (_sym(0 * x, 0 * x, 0 * x), _sym(0 * x, 0 * x, 0 * x)),
                       name="euclidean" if sign > 0 else "neg-euclidean")


def hyperbolic_plane() -> MetricField:
    """Upper half-plane ``(dx^2 + dy^2)/y^2``."""
    def dg(x, y):
        z = 0 * x
        return _sym(z, z, z), _sym(-2 / y ** 3, z, -2 / y ** 3)
    return MetricField(lambda x, y: _sym(1 / y ** 2, 0 * x, 1 / y ** 2), dg, name="hyperbolic-plane")


def hyperbolic_cylinder(length: float) -> MetricField:
    """Fermi coordinates ``cosh^2(y) dx^2 + dy^2`` around a closed geodesic of length ``length``."""
    def dg(x, y):
        z = 0 * x
        return _sym(z, z, z), _sym(2 * np.cosh(y) * np.sinh(y), z, z)
    return MetricField(lambda x, y: _sym(np.cosh(y) ** 2, 0 * x, np.ones_like(x)), dg,
                       name="hyperbolic-cylinder", params={"length": length})


def round_sphere(r: float = 1.0) -> MetricField:
    """``r^2 (d theta^2 + sin^2 theta d phi^2)`` in the polar chart ``(x, y) = (theta, phi)``."""
    def dg(x, y):
        z = 0 * x
        return _sym(z, z, r ** 2 * 2 * np.sin(x) * np.cos(x)), _sym(z, z, z)
    return MetricField(lambda x, y: r ** 2 * _sym(np.ones_like(x), 0 * x, np.sin(x) ** 2), dg,
                       name="round-sphere", params={"r": r})


def flat_torus() -> MetricField:
    m = euclidean()
    return MetricField(m.func, m.dfunc, name="flat-torus")


def sphere_ambient(theta, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit-sphere Cartesian coordinates of the polar chart point."""
    return np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)


_ALLOWED_FUNCS = {name: getattr(np, name) for name in
                  ("exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt", "abs")}
_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
                  ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd)


def parse_expression(expr: str, names: tuple[str, ...] = ("x", "y")) -> Field2:
    """Compile an arithmetic expression in ``names`` (numpy functions, ``pi``, ``I``)."""
    tree = ast.parse(expr, mode="eval")
    allowed = set(names) | set(_ALLOWED_FUNCS) | {"pi", "I"}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ArgumentError(f"disallowed syntax in expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ArgumentError(f"unknown name {node.id!r} in expression")
    code = compile(tree, "<expr>", "eval")
    env = dict(_ALLOWED_FUNCS, pi=np.pi, I=1j, __builtins__={})

    def f(*args):
        if len(args) != len(names):
            raise ArgumentError(f"expression expects {len(names)} arguments")
        val = eval(code, env, dict(zip(names, args)))  # noqa: S307 - names and syntax are whitelisted
        return np.broadcast_to(np.asarray(val, dtype=complex), np.shape(args[0])).copy()
    return f


def conformal(base: MetricField, f: Field2 | str) -> MetricField:
    fn = parse_expression(f) if isinstance(f, str) else f
    return base.scaled(fn, name=f"conformal({base.name})")


def catalog(name: str, **params) -> MetricField:
    """Metric by catalog name: hyperbolic-plane, hyperbolic-cylinder, round-sphere,
    flat-torus, euclidean, conformal, landslide."""
    if name == "hyperbolic-plane":
        return hyperbolic_plane()
    if name == "hyperbolic-cylinder":
        return hyperbolic_cylinder(float(params.get("length", 1.0)))
    if name == "round-sphere":
        return round_sphere(float(params.get("r", 1.0)))
    if name == "flat-torus":
        return flat_torus()
    if name == "euclidean":
        return euclidean(float(params.get("sign", 1.0)))
    if name == "conformal":
        base = params["base"]
        base = catalog(base["name"], **base.get("params", {})) if isinstance(base, dict) else catalog(base)
        return conformal(base, params["f"])
    if name == "landslide":
        from .families import landslide_metric, regular_tensor
        h = params.get("h", "hyperbolic-cylinder")
        h = catalog(h["name"], **h.get("params", {})) if isinstance(h, dict) else catalog(h)
        b = regular_tensor(params.get("b", "identity"), **params.get("b_params", {}))
        return landslide_metric(h, b, complex(params.get("z", 0.0)))
    raise ArgumentError(f"unknown metric {name!r}")


def export_grid_csv(path, domain: ChartDomain, fields: dict[str, np.ndarray]) -> None:
    """Write grid fields as CSV with ``x, y`` and ``re_*``/``im_*`` columns.

    Array fields with trailing axes are flattened to one column per
    component (``name_11``, ``name_12`` ...).  Floats use 17 significant
    digits so files are reproducible bit for bit.
    """
    X, Y = domain.mesh()
    cols: list[tuple[str, np.ndarray]] = []
    for name, arr in fields.items():
        arr = np.asarray(arr)
        tail = arr.shape[2:]
        for idx in np.ndindex(*tail) if tail else [()]:
            suffix = "" if not idx else "_" + "".join(str(k + 1) for k in idx)
            comp = arr[(slice(None), slice(None)) + idx]
            cols.append((f"re_{name}{suffix}", np.real(comp)))
            cols.append((f"im_{name}{suffix}", np.imag(comp)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"] + [c[0] for c in cols])
        for i in range(domain.nx):
            for j in range(domain.ny):
                w.writerow([f"{X[i, j]:.17g}", f"{Y[i, j]:.17g}"] + [f"{c[1][i, j]:.17g}" for c in cols])
