"""Holomorphic families of immersion data and their monodromy traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cmetric import (ChartDomain, MetricField, ShapeField, bicomplex_matrix, constant_shape)
from .errors import ArgumentError, GeometryError, NumericalError
from .immersion import ImmersionData, codazzi_residual, monodromy

POLE_TOL = 1e-8


# ---------------------------------------------------------------- regular tensors

def regular_tensor(name: str = "identity", **params) -> ShapeField:
    """Catalog of h-regular tensors.

    ``identity``: ``b = id``.
    ``cylinder``: on ``cosh^2(y) dx^2 + dy^2``, ``b = diag(l, 1/l)`` with
    ``l(y) = sqrt(1 - C / cosh^2 y)``; the Codazzi equation reduces to
    ``l' = (1/l - l) tanh y``, which this profile solves.
    ``constant``: a constant coordinate matrix ``M`` (generally not Codazzi).
    """
    if name == "identity":
        return constant_shape(np.eye(2))
    if name == "cylinder":
        C = float(params.get("C", -0.5))

        def b(x, y):
            lam = np.sqrt(1 - C / np.cosh(y) ** 2)
            out = np.zeros(np.shape(y) + (2, 2), dtype=complex)
            out[..., 0, 0] = lam
            out[..., 1, 1] = 1 / lam
            return out
        return ShapeField(b, name=f"cylinder-regular(C={C})")
    if name == "constant":
        return constant_shape(np.asarray(params["M"], dtype=complex))
    raise ArgumentError(f"unknown regular tensor {name!r}")


@dataclass
class RegularPair:
    domain: ChartDomain
    h: MetricField
    b: ShapeField


@dataclass
class RegularReport:
    self_adjoint: float
    codazzi: float
    det: float
    tol: float

    @property
    def passed(self) -> dict:
        return {"self_adjoint": self.self_adjoint <= self.tol, "codazzi": self.codazzi <= self.tol,
                "det": self.det <= self.tol}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def regular_check(pair: RegularPair, tol: float = 1e-6, stencil: str = "local") -> RegularReport:
    X, Y = pair.domain.mesh()
    H = pair.h(X, Y)
    Bm = pair.b(X, Y)
    HB = H @ Bm
    sa = float(np.max(np.abs(HB - np.swapaxes(HB, -1, -2))))
    cod = codazzi_residual(ImmersionData(pair.domain, pair.h, pair.b), stencil)
    mask = pair.domain.interior_mask(1) if stencil == "grid" else np.ones(cod.shape[:2], dtype=bool)
    det = float(np.max(np.abs(np.linalg.det(Bm) - 1)))
    return RegularReport(sa, float(np.max(np.abs(cod[mask]))), det, tol)


# ---------------------------------------------------------------- landslide

def landslide_family(pair: RegularPair, z: complex) -> ImmersionData:
    """Immersion data ``(cosh^2(z) h, -tanh(z) b)``."""
    c = np.cosh(z)
    if abs(c) <= POLE_TOL:
        raise ArgumentError(f"cosh(z) vanishes at z = {z}")
    c2, t = complex(c ** 2), complex(np.tanh(z))
    g = pair.h.scaled(c2, name=f"cosh^2({z})*{pair.h.name}")
    if pair.h.dfunc is not None:
        dh = pair.h.dfunc
        g = MetricField(g.func, lambda x, y: tuple(c2 * d for d in dh(x, y)), g.name)
    psi = ShapeField(lambda x, y: -t * pair.b(x, y), name=f"-tanh({z})*{pair.b.name}")
    return ImmersionData(pair.domain, g, psi)


def landslide_metric(h: MetricField | RegularPair, b: ShapeField | None = None, z: complex = 0.0,
                     orientation: int = 1) -> MetricField:
    """``h((cos z - sin z J b) ., (cos z - sin z J b) .)`` with ``J`` the complex structure of ``h``."""
    if isinstance(h, RegularPair):
        h, b = h.h, h.b
    if b is None:
        raise ArgumentError("landslide_metric needs a regular tensor b")
    cz, sz = complex(np.cos(z)), complex(np.sin(z))

    def g(x, y):
        H = h(x, y)
        J = bicomplex_matrix(H, orientation)
        M = cz * np.eye(2) - sz * (J @ b(x, y))
        return np.swapaxes(M, -1, -2) @ H @ M
    return MetricField(g, name=f"landslide({h.name}, z={z})", params={"z": complex(z)})


# ---------------------------------------------------------------- Cauchy-Riemann test

def cr_field(F: np.ndarray, spacing: float | tuple[float, float]) -> np.ndarray:
    """``|(dF/dRe + i dF/dIm)/2|`` at interior nodes by centred differences.

    ``F[i, j]`` samples the function at ``re_i + i im_j``.
    """
    F = np.asarray(F, dtype=complex)
    if F.ndim != 2 or min(F.shape) < 5:
        raise ArgumentError("cr_residual needs at least a 5 x 5 grid")
    if not np.all(np.isfinite(F)):
        raise NumericalError("non-finite samples in the parameter grid")
    hr, hi = (spacing, spacing) if np.isscalar(spacing) else spacing
    dr = (F[2:, 1:-1] - F[:-2, 1:-1]) / (2 * hr)
    di = (F[1:-1, 2:] - F[1:-1, :-2]) / (2 * hi)
    return np.abs(dr + 1j * di) / 2


def cr_residual(F: np.ndarray, spacing: float | tuple[float, float]) -> float:
    """Max of :func:`cr_field` over the interior nodes."""
    return float(np.max(cr_field(F, spacing)))


# ---------------------------------------------------------------- sweeps

@dataclass
class HoloFamily:
    """One-parameter family ``lam -> ImmersionData`` sampled on a square around ``center``."""

    evaluator: Callable[[complex], ImmersionData]
    center: complex = 0.0
    radius: float = 0.2
    samples: int = 7
    name: str = "family"

    @property
    def spacing(self) -> float:
        return 2 * self.radius / (self.samples - 1)

    def grid(self) -> np.ndarray:
        t = np.linspace(-self.radius, self.radius, self.samples)
        return self.center + t[:, None] + 1j * t[None, :]

    def refined(self) -> "HoloFamily":
        return HoloFamily(self.evaluator, self.center, self.radius, 2 * self.samples - 1, self.name)


def landslide_holofamily(pair: RegularPair, center: complex = 0.0, radius: float = 0.2, samples: int = 7,
                         perturbation: float = 0.0) -> HoloFamily:
    """Landslide family, optionally with the anti-holomorphic term ``perturbation * conj(lam) * h``."""
    def ev(lam: complex) -> ImmersionData:
        data = landslide_family(pair, lam)
        if perturbation:
            eps = perturbation * np.conj(lam)
            g0 = data.g
            data = ImmersionData(data.domain, MetricField(lambda x, y: g0(x, y) + eps * pair.h(x, y),
                                                          name=g0.name + "+pert"), data.psi)
        return data
    name = "landslide" + ("+antiholomorphic" if perturbation else "")
    return HoloFamily(ev, center, radius, samples, name)


@dataclass
class TraceSurface:
    lam: np.ndarray
    trace: np.ndarray
    spacing: float
    generator: str
    family: str
    flagged: np.ndarray = field(default=None)

    @property
    def cr_residual(self) -> float:
        return cr_residual(self.trace, self.spacing)


def _continue_signs(T: np.ndarray, small: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Fix the sign of every trace by nearest continuation outward from the centre."""
    T = T.copy()
    n, m = T.shape
    c = (n // 2, m // 2)
    done = np.zeros(T.shape, dtype=bool)
    done[c] = True
    flagged = np.abs(T) < small
    order = sorted(np.ndindex(n, m), key=lambda ij: max(abs(ij[0] - c[0]), abs(ij[1] - c[1])))
    for i, j in order[1:]:
        nb = [(a, b) for a in (i - 1, i, i + 1) for b in (j - 1, j, j + 1)
              if 0 <= a < n and 0 <= b < m and done[a, b]]
        ref = np.mean([T[a, b] for a, b in nb])
        if abs(T[i, j] + ref) < abs(T[i, j] - ref):
            T[i, j] = -T[i, j]
        done[i, j] = True
    return T, flagged


def sweep_monodromy(family: HoloFamily, row: int | None = None, gate: float | None = 1e-4,
                    substeps: int = 8) -> TraceSurface:
    """Monodromy trace of the deck generator over the parameter grid."""
    lam = family.grid()
    T = np.empty(lam.shape, dtype=complex)
    for idx in np.ndindex(*lam.shape):
        data = family.evaluator(complex(lam[idx]))
        r = data.domain.ny // 2 if row is None else row
        T[idx] = monodromy(data, row=r, gate=gate, substeps=substeps).trace
    T, flagged = _continue_signs(T)
    return TraceSurface(lam, T, family.spacing, "delta", family.name, flagged)


def trace_refinement(family: HoloFamily, levels: int = 2, **kw) -> tuple[list[TraceSurface], list[float]]:
    """Sweep at successive halvings of the parameter spacing; returns surfaces and CR ratios."""
    surfaces = []
    fam = family
    for _ in range(levels):
        surfaces.append(sweep_monodromy(fam, **kw))
        fam = fam.refined()
    # compare at the interior nodes of the coarsest grid, which every level contains
    res = [shared_cr_residual(s, k) for k, s in enumerate(surfaces)]
    return surfaces, [res[k] / res[k + 1] for k in range(len(res) - 1)]


def shared_cr_residual(surface: "TraceSurface", level: int) -> float:
    """CR residual restricted to the nodes of the grid ``level`` halvings coarser."""
    f = 2 ** level
    fld = cr_field(surface.trace, surface.spacing)
    # interior node (i, j) of the fine grid is fld[i-1, j-1]; coarse interior nodes sit at i = f * k, k >= 1
    return float(np.max(fld[f - 1::f, f - 1::f]))


def trace_surface_csv(ts: TraceSurface, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_lambda", "im_lambda", "re_trace", "im_trace"])
        for idx in np.ndindex(*ts.lam.shape):
            lam, tr = ts.lam[idx], ts.trace[idx]
            w.writerow([f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{tr.real:.17g}", f"{tr.imag:.17g}"])


def cylinder_pair(length: float, nx: int = 64, ny: int = 16, half_width: float = 1.0, C: float = -0.5) -> RegularPair:
    """Hyperbolic cylinder with the regular tensor of :func:`regular_tensor` ``cylinder``."""
    from .cmetric import hyperbolic_cylinder
    dom = ChartDomain(0.0, length, -half_width, half_width, nx, ny, deck=True)
    b = regular_tensor("identity") if C == 0 else regular_tensor("cylinder", C=C)
    return RegularPair(dom, hyperbolic_cylinder(length), b)


def is_degenerate(g: MetricField, domain: ChartDomain, tol: float = 1e-10) -> bool:
    X, Y = domain.mesh()
    G = g(X, Y)
    return bool(np.any(np.abs(np.linalg.det(G)) <= tol * np.max(np.abs(G)) ** 2))


def check_landslide_metric(g: MetricField, domain: ChartDomain) -> None:
    if is_degenerate(g, domain):
        raise GeometryError("landslide metric is degenerate somewhere on the grid")
