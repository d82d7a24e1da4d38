"""Complex-bilinear linear algebra.

Everything here uses the transpose pairing ``u^T M v`` rather than a
Hermitian product, so isotropic nonzero vectors exist and square roots
of norms need a branch choice.  Array functions broadcast over leading
axes so whole grids of frames can be built at once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegenerateFrameError

NONDEGENERACY_TOL = 1e-9
SKEW_TOL = 1e-12
ISOTROPY_TOL = 1e-12


@dataclass(frozen=True)
class CBilinearForm:
    """Symmetric complex bilinear form given by its Gram matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"form matrix must be square, got shape {m.shape}")
        # symmetrize so that the invariant holds exactly
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def standard(cls, n: int) -> "CBilinearForm":
        return cls(np.eye(n, dtype=complex))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_nondegenerate(self, tol: float = NONDEGENERACY_TOL) -> bool:
        scale = max(np.linalg.norm(self.matrix), 1e-300) ** self.dim
        return abs(np.linalg.det(self.matrix)) > tol * scale


@dataclass(frozen=True)
class SkewComplexMatrix:
    """Element of so(m, C).  Input is antisymmetrized on construction."""

    matrix: np.ndarray
    correction: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"skew matrix must be square, got shape {m.shape}")
        corr = float(np.max(np.abs(m + m.T), initial=0.0)) / 2
        if corr > SKEW_TOL:
            warnings.warn(f"antisymmetrized input, correction {corr:.3e}", RuntimeWarning, stacklevel=3)
        m = 0.5 * (m - m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "correction", corr)


@dataclass(frozen=True)
class SqrtBranch:
    """Branch selector for complex square roots.

    ``reference=None`` means the principal branch; otherwise the root
    closest in direction to ``reference`` is returned.
    """

    reference: complex | np.ndarray | None = None


def csqrt(w, branch: SqrtBranch | None = None):
    """Square root of ``w`` on the branch selected by ``branch``.

    With a reference value the returned root ``r`` satisfies
    ``Re(r * conj(reference)) >= 0``; works elementwise on arrays.
    """
    r = np.sqrt(np.asarray(w, dtype=complex))
    if branch is None or branch.reference is None:
        return r
    ref = np.asarray(branch.reference, dtype=complex)
    return np.where(np.real(r * np.conj(ref)) < 0, -r, r)


def sqrt_along_path(values, start: complex | None = None) -> np.ndarray:
    """Continuous square root along a sampled path of nonzero values.

    The first root is principal unless ``start`` gives a reference.
    """
    vals = np.asarray(values, dtype=complex).ravel()
    out = np.empty_like(vals)
    ref = start
    for k, w in enumerate(vals):
        r = csqrt(w, SqrtBranch(ref))
        out[k] = r
        ref = r
    return out


def _as_vec(u) -> np.ndarray:
    v = np.asarray(u, dtype=complex)
    if not np.all(np.isfinite(v)):
        raise ArgumentError("vector has non-finite entries")
    return v


def inner(form: CBilinearForm | np.ndarray | None, u, v) -> complex:
    """``u^T M v``; ``form=None`` uses the standard form."""
    u = _as_vec(u)
    v = _as_vec(v)
    if u.shape != v.shape:
        raise ArgumentError(f"dimension mismatch {u.shape} vs {v.shape}")
    if form is None:
        return complex(u @ v)
    m = form.matrix if isinstance(form, CBilinearForm) else np.asarray(form, dtype=complex)
    if m.shape != (u.shape[-1], u.shape[-1]):
        raise ArgumentError(f"form of shape {m.shape} does not act on vectors of length {u.shape[-1]}")
    return complex(u @ m @ v)


def bilinear(G: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Batched ``u^T G v`` over leading axes."""
    return np.einsum("...i,...ij,...j->...", u, G, v)


def gram_schmidt_batch(G: np.ndarray, seeds: np.ndarray, ref_roots: np.ndarray | None = None,
                       tol: float = ISOTROPY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Gram-Schmidt for a field of forms.

    ``G`` has shape (..., n, n) and ``seeds`` (..., n, k) holds seed
    vectors as columns.  Returns the frame (..., n, k) and the chosen
    square roots (..., k) of the intermediate norms.  ``ref_roots``
    selects the branch of each root by nearest-direction continuation.
    """
    G = np.asarray(G, dtype=complex)
    W = np.broadcast_to(np.asarray(seeds, dtype=complex), G.shape[:-2] + np.shape(seeds)[-2:])
    k = W.shape[-1]
    X = np.empty(W.shape, dtype=complex)
    roots = np.empty(W.shape[:-2] + (k,), dtype=complex)
    for j in range(k):
        Y = W[..., :, j].copy()
        for i in range(j):
            Y = Y - bilinear(G, W[..., :, j], X[..., :, i])[..., None] * X[..., :, i]
        nrm = bilinear(G, Y, Y)
        scale = np.einsum("...i,...i->...", np.abs(Y), np.abs(Y)) * np.max(np.abs(G), axis=(-2, -1))
        if np.any(np.abs(nrm) <= tol * np.maximum(scale, 1e-300)):
            raise DegenerateFrameError(j)
        ref = None if ref_roots is None else ref_roots[..., j]
        r = csqrt(nrm, SqrtBranch(ref))
        roots[..., j] = r
        X[..., :, j] = Y / r[..., None]
    return X, roots


def gram_schmidt(form: CBilinearForm, seeds, branch: SqrtBranch | None = None,
                 tol: float = ISOTROPY_TOL) -> list[np.ndarray]:
    """Orthonormalize ``seeds`` with respect to ``form``.

    Raises :class:`DegenerateFrameError` naming the first seed whose
    projected remainder is isotropic.
    """
    W = np.column_stack([_as_vec(s) for s in seeds])
    if W.shape[0] != form.dim:
        raise ArgumentError("seed length does not match the form")
    if np.linalg.matrix_rank(W) < W.shape[1]:
        raise ArgumentError("seeds are linearly dependent")
    ref = None
    if branch is not None and branch.reference is not None:
        ref = np.broadcast_to(np.asarray(branch.reference, dtype=complex), (W.shape[1],))
    X, _ = gram_schmidt_batch(form.matrix, W, ref, tol)
    return [X[:, j] for j in range(X.shape[1])]


def mat2_inner(M, N):
    """Polarized form ``(tr(MN) - tr M tr N) / 2`` on 2x2 matrices (batched)."""
    M = np.asarray(M, dtype=complex)
    N = np.asarray(N, dtype=complex)
    tr_mn = np.einsum("...ij,...ji->...", M, N)
    return 0.5 * (tr_mn - np.trace(M, axis1=-2, axis2=-1) * np.trace(N, axis1=-2, axis2=-1))


def sl2_cross(V, W, tol: float = 1e-12) -> np.ndarray:
    """Cross product ``[V, W] / 2i`` on traceless 2x2 matrices."""
    V = np.asarray(V, dtype=complex)
    W = np.asarray(W, dtype=complex)
    if np.any(np.abs(np.trace(V, axis1=-2, axis2=-1)) > tol) or np.any(
            np.abs(np.trace(W, axis1=-2, axis2=-1)) > tol):
        raise ArgumentError("sl2_cross needs traceless inputs")
    return (V @ W - W @ V) / 2j


def is_skew(M, tol: float = SKEW_TOL) -> bool:
    M = np.asarray(M)
    return bool(np.max(np.abs(M + np.swapaxes(M, -1, -2)), initial=0.0) <= tol)
