import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holoforms import calg
from holoforms.errors import ArgumentError, DegenerateFrameError

from conftest import random_complex

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
cnum = st.builds(complex, finite, finite)


def traceless(a, b, c):
    return np.array([[a, b], [c, -a]], dtype=complex)


class TestInner:
    def test_quadric_base_point(self):
        assert calg.inner(calg.CBilinearForm.standard(3), [0, 0, 1j], [0, 0, 1j]) == -1

    def test_isotropic_vector(self):
        assert calg.inner(None, [1, 1j, 0], [1, 1j, 0]) == 0

    def test_orthogonal_axes(self):
        assert calg.inner(np.eye(3), [1, 0, 0], [0, 1, 0]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ArgumentError):
            calg.inner(None, [1, 2], [1, 2, 3])

    def test_form_shape_mismatch(self):
        with pytest.raises(ArgumentError):
            calg.inner(np.eye(2), [1, 2, 3], [1, 2, 3])

    @given(st.lists(cnum, min_size=3, max_size=3), st.lists(cnum, min_size=3, max_size=3))
    def test_symmetric(self, u, v):
        G = calg.CBilinearForm(np.array([[1, 2j, 0], [0, 3, 1], [1, 0, -1]]))
        assert calg.inner(G, u, v) == pytest.approx(calg.inner(G, v, u), rel=1e-12, abs=1e-9)


def test_form_is_symmetrized():
    G = calg.CBilinearForm([[1, 2], [0, 1]])
    assert np.array_equal(G.matrix, G.matrix.T)
    assert G.matrix[0, 1] == 1


def test_nondegeneracy():
    assert calg.CBilinearForm.standard(3).is_nondegenerate()
    assert not calg.CBilinearForm([[1, 1j], [1j, -1]]).is_nondegenerate()


class TestGramSchmidt:
    def test_standard_basis_fixed(self):
        out = calg.gram_schmidt(calg.CBilinearForm.standard(3), list(np.eye(3)))
        np.testing.assert_allclose(np.column_stack(out), np.eye(3), atol=1e-15)

    def test_scale_and_project(self):
        out = calg.gram_schmidt(calg.CBilinearForm.standard(2), [(2, 0), (1, 1)])
        np.testing.assert_allclose(out[0], [1, 0], atol=1e-15)
        np.testing.assert_allclose(out[1], [0, 1], atol=1e-15)

    def test_isotropic_seed_names_index(self):
        with pytest.raises(DegenerateFrameError) as exc:
            calg.gram_schmidt(calg.CBilinearForm(np.diag([1.0, -1.0])), [(1, 1), (1, 0)])
        assert exc.value.index == 0

    def test_dependent_seeds(self):
        with pytest.raises(ArgumentError):
            calg.gram_schmidt(calg.CBilinearForm.standard(2), [(1, 0), (2, 0)])

    def test_random_forms_orthonormal(self, rng):
        for _ in range(50):
            A = random_complex(rng, (4, 4))
            G = calg.CBilinearForm(A + A.T)
            X = np.column_stack(calg.gram_schmidt(G, list(random_complex(rng, (4, 4)).T)))
            np.testing.assert_allclose(X.T @ G.matrix @ X, np.eye(4), atol=1e-10)

    def test_branch_reference_flips_root(self):
        G = calg.CBilinearForm(np.diag([-1.0, 1.0]))
        (x0, _) = calg.gram_schmidt(G, [(1, 0), (0, 1)])
        (y0, _) = calg.gram_schmidt(G, [(1, 0), (0, 1)], calg.SqrtBranch(-1j))
        np.testing.assert_allclose(x0, -y0)


class TestSqrt:
    @given(cnum.filter(lambda z: abs(z) > 1e-3))
    def test_root_squares_back(self, w):
        assert calg.csqrt(w) ** 2 == pytest.approx(w, rel=1e-12)

    def test_reference_direction(self):
        r = calg.csqrt(-1 + 1e-9j, calg.SqrtBranch(-1j))
        assert np.real(r * np.conj(-1j)) >= 0

    def test_continuation_around_origin(self):
        # once around the unit circle the continued root changes sign
        t = np.linspace(0, 2 * np.pi, 400)
        roots = calg.sqrt_along_path(np.exp(1j * t))
        assert np.max(np.abs(np.diff(roots))) < 0.05
        assert roots[-1] == pytest.approx(-1, abs=1e-12)


class TestMat2:
    def test_identity(self):
        assert calg.mat2_inner(np.eye(2), np.eye(2)) == -1

    def test_diag(self):
        D = np.diag([1, -1])
        assert calg.mat2_inner(D, D) == 1

    def test_minus_det(self, rng):
        M = random_complex(rng, (200, 2, 2))
        np.testing.assert_allclose(calg.mat2_inner(M, M) + np.linalg.det(M), 0, atol=1e-13)


class TestCross:
    V = np.diag([1, -1]).astype(complex)
    W = np.array([[0, 1], [1, 0]], dtype=complex)

    def test_example(self):
        np.testing.assert_allclose(calg.sl2_cross(self.V, self.W), [[0, -1j], [1j, 0]])

    def test_self_cross(self):
        np.testing.assert_array_equal(calg.sl2_cross(self.V, self.V), 0)

    def test_unit_norm(self):
        C = calg.sl2_cross(self.V, self.W)
        assert calg.mat2_inner(C, C) == pytest.approx(1)
        assert calg.mat2_inner(C, self.V) == 0 and calg.mat2_inner(C, self.W) == 0

    def test_rejects_trace(self):
        with pytest.raises(ArgumentError):
            calg.sl2_cross(np.eye(2), self.W)

    @given(cnum, cnum, cnum, cnum, cnum, cnum)
    def test_bracket_norm_identity(self, a, b, c, d, e, f):
        V, W = traceless(a, b, c), traceless(d, e, f)
        br = V @ W - W @ V
        lhs = calg.mat2_inner(br, br)
        rhs = -4 * calg.mat2_inner(V, V) * calg.mat2_inner(W, W) + 4 * calg.mat2_inner(V, W) ** 2
        scale = 1 + (np.abs(V).max() * np.abs(W).max()) ** 2
        assert abs(lhs - rhs) <= 1e-12 * scale


class TestSkew:
    def test_antisymmetrizes_with_warning(self):
        with pytest.warns(RuntimeWarning):
            S = calg.SkewComplexMatrix([[0, 1], [0, 0]])
        assert calg.is_skew(S.matrix)
        assert S.correction == 0.5

    def test_exact_input_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            S = calg.SkewComplexMatrix([[0, 2j], [-2j, 0]])
        assert S.correction == 0
