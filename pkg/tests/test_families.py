import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holoforms import cmetric as cm
from holoforms import families as fa
from holoforms import immersion as im
from holoforms.errors import ArgumentError, GeometryError, NumericalError

HYP = cm.hyperbolic_plane()


@pytest.fixture(scope="module")
def pair():
    return fa.cylinder_pair(1.5, 64, 16)


def grid(n=21, r=0.5):
    t = np.linspace(-r, r, n)
    return t[:, None] + 1j * t[None, :], t[1] - t[0]


class TestRegular:
    def test_identity(self):
        d = cm.ChartDomain(-0.25, 0.25, 1, 1.5, 16, 16)
        assert fa.regular_check(fa.RegularPair(d, HYP, fa.regular_tensor())).ok

    def test_cylinder_profile(self, pair):
        rep = fa.regular_check(pair)
        assert rep.ok and rep.codazzi < 1e-10

    def test_constant_fails_codazzi(self):
        d = cm.ChartDomain(-0.25, 0.25, 1, 1.5, 16, 16)
        rep = fa.regular_check(fa.RegularPair(d, HYP, fa.regular_tensor("constant", M=np.diag([2, 0.5]))))
        assert rep.passed == {"self_adjoint": True, "codazzi": False, "det": True}

    def test_det_failure(self):
        d = cm.ChartDomain(-0.25, 0.25, 1, 1.5, 16, 16)
        rep = fa.regular_check(fa.RegularPair(d, HYP, fa.regular_tensor("constant", M=2 * np.eye(2))))
        assert not rep.passed["det"] and rep.det == pytest.approx(3)

    def test_unknown(self):
        with pytest.raises(ArgumentError):
            fa.regular_tensor("nope")


class TestLandslide:
    def test_zero_parameter(self, pair):
        X, Y = pair.domain.mesh()
        np.testing.assert_allclose(fa.landslide_metric(pair, z=0)(X, Y), pair.h(X, Y), atol=1e-15)

    def test_family_data_valid(self, pair):
        res = im.gc_residuals(fa.landslide_family(pair, 0.2 + 0.1j))
        assert res["gauss_max"] < 1e-5 and res["codazzi_max"] < 1e-8

    def test_real_parameter_is_real(self, pair):
        X, Y = pair.domain.mesh()
        assert np.abs(fa.landslide_metric(pair, z=0.4)(X, Y).imag).max() == 0

    def test_half_turn(self, pair):
        # at z = pi/2 the metric is h(Jb., Jb.) = h(b., b.) since J is an h-isometry
        X, Y = pair.domain.mesh()
        H, B = pair.h(X, Y), pair.b(X, Y)
        np.testing.assert_allclose(fa.landslide_metric(pair, z=np.pi / 2)(X, Y),
                                   np.swapaxes(B, -1, -2) @ H @ B, atol=1e-12)

    def test_metric_holomorphic_in_parameter(self, pair):
        res = []
        for n in (9, 17):
            lam, h = grid(n, 0.3)
            G = np.array([[fa.landslide_metric(pair, z=l)(0.3, 0.2) for l in row] for row in lam])
            res.append(max(fa.cr_residual(G[..., a, b], h) for a, b in [(0, 0), (0, 1), (1, 1)]))
        assert 3.8 < res[0] / res[1] < 4.2

    @pytest.mark.parametrize("z", [0.3, 0.3 + 0.2j])
    def test_two_presentations(self, pair, z):
        t1 = im.monodromy(fa.landslide_family(pair, z), row=8, gate=None).trace
        g = fa.landslide_metric(pair, z=1j * z)
        t2 = im.monodromy(im.ImmersionData(pair.domain, g, cm.zero_shape()), row=8, gate=None).trace
        assert abs(t1 - t2) < 1e-10

    def test_pole(self, pair):
        with pytest.raises(ArgumentError):
            fa.landslide_family(pair, 1j * np.pi / 2)

    def test_degenerate(self):
        d = cm.ChartDomain(0, 1, 1, 2, 8, 8)
        flat = cm.MetricField(lambda x, y: cm._sym(1 + 0 * x, 0 * x, 0 * x))
        assert fa.is_degenerate(flat, d)
        assert not fa.is_degenerate(HYP, d)
        with pytest.raises(GeometryError):
            fa.check_landslide_metric(flat, d)


class TestCR:
    def test_square_is_holomorphic(self):
        lam, h = grid()
        assert fa.cr_residual(lam ** 2, h) <= 1e-10

    def test_conjugate(self):
        lam, h = grid()
        assert fa.cr_residual(np.conj(lam), h) == pytest.approx(1, abs=1e-12)

    def test_exponential_second_order(self):
        res = []
        for n in (11, 21, 41):
            lam, h = grid(n)
            res.append(fa.cr_residual(np.exp(lam), h))
        assert 3.8 < res[0] / res[1] < 4.2 and 3.8 < res[1] / res[2] < 4.2

    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=3, max_size=3))
    def test_quadratics_exact(self, c):
        lam, h = grid(9)
        F = c[0] + c[1] * lam + c[2] * lam ** 2
        assert fa.cr_residual(F, h) <= 1e-11 * (1 + sum(map(abs, c)))

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_antiholomorphic_part(self, a, b):
        lam, h = grid(9)
        F = lam ** 2 + complex(a, b) * np.conj(lam)
        assert fa.cr_residual(F, h) == pytest.approx(abs(complex(a, b)), abs=1e-10)

    def test_small_grid(self):
        with pytest.raises(ArgumentError):
            fa.cr_residual(np.zeros((4, 4)), 0.1)

    def test_nonfinite(self):
        F = np.zeros((6, 6), dtype=complex)
        F[2, 2] = np.nan
        with pytest.raises(NumericalError):
            fa.cr_residual(F, 0.1)


@pytest.fixture(scope="module")
def sweep(pair):
    return fa.trace_refinement(fa.landslide_holofamily(pair, 0.0, 0.2, 5), 2, gate=None)


class TestSweep:
    def test_refinement_ratio(self, sweep):
        _, ratios = sweep
        assert 3.5 <= ratios[0] <= 4.5

    def test_real_axis(self, sweep):
        S = sweep[0][0]
        mid = S.lam.shape[1] // 2
        assert np.abs(S.lam[:, mid].imag).max() == 0
        assert np.abs(S.trace[:, mid].imag).max() < 1e-10

    def test_centre_trace(self, sweep):
        S = sweep[0][0]
        assert abs(S.trace[2, 2] - 2 * np.cosh(0.75)) < 1e-3
        assert not S.flagged.any()

    def test_shared_nodes(self, sweep):
        surfaces, _ = sweep
        np.testing.assert_allclose(surfaces[1].trace[::2, ::2], surfaces[0].trace, atol=1e-12)

    def test_perturbation_not_refined_away(self, pair):
        fam = fa.landslide_holofamily(pair, 0.0, 0.2, 5, perturbation=0.01)
        S, ratios = fa.trace_refinement(fam, 2, gate=None)
        assert fa.shared_cr_residual(S[1], 1) > 1e-3
        assert ratios[0] < 1.5

    def test_csv(self, sweep, tmp_path):
        S = sweep[0][0]
        fa.trace_surface_csv(S, tmp_path / "t.csv")
        rows = list(csv.reader(open(tmp_path / "t.csv")))
        assert rows[0] == ["re_lambda", "im_lambda", "re_trace", "im_trace"]
        assert len(rows) == 26
        back = np.array([[complex(float(r[2]), float(r[3]))] for r in rows[1:]]).reshape(5, 5)
        np.testing.assert_array_equal(back, S.trace)


def test_sign_continuation():
    T = np.full((5, 5), 2.0 + 0j)
    T[0, 0] = T[4, 3] = -2.0
    fixed, flagged = fa._continue_signs(T)
    np.testing.assert_array_equal(fixed, 2.0)
    assert not flagged.any()
