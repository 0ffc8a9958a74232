import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from fbmburgers.spectral import (
    CollocationField,
    SpectralField,
    burgers_nonlinearity,
    eigenvalues,
    evaluate,
    evaluate_at,
    interior_grid,
    lp_norm,
    project,
    read_field_csv,
    semigroup_apply,
    sobolev_norm,
    write_field_csv,
)

SQ2 = np.sqrt(2.0)
coeff_arrays = arrays(np.float64, st.integers(1, 24), elements=st.floats(-2, 2))


def phi(k, x):
    return SQ2 * np.sin(k * np.pi * x)


def quad_coefficients(fn, N):
    return np.array([integrate.quad(lambda x: fn(x) * phi(k, x), 0, 1, limit=200, epsabs=1e-14)[0] for k in range(1, N + 1)])


class TestProjection:
    def test_basis_function(self):
        x = interior_grid(64)
        a = project(phi(1, x), 8)
        np.testing.assert_allclose(a, np.eye(8)[0], atol=1e-12)

    def test_orthogonal_mode_not_aliased(self):
        x = interior_grid(64)
        np.testing.assert_allclose(project(phi(9, x), 8), 0.0, atol=1e-12)

    def test_quadratic_against_quadrature(self):
        x = interior_grid(4095)
        a = project(x * (1 - x), 16)
        ref = quad_coefficients(lambda s: s * (1 - s), 16)
        np.testing.assert_allclose(a, ref, atol=1e-10)

    def test_closed_form_coefficients(self):
        # <x(1-x), phi_k> = 4 sqrt2 / (k pi)^3 for odd k
        k = np.arange(1, 17)
        exact = np.where(k % 2 == 1, 4 * SQ2 / (k * np.pi) ** 3, 0.0)
        np.testing.assert_allclose(quad_coefficients(lambda s: s * (1 - s), 16), exact, atol=1e-13)

    def test_too_many_modes(self):
        with pytest.raises(ValueError):
            project(np.zeros(4), 5)

    def test_collocation_wrapper(self):
        c = SpectralField(np.array([0.3, -1.0, 0.5])).to_grid(16)
        np.testing.assert_allclose(c.project(3).coefficients, [0.3, -1.0, 0.5], atol=1e-14)
        assert c.points == 16 and c.x.shape == (16,)

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays)
    def test_roundtrip(self, a):
        P = a.size + 3
        back = project(evaluate(a, P), a.size)
        np.testing.assert_allclose(back, a, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(a).max()))

    @settings(max_examples=25, deadline=None)
    @given(coeff_arrays)
    def test_fft_matches_matrix(self, a):
        P = 2 * a.size + 1
        np.testing.assert_allclose(evaluate(a, P), evaluate(a, P, method="matrix"), atol=1e-12)
        g = evaluate(a, P)
        np.testing.assert_allclose(project(g, a.size), project(g, a.size, method="matrix"), atol=1e-12)
        np.testing.assert_allclose(evaluate(a, P), evaluate_at(a, interior_grid(P)), atol=1e-12)


class TestNorms:
    def test_sobolev_phi1(self):
        u = SpectralField.basis(1, 4)
        assert sobolev_norm(u, 0) == pytest.approx(1.0)
        assert sobolev_norm(u, 1) == pytest.approx(np.pi)

    def test_sobolev_phi2(self):
        assert sobolev_norm(SpectralField.basis(2, 4), 3 / 8) == pytest.approx((4 * np.pi**2) ** (3 / 16), rel=1e-14)

    def test_lp_phi1(self):
        u = SpectralField.basis(1, 1)
        assert lp_norm(u, 2) == pytest.approx(1.0)
        assert lp_norm(u, np.inf) == pytest.approx(SQ2, rel=1e-14)
        assert lp_norm(u, 4) == pytest.approx(1.5**0.25, rel=1e-14)

    def test_quad_points_floor(self):
        with pytest.raises(ValueError):
            lp_norm(np.ones(4), 4, quad_points=8)

    def test_bad_p(self):
        with pytest.raises(ValueError):
            lp_norm(np.ones(2), 3)

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays)
    def test_h0_equals_l2(self, a):
        assert sobolev_norm(a, 0) == pytest.approx(lp_norm(a, 2), rel=1e-12, abs=1e-300)

    def test_batch(self):
        a = np.random.default_rng(0).normal(size=(5, 7))
        np.testing.assert_allclose(sobolev_norm(a, 0.5), [sobolev_norm(r, 0.5) for r in a])
        np.testing.assert_allclose(lp_norm(a, 4), [lp_norm(r, 4) for r in a])


def burgers_oracle(a, n=4096):
    # Trapezoid projection of u u' on n intervals: exact for this trig polynomial.
    x = np.arange(n + 1) / n
    k = np.arange(1, a.size + 1)
    u = (SQ2 * np.sin(np.pi * np.outer(x, k))) @ a
    du = (SQ2 * np.pi * k * np.cos(np.pi * np.outer(x, k))) @ a
    w = np.full(n + 1, 1.0 / n)
    w[[0, -1]] *= 0.5
    return (w * u * du) @ (SQ2 * np.sin(np.pi * np.outer(x, k)))


class TestBurgers:
    def test_sin_pi_x(self):
        u = np.zeros(8)
        u[0] = 1 / SQ2
        expected = np.zeros(8)
        expected[1] = np.pi / (2 * SQ2)
        np.testing.assert_allclose(burgers_nonlinearity(u), expected, atol=1e-13)

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_sin_pi_x_scipy_quad(self):
        u = np.zeros(4)
        u[0] = 1 / SQ2
        ref = quad_coefficients(lambda x: np.sin(np.pi * x) * np.pi * np.cos(np.pi * x), 4)
        np.testing.assert_allclose(burgers_nonlinearity(u), ref, atol=1e-12)

    def test_zero(self):
        np.testing.assert_array_equal(burgers_nonlinearity(np.zeros(6)), 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_against_quadrature(self, seed):
        a = np.random.default_rng(seed).normal(size=8)
        np.testing.assert_allclose(burgers_nonlinearity(a), burgers_oracle(a), atol=1e-10)

    def test_matrix_path(self):
        a = np.random.default_rng(9).normal(size=(3, 11))
        np.testing.assert_allclose(burgers_nonlinearity(a), burgers_nonlinearity(a, method="matrix"), atol=1e-11)

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays)
    def test_antisymmetry(self, a):
        f = burgers_nonlinearity(a)
        assert abs(np.dot(a, f)) < 1e-8


class TestSemigroup:
    def test_identity(self):
        a = np.array([1.0, -2.0, 3.0])
        np.testing.assert_array_equal(semigroup_apply(a, 0.0), a)

    def test_eigen_decay(self):
        a = SpectralField.basis(1, 3)
        np.testing.assert_allclose(semigroup_apply(a, 1.0), [np.exp(-np.pi**2), 0, 0], rtol=1e-15)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            semigroup_apply(np.ones(2), -0.1)

    @given(coeff_arrays, st.floats(0, 1), st.floats(0, 1))
    def test_semigroup_law_and_contraction(self, a, s, t):
        lhs = semigroup_apply(semigroup_apply(a, s), t)
        np.testing.assert_allclose(lhs, semigroup_apply(a, s + t), rtol=1e-12, atol=1e-300)
        assert sobolev_norm(semigroup_apply(a, t), 0) <= sobolev_norm(a, 0) * (1 + 1e-15)

    def test_eigenvalues(self):
        np.testing.assert_allclose(eigenvalues(3), [np.pi**2, 4 * np.pi**2, 9 * np.pi**2])


def test_field_csv_roundtrip(tmp_path):
    x = interior_grid(9)
    u = np.random.default_rng(0).normal(size=9)
    write_field_csv(tmp_path / "f.csv", x, u)
    x2, u2 = read_field_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(x2, x)
    np.testing.assert_array_equal(u2, u)
