import numpy as np
import pytest
from numpy.testing import assert_allclose

from chaplygin.brackets import (
    BracketTable,
    ScalarFieldWithGradient,
    VARIANTS,
    affine_coeffs,
    bracket_eval,
    bracket_table,
    energy_field,
    gamma_square_field,
    ham_vector_field,
    jacobiator,
    jacobiator_max,
    jacobiator_tensor,
    momentum_square_field,
    scaled_coeffs,
    standard_coeffs,
    vertical_momentum_field,
)
from chaplygin.dynamics import reduced_rhs
from chaplygin.model import ReducedState, SphereParams, mu, omega_body
from chaplygin.so3 import hat
from conftest import random_state


def fd_coeffs_derivs(table, s, h=1e-6):
    """Oracle: coefficient partials by central differences."""
    deriv = np.empty((6, 6, 6))
    z = s.z
    for l in range(6):
        zp, zm = z.copy(), z.copy()
        zp[l] += h
        zm[l] -= h
        deriv[:, :, l] = (table.coeffs(ReducedState.from_z(zp))
                          - table.coeffs(ReducedState.from_z(zm))) / (2 * h)
    return deriv


def fd_jacobiator_max(table, s, h=1e-5):
    """Oracle: Jacobiator from finite-difference partials."""
    lam = table.coeffs(s)
    deriv = fd_coeffs_derivs(table, s, h)
    t = np.einsum("il,jkl->ijk", lam, deriv)
    t = t + np.transpose(t, (1, 2, 0)) + np.transpose(t, (2, 0, 1))
    return np.abs(t).max()


def coordinate_field(i):
    grad = np.zeros(6)
    grad[i] = 1.0
    return ScalarFieldWithGradient(
        f"z{i}", lambda s: s.z[i], lambda s, g=grad: g.copy())


CANONICAL_STATE = ReducedState([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])


class TestTableStructure:
    def test_gamma_gamma_block_zero(self, params):
        rng = np.random.default_rng(40)
        for _ in range(20):
            s = random_state(rng)
            for variant in VARIANTS:
                lam = bracket_table(params, variant).coeffs(s)
                assert np.array_equal(lam[3:, 3:], np.zeros((3, 3)))

    def test_k_gamma_block(self, params):
        rng = np.random.default_rng(41)
        for _ in range(20):
            s = random_state(rng)
            lam = standard_coeffs(params, s)
            # {K1, g2} = -c_{12l} g_l = -g3
            assert lam[0, 4] == -s.gamma[2]
            assert_allclose(lam[:3, 3:], hat(s.gamma), atol=0.0)
            assert_allclose(affine_coeffs(params, s)[:3, 3:], hat(s.gamma), atol=0.0)

    def test_exact_antisymmetry(self, params):
        rng = np.random.default_rng(42)
        for _ in range(20):
            s = random_state(rng)
            for variant in VARIANTS:
                lam = bracket_table(params, variant).coeffs(s)
                assert np.array_equal(lam, -lam.T)

    def test_canonical_kk_entries(self, params):
        # At K=(1,0,0), gamma=(0,0,1): w = (1/2,0,0), w3 = 0, so the
        # standard {K2,K3} entry is -(K1 + m r^2 w1) = -3/2 and the affine
        # entry is -K1 = -1; {K1,K2} vanishes for both.
        lam_std = standard_coeffs(params, CANONICAL_STATE)
        lam_aff = affine_coeffs(params, CANONICAL_STATE)
        assert_allclose(lam_std[1, 2], -1.5, atol=0.0)
        assert_allclose(lam_std[0, 1], 0.0, atol=0.0)
        assert_allclose(lam_aff[1, 2], -1.0, atol=0.0)
        assert_allclose(lam_aff[0, 1], 0.0, atol=0.0)

    def test_standard_minus_affine_is_omega_term(self, params):
        rng = np.random.default_rng(43)
        for _ in range(20):
            s = random_state(rng)
            diff = standard_coeffs(params, s) - affine_coeffs(params, s)
            expected = hat(params.mr2 * omega_body(params, s))
            assert_allclose(diff[:3, :3], expected, atol=1e-14)
            assert_allclose(diff[:3, 3:], np.zeros((3, 3)), atol=0.0)

    def test_scaled_is_mu_times_affine(self, params):
        rng = np.random.default_rng(44)
        for _ in range(20):
            s = random_state(rng)
            factor = mu(params, s.gamma)
            assert_allclose(scaled_coeffs(params, s),
                            factor * affine_coeffs(params, s), rtol=1e-15, atol=0.0)

    def test_massless_limit_collapses_variants(self, free_params):
        rng = np.random.default_rng(45)
        s = random_state(rng)
        lam = standard_coeffs(free_params, s)
        assert_allclose(lam, affine_coeffs(free_params, s), atol=0.0)
        assert_allclose(lam, scaled_coeffs(free_params, s), atol=0.0)
        assert_allclose(lam[:3, :3], hat(s.K), atol=0.0)

    def test_unknown_variant(self, params):
        with pytest.raises(ValueError):
            bracket_table(params, "dirac")


class TestCoefficientDerivatives:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_matches_finite_differences(self, params, variant):
        rng = np.random.default_rng(46)
        table = bracket_table(params, variant)
        for _ in range(100):
            s = random_state(rng)
            analytic = table.coeff_derivs(s)
            numeric = fd_coeffs_derivs(table, s)
            scale = max(1.0, np.abs(analytic).max())
            assert np.abs(analytic - numeric).max() <= 1e-7 * scale

    def test_deriv_antisymmetry(self, params):
        rng = np.random.default_rng(47)
        s = random_state(rng)
        for variant in VARIANTS:
            deriv = bracket_table(params, variant).coeff_derivs(s)
            assert np.array_equal(deriv, -np.transpose(deriv, (1, 0, 2)))


class TestBracketEval:
    def test_antisymmetry_and_diagonal(self, params):
        rng = np.random.default_rng(48)
        s = random_state(rng)
        f_h = energy_field(params)
        f_j = momentum_square_field()
        for variant in VARIANTS:
            table = bracket_table(params, variant)
            assert abs(bracket_eval(table, f_h, f_h, s)) < 1e-15
            assert_allclose(bracket_eval(table, f_h, f_j, s),
                            -bracket_eval(table, f_j, f_h, s), atol=1e-15)

    def test_energy_momentum_involution(self, params):
        rng = np.random.default_rng(49)
        f_h = energy_field(params)
        f_j = momentum_square_field()
        for _ in range(50):
            s = random_state(rng)
            for variant in VARIANTS:
                assert abs(bracket_eval(bracket_table(params, variant), f_h, f_j, s)) < 1e-13

    def test_gamma_norm_is_casimir_everywhere(self, params):
        rng = np.random.default_rng(50)
        f_g = gamma_square_field()
        fields = [energy_field(params), momentum_square_field(), vertical_momentum_field()]
        for _ in range(20):
            s = random_state(rng)
            for variant in VARIANTS:
                table = bracket_table(params, variant)
                for f in fields:
                    assert abs(bracket_eval(table, f, f_g, s)) < 1e-12

    def test_vertical_momentum_casimir_affine_only(self, params):
        rng = np.random.default_rng(51)
        f_kg = vertical_momentum_field()
        worst_standard = 0.0
        for _ in range(20):
            s = random_state(rng)
            for variant in ("affine", "scaled"):
                defect = np.abs(
                    bracket_table(params, variant).coeffs(s) @ f_kg.gradient(s)).max()
                assert defect < 1e-12
            worst_standard = max(worst_standard, np.abs(
                bracket_table(params, "standard").coeffs(s) @ f_kg.gradient(s)).max())
        assert worst_standard > 1e-3

    def test_built_in_gradients_match_fd(self, params):
        # K components by straight central differences, gamma components
        # along tangent directions of the sphere.
        rng = np.random.default_rng(52)
        h = 1e-6
        fields = [energy_field(params), momentum_square_field(),
                  vertical_momentum_field(), gamma_square_field()]
        for _ in range(10):
            s = random_state(rng)
            basis = np.linalg.svd(np.outer(s.gamma, s.gamma))[0][:, 1:]
            for f in fields:
                grad = f.gradient(s)
                for i in range(3):
                    kp, km = s.K.copy(), s.K.copy()
                    kp[i] += h
                    km[i] -= h
                    fd = (f.value(ReducedState(kp, s.gamma))
                          - f.value(ReducedState(km, s.gamma))) / (2 * h)
                    assert abs(fd - grad[i]) <= 1e-6 * max(1.0, abs(grad[i]))
                for u in basis.T:
                    fd = (f.value(ReducedState(s.K, s.gamma + h * u))
                          - f.value(ReducedState(s.K, s.gamma - h * u))) / (2 * h)
                    proj = float(grad[3:] @ u)
                    assert abs(fd - proj) <= 1e-6 * max(1.0, abs(proj))


class TestHamVectorField:
    def test_energy_field_gives_equations_of_motion(self, params):
        rng = np.random.default_rng(53)
        f_h = energy_field(params)
        for _ in range(50):
            s = random_state(rng)
            rhs = reduced_rhs(params, s)
            for variant in ("standard", "affine"):
                x = ham_vector_field(bracket_table(params, variant), f_h, s)
                assert_allclose(x, rhs, atol=1e-12)

    def test_gamma_components_tangent(self, params):
        rng = np.random.default_rng(54)
        f_h = energy_field(params)
        for _ in range(20):
            s = random_state(rng)
            for variant in VARIANTS:
                x = ham_vector_field(bracket_table(params, variant), f_h, s)
                assert abs(float(x[3:] @ s.gamma)) < 1e-12

    def test_coordinate_fields(self, params):
        # X_{gamma_i} has K components hat(gamma)[:, i] (the column of the
        # table) and identically zero gamma components; X_{K_i} carries the
        # gamma column hat(gamma)[:, i] in its gamma slot.
        rng = np.random.default_rng(55)
        s = random_state(rng)
        for variant in ("standard", "affine"):
            table = bracket_table(params, variant)
            lam = table.coeffs(s)
            for i in range(3):
                x_g = ham_vector_field(table, coordinate_field(3 + i), s)
                assert np.array_equal(x_g, lam[:, 3 + i])
                assert np.array_equal(x_g[:3], hat(s.gamma)[:, i])
                assert np.array_equal(x_g[3:], np.zeros(3))
                x_k = ham_vector_field(table, coordinate_field(i), s)
                assert np.array_equal(x_k[3:], hat(s.gamma)[:, i])


class TestJacobiator:
    def test_repeated_index_vanishes(self, params):
        rng = np.random.default_rng(56)
        s = random_state(rng)
        table = bracket_table(params, "standard")
        assert jacobiator(table, 0, 0, 3, s) == 0.0
        assert abs(jacobiator(table, 2, 4, 2, s)) < 1e-15

    def test_total_antisymmetry(self, params):
        rng = np.random.default_rng(57)
        s = random_state(rng)
        t = jacobiator_tensor(bracket_table(params, "standard"), s)
        assert_allclose(t, -np.transpose(t, (1, 0, 2)), atol=1e-13)
        assert_allclose(t, -np.transpose(t, (0, 2, 1)), atol=1e-13)

    def test_index_range(self, params):
        with pytest.raises(ValueError):
            jacobiator(bracket_table(params, "standard"), 0, 1, 6, CANONICAL_STATE)

    def test_matches_fd_oracle(self, params):
        rng = np.random.default_rng(58)
        for variant in VARIANTS:
            table = bracket_table(params, variant)
            for _ in range(10):
                s = random_state(rng)
                assert abs(jacobiator_max(table, s) - fd_jacobiator_max(table, s)) < 1e-6

    def test_scaled_satisfies_jacobi(self, params):
        rng = np.random.default_rng(59)
        table = bracket_table(params, "scaled")
        worst = max(jacobiator_max(table, random_state(rng)) for _ in range(200))
        assert worst < 1e-9

    def test_standard_and_affine_fail_jacobi(self, params):
        rng = np.random.default_rng(60)
        std = bracket_table(params, "standard")
        aff = bracket_table(params, "affine")
        vals_std = [jacobiator_max(std, random_state(rng)) for _ in range(100)]
        vals_aff = [jacobiator_max(aff, random_state(rng)) for _ in range(100)]
        assert min(vals_std) > 1e-2
        assert min(vals_aff) > 1e-4

    def test_massless_limit_all_jacobi(self, free_params):
        rng = np.random.default_rng(61)
        for variant in VARIANTS:
            table = bracket_table(free_params, variant)
            worst = max(jacobiator_max(table, random_state(rng)) for _ in range(50))
            assert worst < 1e-9


class TestCustomTable:
    def test_user_supplied_evaluators(self, params):
        # A hand-built table (the massless-limit bracket) run through the
        # same machinery: hat(K) in the KK block satisfies Jacobi.
        def coeffs(s):
            lam = np.zeros((6, 6))
            lam[:3, :3] = hat(s.K)
            lam[:3, 3:] = hat(s.gamma)
            lam[3:, :3] = hat(s.gamma)
            return lam

        def coeff_derivs(s):
            deriv = np.zeros((6, 6, 6))
            eye = np.eye(3)
            for n in range(3):
                deriv[:3, :3, n] = hat(eye[n])
                deriv[:3, 3:, 3 + n] = hat(eye[n])
                deriv[3:, :3, 3 + n] = hat(eye[n])
            return deriv

        table = BracketTable("free-body", coeffs, coeff_derivs)
        rng = np.random.default_rng(62)
        for _ in range(20):
            assert jacobiator_max(table, random_state(rng)) < 1e-13
