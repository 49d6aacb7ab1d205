"""Constitutive law tests.

Expected values are frozen from independent oracles: direct scalar
evaluation of the energy formula, central finite differences of the
energy for stresses, and numerical derivatives for the uniaxial law.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tissuefit import (
    OgdenParams,
    cauchy_stress,
    derive_volumetric_constants,
    strain_energy,
    uniaxial_nominal_stress,
)
from tissuefit.errors import InvalidArgumentError, InvalidStateError

from conftest import MU, ALPHA, random_deformation_gradient, random_rotation


def poisson_from_moduli(K, mu):
    """Poisson's ratio from (K, mu); the relation the constants must invert."""
    r = K / mu
    return (3.0 * r - 2.0) / (6.0 * r + 2.0)


def energy_oracle(lams, J, mu, alpha, K):
    """Direct scalar evaluation of the energy density formula."""
    lb = np.asarray(lams) * J ** (-1.0 / 3.0)
    return (2.0 * mu / alpha**2) * (np.sum(lb**alpha) - 3.0) + 0.5 * K * (J - 1.0) ** 2


class TestVolumetricConstants:
    def test_reference_values(self):
        K, D = derive_volumetric_constants(1200.0, 0.49)
        assert K == pytest.approx(59600.0, rel=1e-12)
        assert D == pytest.approx(3.3557046979865774e-05, rel=1e-12)

    def test_quarter_poisson(self):
        K, _ = derive_volumetric_constants(1000.0, 0.25)
        assert K == pytest.approx(5000.0 / 3.0, rel=1e-12)

    def test_inversion_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            mu = rng.uniform(10.0, 1e5)
            nu = rng.uniform(0.0, 0.4999)
            K, D = derive_volumetric_constants(mu, nu)
            assert poisson_from_moduli(K, mu) == pytest.approx(nu, abs=1e-12)
            assert D * K == pytest.approx(2.0, rel=1e-14)

    def test_incompressible_limit_rejected(self):
        with pytest.raises(InvalidArgumentError):
            derive_volumetric_constants(1200.0, 0.5)
        with pytest.raises(InvalidArgumentError):
            derive_volumetric_constants(1200.0, 0.51)

    def test_nonpositive_mu_rejected(self):
        with pytest.raises(InvalidArgumentError):
            derive_volumetric_constants(0.0, 0.3)


class TestOgdenParams:
    def test_derived_fields(self, brain_params):
        assert brain_params.K == pytest.approx(59600.0, rel=1e-12)
        assert brain_params.D == pytest.approx(2.0 / 59600.0, rel=1e-12)

    def test_default_poisson(self):
        assert OgdenParams(1000.0, 2.0).nu == 0.49

    def test_zero_alpha_rejected(self):
        with pytest.raises(InvalidArgumentError):
            OgdenParams(1000.0, 0.0)

    def test_frozen(self, brain_params):
        with pytest.raises(AttributeError):
            brain_params.mu = 1.0


class TestStrainEnergy:
    def test_identity_is_zero(self, brain_params):
        assert strain_energy(np.eye(3), brain_params) == 0.0

    def test_isochoric_uniaxial(self, brain_params):
        lam = 1.2
        F = np.diag([lam**-0.5, lam**-0.5, lam])
        expected = energy_oracle([lam, lam**-0.5, lam**-0.5], 1.0, MU, ALPHA,
                                 brain_params.K)
        W = strain_energy(F, brain_params)
        assert W == pytest.approx(expected, rel=1e-12)
        assert W == pytest.approx(52.544, rel=1e-4)  # frozen from the oracle

    def test_pure_dilation_volumetric_only(self, brain_params):
        J = 1.05
        F = J ** (1.0 / 3.0) * np.eye(3)
        W = strain_energy(F, brain_params)
        # isochoric stretches are all 1, so only the (1/D)(J-1)^2 term remains
        assert W == pytest.approx((1.0 / brain_params.D) * 0.05**2, rel=1e-9)
        assert W == pytest.approx(74.5, rel=1e-12)

    def test_rotation_invariance(self, brain_params):
        rng = np.random.default_rng(7)
        F = random_deformation_gradient(rng)
        W = strain_energy(F, brain_params)
        for _ in range(5):
            Q = random_rotation(rng)
            assert strain_energy(Q @ F, brain_params) == pytest.approx(W, rel=1e-10)

    def test_isochoric_term_nonnegative(self, brain_params):
        # AM-GM: sum of lb^alpha >= 3 when prod lb = 1, equality at lb = 1
        rng = np.random.default_rng(11)
        for _ in range(200):
            lams = rng.uniform(0.4, 2.5, size=3)
            J = np.prod(lams)
            lb = lams * J ** (-1.0 / 3.0)
            iso = (2.0 * MU / ALPHA**2) * (np.sum(lb**ALPHA) - 3.0)
            assert iso >= -1e-10
        assert energy_oracle([1.0, 1.0, 1.0], 1.0, MU, ALPHA, 59600.0) == 0.0

    def test_inverted_gradient_rejected(self, brain_params):
        with pytest.raises(InvalidStateError):
            strain_energy(np.diag([-1.0, 1.0, 1.0]), brain_params)
        with pytest.raises(InvalidStateError):
            strain_energy(np.zeros((3, 3)), brain_params)


def cauchy_from_energy_fd(F, p, h=1e-6):
    """Independent oracle: sigma = (1/J) dW/dF F^T by central differences."""
    dWdF = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            Fp, Fm = F.copy(), F.copy()
            Fp[i, j] += h
            Fm[i, j] -= h
            dWdF[i, j] = (strain_energy(Fp, p) - strain_energy(Fm, p)) / (2 * h)
    return dWdF @ F.T / np.linalg.det(F)


class TestCauchyStress:
    def test_identity_is_zero(self, brain_params):
        res = cauchy_stress(np.eye(3), brain_params)
        assert_allclose(res.cauchy, 0.0, atol=1e-12)
        assert res.energy_density == 0.0
        assert res.pressure == 0.0

    def test_pure_dilation_hydrostatic(self, brain_params):
        J = 1.05
        res = cauchy_stress(J ** (1.0 / 3.0) * np.eye(3), brain_params)
        expected_p = brain_params.K * 0.05
        assert expected_p == pytest.approx(2980.0, rel=1e-12)
        assert_allclose(res.cauchy, expected_p * np.eye(3), rtol=1e-9)
        assert res.pressure == pytest.approx(expected_p, rel=1e-12)
        deviator = res.cauchy - np.trace(res.cauchy) / 3.0 * np.eye(3)
        assert_allclose(deviator, 0.0, atol=1e-9 * MU)

    def test_gradient_check(self, brain_params):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(40):
            F = random_deformation_gradient(rng)
            sigma = cauchy_stress(F, brain_params).cauchy
            oracle = cauchy_from_energy_fd(F, brain_params)
            worst = max(worst, np.abs(sigma - oracle).max() / np.abs(oracle).max())
        assert worst < 1e-5

    def test_objectivity(self, brain_params):
        rng = np.random.default_rng(5)
        F = random_deformation_gradient(rng)
        sigma = cauchy_stress(F, brain_params).cauchy
        for _ in range(10):
            Q = random_rotation(rng)
            rotated = cauchy_stress(Q @ F, brain_params).cauchy
            assert_allclose(rotated, Q @ sigma @ Q.T,
                            atol=1e-8 * np.abs(sigma).max())

    def test_isotropy(self, brain_params):
        rng = np.random.default_rng(6)
        F = random_deformation_gradient(rng)
        sigma = cauchy_stress(F, brain_params).cauchy
        for _ in range(10):
            Q = random_rotation(rng)
            rotated = cauchy_stress(F @ Q, brain_params).cauchy
            assert_allclose(rotated, sigma, atol=1e-8 * np.abs(sigma).max())

    def test_symmetry_and_repeated_stretches(self, brain_params):
        # equal-biaxial state has a repeated principal stretch
        F = np.diag([1.3, 1.3, 1.0 / 1.3**2])
        res = cauchy_stress(F, brain_params)
        assert_allclose(res.cauchy, res.cauchy.T, atol=1e-12)
        oracle = cauchy_from_energy_fd(F, brain_params)
        assert_allclose(res.cauchy, oracle, rtol=1e-5,
                        atol=1e-5 * np.abs(oracle).max())

    def test_kirchhoff_deviator_traceless(self, brain_params):
        rng = np.random.default_rng(8)
        for _ in range(20):
            F = random_deformation_gradient(rng)
            J = np.linalg.det(F)
            res = cauchy_stress(F, brain_params)
            tau = J * res.cauchy
            tau_dev = tau - J * res.pressure * np.eye(3)
            assert abs(np.trace(tau_dev)) < 1e-9 * MU


class TestUniaxialNominalStress:
    def test_undeformed_is_zero(self):
        assert uniaxial_nominal_stress(1.0, MU, ALPHA) == pytest.approx(0.0, abs=1e-12)

    def test_reference_values(self):
        # frozen from the incompressible-energy derivative oracle below
        assert uniaxial_nominal_stress(1.2, MU, ALPHA) == pytest.approx(
            463.1230789, rel=1e-9
        )
        assert uniaxial_nominal_stress(0.7, MU, ALPHA) == pytest.approx(
            -4971.2529159, rel=1e-9
        )

    def test_matches_energy_derivative(self):
        # oracle: P = dW/dlam of W(lam) = (2mu/a^2)(lam^a + 2 lam^(-a/2) - 3)
        def W(lam):
            return (2 * MU / ALPHA**2) * (lam**ALPHA + 2 * lam ** (-ALPHA / 2) - 3)

        h = 1e-7
        for lam in np.linspace(0.65, 1.25, 25):
            fd = (W(lam + h) - W(lam - h)) / (2 * h)
            assert uniaxial_nominal_stress(lam, MU, ALPHA) == pytest.approx(
                fd, rel=1e-6
            )

    def test_tension_compression_asymmetry(self):
        # alpha < 0 makes compression much stiffer than tension
        for eps in np.linspace(0.01, 0.3, 30):
            assert abs(uniaxial_nominal_stress(1 - eps, MU, ALPHA)) > abs(
                uniaxial_nominal_stress(1 + eps, MU, ALPHA)
            )

    def test_asymmetry_ratio_at_20_percent(self):
        ratio = abs(uniaxial_nominal_stress(0.8, MU, ALPHA)) / abs(
            uniaxial_nominal_stress(1.2, MU, ALPHA)
        )
        assert ratio == pytest.approx(3.6845, rel=1e-3)  # frozen from the formula
        assert ratio > 2.0

    def test_invalid_inputs(self):
        with pytest.raises(InvalidArgumentError):
            uniaxial_nominal_stress(0.0, MU, ALPHA)
        with pytest.raises(InvalidArgumentError):
            uniaxial_nominal_stress(-0.5, MU, ALPHA)
        with pytest.raises(InvalidArgumentError):
            uniaxial_nominal_stress(1.1, MU, 0.0)

    def test_agrees_with_cauchy_stress_route(self, brain_params):
        # incompressible kinematics + lateral-stress elimination reproduce P
        lam = 1.15
        F = np.diag([lam**-0.5, lam**-0.5, lam])
        res = cauchy_stress(F, brain_params)
        sigma_axial = res.cauchy[2, 2] - res.cauchy[0, 0]
        assert sigma_axial / lam == pytest.approx(
            uniaxial_nominal_stress(lam, MU, ALPHA), rel=1e-9
        )
