import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import constants as sc

from reducible_fields.core_fock import A_H, A_V, FockState2, coherent_state_2, expectation, random_state
from reducible_fields.em_field import (
    antipodal_cross_terms,
    box_classical_energy_em,
    calibrate_lambda_l,
    classical_energy_em,
    electric_field,
    gauss_divergence,
    magnetic_field,
    quantum_energy_em,
    rotate_em_field,
    sample_fields,
    vector_potential,
)
from reducible_fields.kspace import (
    PhysicalConstants,
    Profile,
    StateField,
    coherent_field,
    explicit_grid,
    gaussian_profile,
    make_box_grid,
    make_spherical_grid,
    symmetric_grid,
    vacuum_field,
)
from reducible_fields.polarization import random_rotation, rotation_matrix
from reducible_fields.scalar_field import GridClosureError

N1 = math.sqrt(16 * math.pi ** 3)
CAL = PhysicalConstants().with_lambda_l(2.0)


def photon_field(grid, amp=0.6, center=(0.2, -0.1, 0.3), pol=(1, 0.5j), cutoff=12, constants=PhysicalConstants()):
    return coherent_field(gaussian_profile(grid, amp, 1.0, center, pol), cutoff, constants)


@pytest.fixture(scope="module")
def field():
    return photon_field(make_spherical_grid(8, 14))


class TestPotential:
    def test_vacuum(self):
        f = vacuum_field(make_spherical_grid(2, 6), 3, modes=2)
        for fn in (vector_potential, electric_field, magnetic_field):
            assert np.array_equal(fn(f, (0.1, 0.2, 0.3, 0.4)), np.zeros(3))

    def test_single_node(self):
        f = coherent_field(Profile(explicit_grid([[0, 0, 1]], [1]), [[1, 0]]), 16)
        a = vector_potential(f, (0, 0, 0, 0))
        assert np.allclose(a, [1 / N1, 0, 0], rtol=1e-9, atol=1e-15)
        assert a[0] == pytest.approx(0.04490, abs=1e-5)

    def test_requires_photon(self):
        f = vacuum_field(make_spherical_grid(2, 6), 3)
        with pytest.raises(ValueError):
            vector_potential(f, (0, 0, 0, 0))

    def test_plane_wave_geometry(self):
        k = np.array([0.3, -0.5, 0.8])
        f = coherent_field(Profile(explicit_grid([k], [0.7]), [[0.4 + 0.1j, -0.3j]]), 16)
        s = sample_fields(f, (0.3, 1.0, -0.2, 0.5))
        assert np.linalg.norm(s.B) * f.constants.c == pytest.approx(np.linalg.norm(s.E), rel=1e-12)
        assert abs(s.E @ k) <= 1e-10 * np.linalg.norm(s.E)
        assert abs(s.B @ k) <= 1e-10 * np.linalg.norm(s.B)
        assert abs(s.E @ s.B) <= 1e-10 * np.linalg.norm(s.E) * np.linalg.norm(s.B)

    def test_derivatives_match_finite_differences(self):
        c = PhysicalConstants(c=2.0)
        f = photon_field(make_spherical_grid(6, 14), constants=c)
        x = np.array([0.2, 0.4, -0.3, 0.1])
        h = 1e-4
        e0 = np.array([h, 0, 0, 0])
        fd_e = -c.c * (vector_potential(f, x + e0) - vector_potential(f, x - e0)) / (2 * h)
        assert np.allclose(electric_field(f, x), fd_e, atol=1e-6)
        grad = np.empty((3, 3))  # grad[b, g] = dA_g / dx_b
        for b in range(3):
            d = np.zeros(4)
            d[b + 1] = h
            grad[b] = (vector_potential(f, x + d) - vector_potential(f, x - d)) / (2 * h)
        curl = np.array([grad[1, 2] - grad[2, 1], grad[2, 0] - grad[0, 2], grad[0, 1] - grad[1, 0]])
        assert np.allclose(magnetic_field(f, x), curl, atol=1e-6)


class TestGauss:
    def test_vacuum(self):
        assert gauss_divergence(vacuum_field(make_spherical_grid(2, 6), 3, 2), (0, 0, 0, 0)) == 0

    def test_single_node(self):
        f = coherent_field(Profile(explicit_grid([[0.3, 0.4, 0.5]], [1]), [[0.7, 0.2j]]), 16)
        assert abs(gauss_divergence(f, (0.1, 0.2, 0.3, 0.4), 1e-4)) <= 1e-8

    def test_random_field(self, field):
        rng = np.random.default_rng(1)
        for x in rng.uniform(-2, 2, (5, 4)):
            assert abs(gauss_divergence(field, x)) <= 1e-6 * np.max(np.abs(electric_field(field, x)))

    def test_step_positive(self, field):
        with pytest.raises(ValueError):
            gauss_divergence(field, (0, 0, 0, 0), 0.0)


class TestEnergy:
    def test_vacuum(self):
        f = vacuum_field(make_spherical_grid(2, 6), 3, 2)
        assert quantum_energy_em(f) == 0
        assert classical_energy_em(f) == 0

    def test_number_state(self):
        f = StateField(explicit_grid([[0, 0, 2]], [1]), (FockState2.number(1, 1, 3),))
        assert quantum_energy_em(f) == 4

    def test_coherent_quantum(self, field):
        g = field.grid
        a = field.a_expect
        oracle = math.fsum(g.weights * g.norms * np.sum(np.abs(a) ** 2, axis=1))
        assert quantum_energy_em(field) == pytest.approx(oracle, rel=1e-8)

    def test_calibrated_single_node(self):
        f = coherent_field(Profile(explicit_grid([[0, 0, 1]], [1]), [[1, 0]]), 16, CAL)
        assert classical_energy_em(f) == pytest.approx(quantum_energy_em(f), rel=1e-10)

    def test_box_oracle(self):
        g = make_box_grid(3, 2 * math.pi)
        f = photon_field(g, 0.5, (0.1, 0, -0.2), (1, 0.3j), constants=CAL)
        assert box_classical_energy_em(f, 0.4) == pytest.approx(classical_energy_em(f), rel=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_quantum_exceeds_mean_field(self, seed):
        rng = np.random.default_rng(seed)
        g = make_spherical_grid(2, 6)
        f = StateField(g, tuple(random_state(rng, 4, modes=2) for _ in range(len(g))), CAL)
        assert quantum_energy_em(f) - classical_energy_em(f) >= -1e-12


class TestCalibration:
    def test_natural(self):
        r = calibrate_lambda_l()
        assert r.reference == 4
        assert r.self_consistent == 2
        assert r.ratio == 2

    def test_si(self):
        r = calibrate_lambda_l(PhysicalConstants.si())
        assert r.reference == pytest.approx(4 * math.sqrt(sc.hbar / (sc.epsilon_0 * sc.c)), rel=1e-15)
        assert r.reference == pytest.approx(7.97e-16, rel=1e-3)
        alpha = sc.e ** 2 / (4 * math.pi * sc.epsilon_0 * sc.hbar * sc.c)
        assert r.reference_fine_structure == pytest.approx(4 * sc.hbar / sc.e * math.sqrt(math.pi * alpha), rel=1e-14)

    def test_epsilon_scaling(self):
        a = calibrate_lambda_l(PhysicalConstants())
        b = calibrate_lambda_l(PhysicalConstants(epsilon0=2.0))
        assert b.reference == pytest.approx(a.reference / math.sqrt(2), rel=1e-15)
        assert b.self_consistent == pytest.approx(a.self_consistent / math.sqrt(2), rel=1e-15)

    def test_self_consistent_equates_energies(self):
        base = PhysicalConstants(hbar=0.7, c=3.0, epsilon0=1.9, l=1.3)
        c = base.with_lambda_l(calibrate_lambda_l(base).self_consistent)
        f = photon_field(make_spherical_grid(8, 14), constants=c)
        assert classical_energy_em(f) == pytest.approx(quantum_energy_em(f), rel=1e-10)

    def test_json_keys(self):
        assert set(calibrate_lambda_l().to_json()) == {
            "lambda_l_selfconsistent", "lambda_l_paper", "lambda_l_paper_fine_structure",
            "ratio_paper_to_selfconsistent"}


class TestCrossTerms:
    def test_single_pair(self):
        g = symmetric_grid([[0.3, -0.4, 0.5]], [0.8])
        e, m = antipodal_cross_terms(Profile(g, [0.7 + 0.2j, 0.7 + 0.2j]), 0.3)
        assert e != 0
        assert e == pytest.approx(m, rel=1e-12)

    def test_one_hemisphere(self):
        g = make_spherical_grid(4, 14)
        vals = np.where(g.nodes[:, 2] > 0, 1.0, 0.0)
        assert antipodal_cross_terms(Profile(g, vals), 0.5) == (0.0, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_even(self, seed):
        rng = np.random.default_rng(seed)
        g = symmetric_grid(rng.standard_normal((8, 3)), rng.uniform(0.1, 1, 8))
        vals = np.repeat(rng.standard_normal(8) + 1j * rng.standard_normal(8), 2)
        e, m = antipodal_cross_terms(Profile(g, vals), 0.7)
        assert abs(e - m) <= 1e-10 * max(abs(e), abs(m), 1e-300)

    def test_asymmetric_grid(self):
        with pytest.raises(ValueError, match="not symmetric"):
            antipodal_cross_terms(Profile(explicit_grid([[1, 0, 0]], [1]), [1.0]))

    def test_photon_profile_uses_h(self):
        g = symmetric_grid([[0.1, 0.2, 0.3], [0.5, -0.1, 0.2]], [1, 1])
        h = np.array([1, 1, 0.5, 0.5])
        a = antipodal_cross_terms(Profile(g, h))
        b = antipodal_cross_terms(Profile(g, np.column_stack([h, 3 * h])))
        assert a == b


class TestRotation:
    def test_identity(self, field):
        r = rotate_em_field(field, np.eye(3))
        x = (0.1, 0.2, 0.3, 0.4)
        assert np.allclose(vector_potential(r, x), vector_potential(field, x), atol=1e-15)

    @pytest.mark.parametrize("theta", [0.5, -2.0])
    def test_axis_three_mixing(self, theta):
        f = StateField(explicit_grid([[0, 0, 1]], [1]), (coherent_state_2(1, 0, 16),))
        r = rotate_em_field(f, rotation_matrix([0, 0, 1], theta))
        s = r.states[0]
        assert expectation(s, A_H) == pytest.approx(math.cos(theta), abs=1e-9)
        assert expectation(s, A_V) == pytest.approx(math.sin(theta), abs=1e-9)

    def test_covariance_and_energy(self, field):
        rng = np.random.default_rng(21)
        R = random_rotation(rng)
        r = rotate_em_field(field, R)
        for x in rng.uniform(-2, 2, (10, 4)):
            back = np.concatenate([[x[0]], R.T @ x[1:]])
            assert np.max(np.abs(vector_potential(r, x) - R @ vector_potential(field, back))) <= 1e-8
        assert quantum_energy_em(r) == pytest.approx(quantum_energy_em(field), rel=1e-10)

    def test_same_grid(self):
        g = make_spherical_grid(3, 26)
        f = photon_field(g, 0.5)
        R = rotation_matrix([1, 0, 0], math.pi / 2)
        r = rotate_em_field(f, R, same_grid=True)
        x = np.array([0.3, 0.1, -0.5, 0.2])
        back = np.concatenate([[x[0]], R.T @ x[1:]])
        assert np.allclose(vector_potential(r, x), R @ vector_potential(f, back), atol=1e-12)

    def test_closure_violation(self, field):
        with pytest.raises(GridClosureError):
            rotate_em_field(field, rotation_matrix([1, 1, 0], 0.3), same_grid=True)
