import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reducible_fields.core_fock import A_H, FockState2, expectation
from reducible_fields.em_field import quantum_energy_em, vector_potential
from reducible_fields.kspace import (
    PhysicalConstants,
    Profile,
    coherent_field,
    explicit_grid,
    gaussian_profile,
    make_spherical_grid,
    vacuum_field,
)
from reducible_fields.photon_states import (
    ContinuumWarning,
    SinglePhotonSpec,
    coherent_stokes_integrands,
    photon_spin,
    single_photon_energy,
    single_photon_field,
    stokes_expectation,
    stokes_per_node,
)

ONE = explicit_grid([[0, 0, 1]], [1])


def gauss_rho(grid, peak=0.9, width=1.0):
    return peak * np.exp(-np.sum(grid.nodes ** 2, axis=1) / (2 * width ** 2))


@pytest.fixture(scope="module")
def grid():
    return make_spherical_grid(16, 14)


class TestStokes:
    def test_vacuum(self):
        assert tuple(stokes_expectation(vacuum_field(make_spherical_grid(2, 6), 2, 2))) == (0, 0, 0, 0)

    def test_single_node_circular_coherent(self):
        s = stokes_expectation(coherent_field(Profile(ONE, [[1, 1j]]), 20))
        assert s.S0 == pytest.approx(2, abs=1e-12)
        assert s.S1 == pytest.approx(0, abs=1e-12)
        assert s.S2 == pytest.approx(2, abs=1e-12)
        assert s.S3 == pytest.approx(0, abs=1e-12)

    def test_closed_form_integrands(self):
        p = Profile(ONE, [[1, 1j]])
        assert np.allclose(coherent_stokes_integrands(p), [[2, 0, 2, 0]], atol=1e-15)

    def test_per_node_identity(self, grid):
        p = gaussian_profile(grid, 0.8 * np.exp(0.4j), 1.0, (0.1, 0.2, 0), (0.6, 0.8j * np.exp(0.3j)))
        s = stokes_per_node(coherent_field(p, 16))
        assert np.max(np.abs(s[:, 0] ** 2 - np.sum(s[:, 1:] ** 2, axis=1))) <= 1e-12
        c = coherent_stokes_integrands(p)
        assert np.max(np.abs(c[:, 0] ** 2 - np.sum(c[:, 1:] ** 2, axis=1))) <= 1e-12
        assert np.allclose(s, c, atol=1e-12)

    def test_scales_with_l_cubed(self):
        f1 = coherent_field(Profile(ONE, [[0.5, 0.2]]), 16)
        f2 = coherent_field(Profile(ONE, [[0.5, 0.2]]), 16, PhysicalConstants(l=2.0))
        assert stokes_expectation(f2).S0 == pytest.approx(8 * stokes_expectation(f1).S0, rel=1e-14)

    def test_requires_photon(self):
        with pytest.raises(ValueError):
            stokes_per_node(vacuum_field(ONE, 2))


class TestSpec:
    def test_rho_range_names_index(self):
        with pytest.raises(ValueError, match=r"rho\[3\] out of \[0,1\]"):
            SinglePhotonSpec([0.1, 0.2, 0.3, 1.2], 0.0)

    def test_polarization_name(self):
        with pytest.raises(ValueError):
            SinglePhotonSpec([0.5], [0], "circular")

    def test_phase_broadcast(self):
        assert SinglePhotonSpec([0.1, 0.2], 0.5).phase.tolist() == [0.5, 0.5]

    def test_json(self):
        s = SinglePhotonSpec([0.1, 0.2], [0, 1], "circular-minus")
        back = SinglePhotonSpec.from_json(s.to_json())
        assert back.polarization == s.polarization and np.array_equal(back.rho, s.rho)


class TestField:
    def test_zero_rho_vacuum(self):
        f = single_photon_field(SinglePhotonSpec([0.0], [0.0]), ONE, 2)
        assert np.array_equal(f.states[0].coeffs, FockState2.vacuum(2).coeffs)

    def test_full_rho_linear(self):
        g = explicit_grid([[0, 0, 1], [0, 1, 0]], [1, 1])
        f = single_photon_field(SinglePhotonSpec([1.0, 1.0], [0.3, 0.0]), g)
        assert all(abs(s.coeffs[1, 0]) == 1 for s in f.states)
        assert np.array_equal(vector_potential(f, (0.2, 0.1, 0, 0)), np.zeros(3))

    def test_half_rho(self):
        f = single_photon_field(SinglePhotonSpec([0.5], [0.0]), ONE)
        assert expectation(f.states[0], A_H) == pytest.approx(0.5, abs=1e-15)

    def test_norm_exact(self, grid):
        f = single_photon_field(SinglePhotonSpec(gauss_rho(grid), np.linspace(0, 6, len(grid)), "circular-plus"), grid)
        assert max(abs(s.norm() - 1) for s in f.states) <= 1e-15

    def test_length_mismatch(self, grid):
        with pytest.raises(ValueError):
            single_photon_field(SinglePhotonSpec([0.5], 0.0), grid)

    def test_plus_convention(self):
        f = single_photon_field(SinglePhotonSpec([1.0], [0.0], "circular-plus"), ONE)
        c = f.states[0].coeffs
        assert c[1, 0] == pytest.approx(1 / math.sqrt(2)) and c[0, 1] == pytest.approx(1j / math.sqrt(2))
        assert stokes_expectation(f).S2 == pytest.approx(1, abs=1e-15)

    def test_amplitude_profile(self):
        rhos = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
        amps = [abs(vector_potential(single_photon_field(SinglePhotonSpec([r], [0.0]), ONE), (0, 0, 0, 0))[0])
                for r in rhos]
        expected = np.sqrt(rhos * (1 - rhos)) / math.sqrt(16 * math.pi ** 3)
        assert np.allclose(amps, expected, atol=1e-16)
        assert int(np.argmax(amps)) == 2

    def test_continuum_warning(self, grid):
        with pytest.warns(ContinuumWarning):
            single_photon_field(SinglePhotonSpec(np.full(len(grid), 0.5), 0.0), grid)
        with warnings.catch_warnings():
            warnings.simplefilter("error", ContinuumWarning)
            single_photon_field(SinglePhotonSpec(gauss_rho(grid), 0.0), grid)


class TestEnergyAndSpin:
    def test_zero(self, grid):
        assert single_photon_energy(SinglePhotonSpec(np.zeros(len(grid)), 0.0), grid) == 0

    def test_single_node(self):
        assert single_photon_energy(SinglePhotonSpec([0.5], 0.0), explicit_grid([[0, 0, 2]], [1])) == 1

    def test_matches_quantum_energy(self, grid):
        spec = SinglePhotonSpec(gauss_rho(grid), 0.0, "circular-minus")
        assert single_photon_energy(spec, grid) == pytest.approx(
            quantum_energy_em(single_photon_field(spec, grid)), rel=1e-10)

    def test_l_cubed(self):
        spec = SinglePhotonSpec([0.5], 0.0)
        g = explicit_grid([[0, 0, 2]], [1])
        assert single_photon_energy(spec, g, PhysicalConstants(l=2.0)) == 8

    def test_additivity(self, grid):
        rho = gauss_rho(grid)
        upper = np.where(grid.nodes[:, 2] > 0, rho, 0.0)
        lower = rho - upper
        total = single_photon_energy(SinglePhotonSpec(rho, 0.0), grid)
        parts = (single_photon_energy(SinglePhotonSpec(upper, 0.0), grid)
                 + single_photon_energy(SinglePhotonSpec(lower, 0.0), grid))
        assert total == pytest.approx(parts, rel=1e-14)

    def test_spin_plus_single(self):
        s = photon_spin(SinglePhotonSpec([1.0], 0.0, "circular-plus"), ONE)
        assert s.value == 1 and s.circular

    def test_spin_minus_gaussian(self, grid):
        spec = SinglePhotonSpec(gauss_rho(grid), 0.0, "circular-minus")
        expected = -math.fsum(grid.weights * spec.rho)
        assert photon_spin(spec, grid).value == pytest.approx(expected, rel=1e-10)
        assert stokes_expectation(single_photon_field(spec, grid)).S2 == pytest.approx(expected, rel=1e-10)

    def test_linear_flagged(self, grid):
        spec = SinglePhotonSpec(gauss_rho(grid), 0.0)
        s = photon_spin(spec, grid)
        assert s.value == 0 and not s.circular
        assert stokes_expectation(single_photon_field(spec, grid)).S2 == 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["circular-plus", "circular-minus"]))
    def test_two_paths_and_s1(self, seed, pol):
        rng = np.random.default_rng(seed)
        g = make_spherical_grid(2, 6)
        spec = SinglePhotonSpec(rng.uniform(0, 1, len(g)), rng.uniform(0, 6.3, len(g)), pol)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ContinuumWarning)
            f = single_photon_field(spec, g)
            spin = photon_spin(spec, g).value
        assert stokes_expectation(f).S2 == pytest.approx(spin, rel=1e-10)
        assert np.all(stokes_per_node(f)[:, 1] == 0)
