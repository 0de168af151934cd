"""Free electromagnetic field in temporal gauge (A_0 = 0).

Each wave vector carries a two-mode oscillator (H and V polarizations).
Expectation values are

    A(x) = lambda Re sum_k w (l^{5/2} / N(k)) exp(-i k.x) (eps_H <a_H> + eps_V <a_V>)

with ``eps_H``, ``eps_V`` the first two rows of ``xi_matrix(k)``.  E and B
are obtained by differentiating under the sum, never numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_fock import apply_unitary, mode_rotation_unitary
from .kspace import KGrid, PhysicalConstants, Profile, StateField, compensated_sum, integrate
from .polarization import check_rotation, compensating_rotation, xi_matrices
from .scalar_field import GridClosureError, SpacetimePoint, _closure_permutation, phase

__all__ = [
    "EmClassicalSample",
    "CalibrationReport",
    "vector_potential",
    "electric_field",
    "magnetic_field",
    "sample_fields",
    "gauss_divergence",
    "quantum_energy_em",
    "classical_energy_em",
    "box_classical_energy_em",
    "calibrate_lambda_l",
    "antipodal_cross_terms",
    "rotate_em_field",
    "GridClosureError",
]


@dataclass(frozen=True, eq=False)
class EmClassicalSample:
    x: SpacetimePoint
    A: np.ndarray
    E: np.ndarray
    B: np.ndarray


def _require_photon(field: StateField):
    if field.modes != 2:
        raise ValueError("operation needs a two-mode (photon) state field")


def _polarization_amplitudes(field: StateField) -> np.ndarray:
    """Complex 3-vector ``eps_H <a_H> + eps_V <a_V>`` per node, shape ``(n, 3)``."""
    xi = xi_matrices(field.grid.nodes)
    a = field.a_expect
    return xi[:, 0, :] * a[:, 0:1] + xi[:, 1, :] * a[:, 1:2]


def _mode_sum(field: StateField, x, vec: np.ndarray) -> np.ndarray:
    """``lambda Re sum_k w (l^{5/2}/N) exp(-i k.x) vec_k`` for an ``(n, 3)`` complex array."""
    g = field.grid
    c = field.constants
    coef = g.weights * c.lam * c.l ** 2.5 / g.normalization * np.exp(-1j * phase(g.nodes, g.norms, x))
    terms = (coef[:, None] * vec).real
    return np.array([compensated_sum(terms[:, a]) for a in range(3)])


def vector_potential(field: StateField, x) -> np.ndarray:
    """Spatial components ``(A_1, A_2, A_3)``; ``A_0`` vanishes identically."""
    _require_photon(field)
    return _mode_sum(field, x, _polarization_amplitudes(field))


def electric_field(field: StateField, x) -> np.ndarray:
    """``E = -c dA/dx0``: each mode picks up ``i c |k|``."""
    _require_photon(field)
    g = field.grid
    pol = _polarization_amplitudes(field)
    return _mode_sum(field, x, 1j * field.constants.c * g.norms[:, None] * pol)


def magnetic_field(field: StateField, x) -> np.ndarray:
    """``B = curl A``: each mode picks up ``i k x (.)``."""
    _require_photon(field)
    pol = _polarization_amplitudes(field)
    return _mode_sum(field, x, 1j * np.cross(field.grid.nodes, pol))


def sample_fields(field: StateField, x) -> EmClassicalSample:
    return EmClassicalSample(SpacetimePoint.of(x), vector_potential(field, x),
                             electric_field(field, x), magnetic_field(field, x))


def gauss_divergence(field: StateField, x, h: float = 1e-4) -> float:
    """Central finite-difference ``div E`` at ``x`` with step ``h``."""
    if not h > 0:
        raise ValueError("step h must be positive")
    p = SpacetimePoint.of(x).as_array()
    total = []
    for a in range(3):
        dp = np.zeros(4)
        dp[a + 1] = h
        total.append((electric_field(field, p + dp)[a] - electric_field(field, p - dp)[a]) / (2 * h))
    return compensated_sum(total)


def quantum_energy_em(field: StateField) -> float:
    """``hbar c l^3 sum_k w |k| (<n_H> + <n_V>)``."""
    _require_photon(field)
    c = field.constants
    g = field.grid
    return c.hbar * c.c * c.l ** 3 * integrate(g, g.norms * field.number_expect.sum(axis=1))


def classical_energy_em(field: StateField) -> float:
    """Energy of the mean field, ``(1/4) eps0 lambda^2 c^2 l^2 sum_k w |k| (|f_H|^2 + |f_V|^2)``
    with ``f = l^{3/2} <a>``.
    """
    _require_photon(field)
    c = field.constants
    g = field.grid
    f2 = c.l ** 3 * np.sum(np.abs(field.a_expect) ** 2, axis=1)
    return 0.25 * c.epsilon0 * c.lam ** 2 * c.c ** 2 * c.l ** 2 * integrate(g, g.norms * f2)


def box_classical_energy_em(field: StateField, x0: float = 0.0, samples: int | None = None) -> float:
    """``(1/2) eps0 int_box (E^2 + c^2 B^2) dx`` by direct spatial summation.

    Only meaningful on box-modes grids: the spatial rule with ``samples``
    points per axis is exact when ``samples`` exceeds twice the largest mode
    index (the default ``2 n + 1`` does), so ``k + k'`` cross terms are
    resolved as well as ``k - k'`` ones.
    """
    g = field.grid
    if g.kind != "box-modes":
        raise ValueError("box integral needs a box-modes grid")
    n, L = int(g.parameters["n"]), float(g.parameters["L"])
    m = samples or 2 * n + 1
    xs = (np.arange(m) + 0.5) * L / m
    c = field.constants
    vals = []
    for a in xs:
        for b in xs:
            for d in xs:
                e = electric_field(field, (x0, a, b, d))
                bb = magnetic_field(field, (x0, a, b, d))
                vals.append(float(e @ e) + c.c ** 2 * float(bb @ bb))
    return 0.5 * c.epsilon0 * (L / m) ** 3 * compensated_sum(vals)


@dataclass(frozen=True)
class CalibrationReport:
    """Values of the product ``lambda l``.

    ``self_consistent`` equates this module's classical and quantum energy
    functionals for coherent fields.  ``reference`` is the closed form
    ``4 sqrt(hbar/(eps0 c))`` and ``reference_fine_structure`` the form
    ``4 (hbar/q_el) sqrt(pi alpha)``, both evaluated literally.  The two
    reference forms are not equal: the second is half the first.
    """

    self_consistent: float
    reference: float
    reference_fine_structure: float

    @property
    def ratio(self) -> float:
        """``reference / self_consistent``."""
        return self.reference / self.self_consistent

    def to_json(self) -> dict:
        return {
            "lambda_l_selfconsistent": self.self_consistent,
            "lambda_l_paper": self.reference,
            "lambda_l_paper_fine_structure": self.reference_fine_structure,
            "ratio_paper_to_selfconsistent": self.ratio,
        }


def calibrate_lambda_l(constants: PhysicalConstants = PhysicalConstants()) -> CalibrationReport:
    """Solve ``(1/4) eps0 (lambda l)^2 c^2 = hbar c`` for ``lambda l``."""
    hbar, c, eps0, q = constants.hbar, constants.c, constants.epsilon0, constants.q_el
    alpha = q ** 2 / (4 * math.pi * eps0 * hbar * c)
    return CalibrationReport(
        self_consistent=math.sqrt(4 * hbar * c / (eps0 * c ** 2)),
        reference=4 * math.sqrt(hbar / (eps0 * c)),
        reference_fine_structure=4 * (hbar / q) * math.sqrt(math.pi * alpha),
    )


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[a, c, b] = -1.0
    return eps


def _antipodes(grid: KGrid) -> np.ndarray:
    idx = grid.find_nodes(-grid.nodes)
    bad = np.flatnonzero(idx < 0)
    if bad.size:
        raise ValueError(f"grid is not symmetric under k -> -k: node[{bad[0]}] has no partner")
    if not np.allclose(grid.weights[idx], grid.weights, rtol=1e-12):
        raise ValueError("grid weights differ between k and -k")
    return idx


def antipodal_cross_terms(profile: Profile, x0: float = 0.0,
                            constants: PhysicalConstants = PhysicalConstants()) -> tuple[float, float]:
    """The two ``k' = -k`` cross-term contributions to the field energy.

    Returns ``(electric_piece, magnetic_piece)``:

    * ``sum_k c(k) |k|^2 sum_a Xi_1a(k) Xi_1a(-k)``
    * ``sum_k c(k) sum_a (eps_abc k_b Xi_1c(k)) (eps_ab'c' k_b' Xi_1c'(-k))``

    with ``c(k) = w lambda^2 c / (4 l^2 |k|) Re[f(k) f(-k) exp(-2 i |k| x0)]``.
    The energy contains their difference, which vanishes because
    ``k . Xi_1(k) = 0``; the pieces are evaluated independently.  ``profile``
    is ``f_H`` (scalar values) or a photon profile whose H column is used.
    """
    g = profile.grid
    f = profile.values[:, 0] if profile.is_photon else profile.values
    partner = _antipodes(g)
    xi = xi_matrices(g.nodes)
    xi1, xi1m = xi[:, 0, :], xi[partner, 0, :]
    kn = g.norms
    c = constants
    coef = g.weights * c.lam ** 2 * c.c / (4 * c.l ** 2 * kn) * (
        f * f[partner] * np.exp(-2j * kn * x0)).real
    electric = kn ** 2 * np.einsum("ia,ia->i", xi1, xi1m)
    eps = _levi_civita()
    k = g.nodes
    curl_k = np.einsum("abc,ib,ic->ia", eps, k, xi1)
    curl_mk = np.einsum("abc,ib,ic->ia", eps, k, xi1m)
    magnetic = np.einsum("ia,ia->i", curl_k, curl_mk)
    return compensated_sum(coef * electric), compensated_sum(coef * magnetic)


def rotate_em_field(field: StateField, r, same_grid: bool = False) -> StateField:
    """Rotated photon field: node ``k`` moves to ``R k`` and its state is
    mixed by the mode rotation for the compensating angle ``gamma(R, k)``.

    The state map is ``exp(-gamma G)`` (the adjoint of
    ``mode_rotation_unitary(gamma)``), which sends
    ``(<a_H>, <a_V>)`` to ``M (<a_H>, <a_V>)`` with ``M`` the 2x2 block of the
    compensating rotation.  Then ``A'(x) = R A(R^T x)`` holds node by node.
    """
    _require_photon(field)
    r = check_rotation(r)
    g = field.grid
    cutoff = field.states[0].cutoff
    new_states = []
    for k, s in zip(g.nodes, field.states):
        gamma = compensating_rotation(r, k).gamma
        new_states.append(apply_unitary(s, mode_rotation_unitary(-gamma, cutoff)))
    new_nodes = g.nodes @ r.T
    if not same_grid:
        return field.with_states(KGrid(new_nodes, g.weights, "explicit-list", {}), new_states)
    idx = _closure_permutation(g, new_nodes)
    states = [None] * len(g)
    for i, j in enumerate(idx):
        states[j] = new_states[i]
    return field.with_states(g, states)
