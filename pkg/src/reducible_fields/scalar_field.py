"""Free scalar field: classical and quantum expectation values on a k-grid.

Phase convention: ``k_mu x^mu = |k| x0 - k . x`` with ``x0 = c t``, so a
mode evolves as ``exp(-i k_mu x^mu) = exp(i (k . x - c |k| t))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_fock import A, A_DAG, FockState1, ladder_matrix
from .kspace import (
    KGrid,
    PhysicalConstants,
    Profile,
    StateField,
    compensated_sum,
    integrate,
    normalization_factor,
)
from .polarization import check_rotation

__all__ = [
    "SpacetimePoint",
    "LorentzBoost",
    "phase",
    "classical_field",
    "classical_energy",
    "quantum_energy",
    "field_expectation",
    "classical_energy_from_expectations",
    "energy_inequality_gap",
    "two_point_function",
    "energy_density",
    "box_energy_integral",
    "commutator_expectation",
    "commutator_check",
    "rotate_field",
    "boost_field",
    "boost_wave_vector",
    "boost_jacobian",
    "quantum_dimension_displacement",
    "GridClosureError",
]


class GridClosureError(ValueError):
    pass


@dataclass(frozen=True)
class SpacetimePoint:
    x0: float
    x: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        if len(x) != 3 or not all(math.isfinite(v) for v in (self.x0, *x)):
            raise ValueError("spacetime point needs finite x0 and three spatial components")
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "x", x)

    @classmethod
    def of(cls, p) -> "SpacetimePoint":
        """Accept a ``SpacetimePoint`` or a 4-sequence ``(x0, x1, x2, x3)``."""
        if isinstance(p, SpacetimePoint):
            return p
        p = [float(v) for v in p]
        return cls(p[0], tuple(p[1:4]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, *self.x])


@dataclass(frozen=True)
class LorentzBoost:
    """Boost along axis 3 with rapidity ``chi``."""

    chi: float

    def __post_init__(self):
        if not math.isfinite(self.chi):
            raise ValueError("rapidity must be finite")

    def matrix(self) -> np.ndarray:
        ch, sh = math.cosh(self.chi), math.sinh(self.chi)
        return np.array([[ch, 0, 0, sh], [0, 1, 0, 0], [0, 0, 1, 0], [sh, 0, 0, ch]])

    def inverse(self) -> "LorentzBoost":
        return LorentzBoost(-self.chi)


def phase(nodes: np.ndarray, norms: np.ndarray, x) -> np.ndarray:
    """``k_mu x^mu`` for every node."""
    p = SpacetimePoint.of(x)
    return norms * p.x0 - nodes @ np.asarray(p.x)


def _two_re_sum(grid: KGrid, amplitude: np.ndarray, x) -> float:
    terms = amplitude * np.exp(-1j * phase(grid.nodes, grid.norms, x))
    return 2.0 * integrate(grid, terms.real)


def classical_field(profile: Profile, x, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """``phi(x) = 2 Re sum_k w (l / N(k)) f(k) exp(-i k.x)``."""
    g = profile.grid
    return _two_re_sum(g, constants.l * profile.values / g.normalization, x)


def classical_energy(profile: Profile, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """``E_cl = hbar c sum_k w |k| |f(k)|^2``."""
    g = profile.grid
    return constants.hbar * constants.c * integrate(g, g.norms * np.abs(profile.values) ** 2)


def _require_scalar(field: StateField):
    if field.modes != 1:
        raise ValueError("operation needs a single-mode (scalar) state field")


def quantum_energy(field: StateField) -> float:
    """``E = hbar c l^3 sum_k w |k| <a^† a>_k``."""
    _require_scalar(field)
    c = field.constants
    g = field.grid
    return c.hbar * c.c * c.l ** 3 * integrate(g, g.norms * field.number_expect)


def classical_energy_from_expectations(field: StateField) -> float:
    """Classical energy of the mean field: ``hbar c l^3 sum_k w |k| |<a>_k|^2``."""
    _require_scalar(field)
    c = field.constants
    g = field.grid
    return c.hbar * c.c * c.l ** 3 * integrate(g, g.norms * np.abs(field.a_expect) ** 2)


def field_expectation(field: StateField, x) -> float:
    """``phi(x) = 2 Re sum_k w (l^{5/2} / N(k)) exp(-i k.x) <a>_k``."""
    _require_scalar(field)
    g = field.grid
    return _two_re_sum(g, field.constants.l ** 2.5 * field.a_expect / g.normalization, x)


def energy_inequality_gap(field: StateField) -> float:
    """``E - E_cl``; non-negative by Cauchy-Schwarz, zero for coherent fields."""
    c = field.constants
    g = field.grid
    variance = field.number_expect - np.abs(field.a_expect) ** 2
    return c.hbar * c.c * c.l ** 3 * integrate(g, g.norms * variance)


def _correlation_matrix(field: StateField) -> np.ndarray:
    """``<a_k^†><a_k'>`` off the diagonal, ``<a_k^† a_k>`` on it."""
    a = field.a_expect
    corr = np.outer(np.conj(a), a)
    np.fill_diagonal(corr, field.number_expect)
    return corr


def _pair_sum(terms: np.ndarray) -> complex:
    return complex(compensated_sum(terms.real), compensated_sum(terms.imag))


def two_point_function(field: StateField, x, y) -> complex:
    """``G(x, y) = sum_{k,k'} w w' (l^5 / N N') exp(i k.x) exp(-i k'.y) C(k, k')``.

    ``C`` factorizes as ``<a>_k^* <a>_k'`` for distinct nodes (independent
    oscillators) and is ``<a^† a>_k`` on the diagonal.
    """
    _require_scalar(field)
    g = field.grid
    u = g.weights * field.constants.l ** 2.5 / g.normalization
    left = u * np.exp(1j * phase(g.nodes, g.norms, x))
    right = u * np.exp(-1j * phase(g.nodes, g.norms, y))
    return _pair_sum(np.outer(left, right) * _correlation_matrix(field))


def energy_density(field: StateField, x) -> float:
    """Energy density from the double quadrature with kernel
    ``(|k||k'| + k.k') / sqrt(|k||k'|)`` and prefactor ``hbar c l^3 / (2 (2 pi)^3)``.
    """
    _require_scalar(field)
    c = field.constants
    g = field.grid
    kn = g.norms
    kernel = (np.outer(kn, kn) + g.nodes @ g.nodes.T) / np.sqrt(np.outer(kn, kn))
    ph = np.exp(1j * phase(g.nodes, kn, x))
    wph = g.weights * ph
    terms = kernel * np.outer(wph, np.conj(wph)) * _correlation_matrix(field)
    pref = c.hbar * c.c * c.l ** 3 / (2 * (2 * np.pi) ** 3)
    return pref * compensated_sum(terms.real)


def box_energy_integral(field: StateField, x0: float = 0.0, samples: int | None = None) -> float:
    """Integral of ``energy_density`` over the periodic box of a box-modes grid.

    Uses the uniform rule with ``samples`` points per axis, exact for the
    trigonometric polynomial ``e(x)`` when ``samples`` exceeds the largest
    mode-index difference (the default ``n`` does).
    """
    g = field.grid
    if g.kind != "box-modes":
        raise ValueError("box integral needs a box-modes grid")
    n, L = int(g.parameters["n"]), float(g.parameters["L"])
    m = samples or n
    xs = (np.arange(m) + 0.5) * L / m
    vals = [energy_density(field, (x0, a, b, cc)) for a in xs for b in xs for cc in xs]
    return (L / m) ** 3 * compensated_sum(vals)


def _field_operator(k, x, cutoff: int) -> np.ndarray:
    kn = float(np.linalg.norm(k))
    ph = phase(np.asarray(k, dtype=float)[None, :], np.array([kn]), x)[0]
    return np.exp(-1j * ph) * ladder_matrix(A, cutoff) + np.exp(1j * ph) * ladder_matrix(A_DAG, cutoff)


def commutator_expectation(k, x, y, probe: FockState1) -> complex:
    """``<probe| [phi_k(x), phi_k(y)] |probe>`` with truncated ladder matrices."""
    if probe.support() > probe.cutoff - 2:
        raise ValueError(
            f"probe occupies |{probe.support()}>; commutator is exact only up to cutoff - 2 = {probe.cutoff - 2}")
    fx = _field_operator(k, x, probe.cutoff)
    fy = _field_operator(k, y, probe.cutoff)
    v = probe.vector
    return complex(np.vdot(v, fx @ (fy @ v) - fy @ (fx @ v)))


def commutator_check(k, x, y, probe: FockState1) -> complex:
    """Residual ``<[phi(x), phi(y)]> + 2 i sin(k_mu (x - y)^mu)``; zero up to rounding."""
    kv = np.asarray(k, dtype=float)
    dx = SpacetimePoint.of(x).as_array() - SpacetimePoint.of(y).as_array()
    theta = float(phase(kv[None, :], np.array([np.linalg.norm(kv)]), dx)[0])
    return commutator_expectation(k, x, y, probe) + 2j * math.sin(theta)


def _closure_permutation(grid: KGrid, new_nodes: np.ndarray) -> np.ndarray:
    idx = grid.find_nodes(new_nodes)
    missing = np.flatnonzero(idx < 0)
    if missing.size:
        raise GridClosureError(f"grid is not closed under the transformation: node[{missing[0]}] has no image")
    if len(np.unique(idx)) != len(idx) or not np.allclose(grid.weights[idx], grid.weights, rtol=1e-12):
        raise GridClosureError("transformation does not permute the grid nodes with equal weights")
    return idx


def rotate_field(field: StateField, r, same_grid: bool = False) -> StateField:
    """Rotated field ``psi'_k = psi_{R^T k}``.

    By default the rotated nodes ``R k_i`` form a new explicit-list grid with
    unchanged weights.  With ``same_grid=True`` the result lives on the
    original grid, which must be closed under ``R``.
    """
    r = check_rotation(r)
    g = field.grid
    new_nodes = g.nodes @ r.T
    if not same_grid:
        return field.with_states(KGrid(new_nodes, g.weights, "explicit-list", {}), field.states)
    idx = _closure_permutation(g, new_nodes)
    states = [None] * len(g)
    for i, j in enumerate(idx):
        states[j] = field.states[i]
    return field.with_states(g, states)


def boost_wave_vector(k, boost: LorentzBoost) -> np.ndarray:
    """``k' = (k1, k2, k3 cosh chi + |k| sinh chi)``; works row-wise on ``(n, 3)``."""
    k = np.asarray(k, dtype=float)
    kn = np.linalg.norm(k, axis=-1)
    out = np.array(k, copy=True)
    out[..., 2] = k[..., 2] * math.cosh(boost.chi) + kn * math.sinh(boost.chi)
    return out


def boost_jacobian(k, boost: LorentzBoost):
    """Jacobian ``|d^3k / d^3k'| = |k| / |k'|`` of the boosted wave vector."""
    k = np.asarray(k, dtype=float)
    return np.linalg.norm(k, axis=-1) / np.linalg.norm(boost_wave_vector(k, boost), axis=-1)


def boost_field(field: StateField, boost: LorentzBoost) -> StateField:
    """Boosted field with ``psi'_{k'} = psi_k``.

    Nodes move to ``k'``.  Each weight is rescaled by ``N(k') / N(k)`` so that
    ``w' / N(k') = w / N(k)`` node by node, which makes
    ``field_expectation(boosted, x) == field_expectation(field, boost^-1 x)``
    hold term by term.
    """
    _require_scalar(field)
    g = field.grid
    new_nodes = boost_wave_vector(g.nodes, boost)
    new_norms = np.linalg.norm(new_nodes, axis=1)
    weights = g.weights * np.sqrt(new_norms / g.norms)
    return field.with_states(KGrid(new_nodes, weights, "explicit-list", {}), field.states)


def quantum_dimension_displacement(f_at_k: complex, k, x, mass: float,
                                   constants: PhysicalConstants = PhysicalConstants()) -> float:
    """Oscillator coordinate ``x4 = sqrt(2) r l^{-3/2} Re f(k) exp(-i k.x)``
    with ``r = sqrt(hbar / (m c |k|))``.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    k = np.asarray(k, dtype=float)
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ValueError("displacement undefined at k = 0")
    r = math.sqrt(constants.hbar / (mass * constants.c * kn))
    th = float(phase(k[None, :], np.array([kn]), x)[0])
    return math.sqrt(2) * r * constants.l ** -1.5 * (complex(f_at_k) * complex(math.cos(th), -math.sin(th))).real
