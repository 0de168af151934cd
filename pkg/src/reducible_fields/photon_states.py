"""Stokes parameters and single-photon state fields.

A single-photon field superposes, at every node, a one-photon state with
the two-mode vacuum:

    psi_k = sqrt(rho) e^{i phi} |1,0> + sqrt(1 - rho) |0,0>            (linear-H)
    psi_k = sqrt(rho) e^{i phi} (|1,0> +- i|0,1>)/sqrt(2) + sqrt(1 - rho) |0,0>

with ``+`` for ``circular-plus``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core_fock import FockState2, expectation, stokes_operators
from .kspace import KGrid, PhysicalConstants, Profile, StateField, compensated_sum, integrate

__all__ = [
    "POLARIZATIONS",
    "ContinuumWarning",
    "Stokes",
    "PhotonSpin",
    "SinglePhotonSpec",
    "stokes_per_node",
    "stokes_expectation",
    "coherent_stokes_integrands",
    "single_photon_field",
    "single_photon_energy",
    "photon_spin",
]

POLARIZATIONS = ("linear-H", "circular-plus", "circular-minus")

# rho at the outermost radial shell above this suggests the profile is not integrable.
CONTINUUM_RHO_LIMIT = 1e-3


class ContinuumWarning(UserWarning):
    """rho does not decay at the edge of a spherical grid."""


class Stokes(NamedTuple):
    S0: float
    S1: float
    S2: float
    S3: float


@dataclass(frozen=True)
class PhotonSpin:
    """``S2`` of a single-photon spec; ``circular`` is False for linear specs,
    whose ``value`` is then exactly 0."""

    value: float
    circular: bool

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class SinglePhotonSpec:
    rho: np.ndarray
    phase: np.ndarray
    polarization: str = "linear-H"

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        ph = np.array(self.phase, dtype=float).reshape(-1)
        if ph.size == 1 and rho.size != 1:
            ph = np.full(rho.shape, ph[0])
        if ph.shape != rho.shape:
            raise ValueError(f"phase has {ph.size} entries, rho has {rho.size}")
        for i, r in enumerate(rho):
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"rho[{i}] out of [0,1] (got {r})")
        if not np.all(np.isfinite(ph)):
            raise ValueError(f"phase[{int(np.flatnonzero(~np.isfinite(ph))[0])}] is not finite")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}, got {self.polarization!r}")
        rho.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phase", ph)

    def __len__(self):
        return self.rho.size

    @property
    def is_circular(self) -> bool:
        return self.polarization != "linear-H"

    @property
    def helicity(self) -> int:
        """+1, -1, or 0 for linear."""
        return {"linear-H": 0, "circular-plus": 1, "circular-minus": -1}[self.polarization]

    def to_json(self) -> dict:
        return {"rho": [float(r) for r in self.rho], "phase": [float(p) for p in self.phase],
                "polarization": self.polarization}

    @classmethod
    def from_json(cls, data: dict) -> "SinglePhotonSpec":
        return cls(data["rho"], data.get("phase", 0.0), data.get("polarization", "linear-H"))


def _check_grid(spec: SinglePhotonSpec, grid: KGrid):
    if len(spec) != len(grid):
        raise ValueError(f"spec has {len(spec)} nodes, grid has {len(grid)}")
    if grid.kind != "spherical-product":
        return
    kn = grid.norms
    edge = kn >= kn.max() * (1 - 1e-12)
    worst = float(spec.rho[edge].max())
    if worst > CONTINUUM_RHO_LIMIT:
        warnings.warn(f"rho reaches {worst:.3g} on the outermost radial shell; "
                      "the continuum energy integral may diverge", ContinuumWarning, stacklevel=3)


def stokes_per_node(field: StateField) -> np.ndarray:
    """``<psi_k|S_i|psi_k>`` for every node, shape ``(n, 4)``, real."""
    if field.modes != 2:
        raise ValueError("Stokes parameters need a two-mode (photon) state field")
    ops = stokes_operators()
    names = ("S0", "S1", "S2", "S3")
    return np.array([[expectation(s, ops[name]).real for name in names] for s in field.states])


def stokes_expectation(field: StateField) -> Stokes:
    """``S_i = l^3 sum_k w <psi_k|S_i|psi_k>``."""
    per = stokes_per_node(field)
    l3 = field.constants.l ** 3
    return Stokes(*(l3 * integrate(field.grid, per[:, i]) for i in range(4)))


def coherent_stokes_integrands(profile: Profile) -> np.ndarray:
    """Closed-form Stokes integrands of a coherent field with amplitudes ``(f_H, f_V)``.

    Returns shape ``(n, 4)``; each row satisfies ``s0^2 = s1^2 + s2^2 + s3^2``.
    """
    if not profile.is_photon:
        raise ValueError("Stokes integrands need a photon profile")
    fh, fv = profile.values[:, 0], profile.values[:, 1]
    return np.stack([
        np.abs(fh) ** 2 + np.abs(fv) ** 2,
        2 * (np.conj(fh) * fv).real,
        (1j * (np.conj(fv) * fh - np.conj(fh) * fv)).real,
        np.abs(fh) ** 2 - np.abs(fv) ** 2,
    ], axis=1)


def _node_state(rho: float, phi: float, helicity: int, cutoff: int) -> FockState2:
    c = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    one = math.sqrt(rho) * complex(math.cos(phi), math.sin(phi))
    c[0, 0] = math.sqrt(1.0 - rho)
    if helicity == 0:
        c[1, 0] = one
    else:
        c[1, 0] = one / math.sqrt(2)
        c[0, 1] = helicity * 1j * one / math.sqrt(2)
    return FockState2(c)


def single_photon_field(spec: SinglePhotonSpec, grid: KGrid, cutoff: int = 1,
                        constants: PhysicalConstants = PhysicalConstants()) -> StateField:
    if cutoff < 1:
        raise ValueError("single-photon states need cutoff >= 1")
    _check_grid(spec, grid)
    states = tuple(_node_state(r, p, spec.helicity, cutoff) for r, p in zip(spec.rho, spec.phase))
    return StateField(grid, states, constants)


def single_photon_energy(spec: SinglePhotonSpec, grid: KGrid,
                         constants: PhysicalConstants = PhysicalConstants()) -> float:
    """``hbar c l^3 sum_k w |k| rho(k)``."""
    _check_grid(spec, grid)
    c = constants
    return c.hbar * c.c * c.l ** 3 * integrate(grid, grid.norms * spec.rho)


def photon_spin(spec: SinglePhotonSpec, grid: KGrid,
                constants: PhysicalConstants = PhysicalConstants()) -> PhotonSpin:
    """``S2 = +- l^3 sum_k w rho(k)`` straight from the spec.

    Linear specs carry no spin along the propagation direction; they return
    ``PhotonSpin(0.0, circular=False)``.
    """
    _check_grid(spec, grid)
    if not spec.is_circular:
        return PhotonSpin(0.0, False)
    l3 = constants.l ** 3
    return PhotonSpin(spec.helicity * l3 * compensated_sum(grid.weights * spec.rho), True)
