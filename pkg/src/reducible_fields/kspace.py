"""Wave-vector space: quadrature grids, profiles, constants and k-indexed state fields."""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core_fock import (
    A,
    A_H,
    A_V,
    FockState1,
    FockState2,
    coherent_state_1,
    coherent_state_2,
    expectation,
    is_normalized,
    number_operator,
    TruncationError,
)

__all__ = [
    "PhysicalConstants",
    "KGrid",
    "Profile",
    "StateField",
    "normalization_factor",
    "make_spherical_grid",
    "make_box_grid",
    "explicit_grid",
    "symmetric_grid",
    "lebedev_rule",
    "integrate",
    "coherent_field",
    "vacuum_field",
    "gaussian_profile",
    "compensated_sum",
    "GridError",
]


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical constants; natural units by default.

    ``lam`` is the dimension-carrying prefactor of the vector potential
    (``lambda`` in JSON).
    """

    hbar: float = 1.0
    c: float = 1.0
    epsilon0: float = 1.0
    l: float = 1.0
    lam: float = 1.0
    q_el: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "c", "epsilon0", "l", "lam", "q_el"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be strictly positive, got {v}")

    @classmethod
    def si(cls, l: float = 1.0, lam: float | None = None) -> "PhysicalConstants":
        """CODATA values in SI units; ``lam`` defaults to the self-consistent ``lambda l / l``."""
        from scipy import constants as sc

        hbar, c, eps0 = sc.hbar, sc.c, sc.epsilon_0
        if lam is None:
            lam = 2.0 * math.sqrt(hbar / (eps0 * c)) / l
        return cls(hbar=hbar, c=c, epsilon0=eps0, l=l, lam=lam, q_el=sc.e)

    @property
    def lambda_l(self) -> float:
        return self.lam * self.l

    def with_lambda_l(self, value: float) -> "PhysicalConstants":
        return replace(self, lam=value / self.l)

    def to_json(self) -> dict:
        return {"hbar": self.hbar, "c": self.c, "epsilon0": self.epsilon0,
                "l": self.l, "lambda": self.lam, "q_el": self.q_el}

    @classmethod
    def from_json(cls, data: dict) -> "PhysicalConstants":
        kw = {k: float(v) for k, v in data.items() if k != "lambda"}
        if "lambda" in data:
            kw["lam"] = float(data["lambda"])
        return cls(**kw)


def normalization_factor(k) -> float:
    """``N(k) = sqrt((2 pi)^3 2 |k|)``; raises ``ValueError`` at ``k = 0``."""
    kn = float(np.linalg.norm(k))
    if kn == 0.0:
        raise ValueError("normalization factor is singular at k = 0")
    return math.sqrt((2 * math.pi) ** 3 * 2 * kn)


def _normalization_factors(norms: np.ndarray) -> np.ndarray:
    return np.sqrt((2 * np.pi) ** 3 * 2 * norms)


# Lebedev rules as octahedral orbits: (generator, weight, parameters).
# Weights sum to one; multiply by 4 pi for the sphere.
_LEBEDEV = {
    6: [("a1", 1 / 6)],
    14: [("a1", 1 / 15), ("a3", 3 / 40)],
    26: [("a1", 1 / 21), ("a2", 4 / 105), ("a3", 9 / 280)],
    38: [("a1", 1 / 105), ("a3", 9 / 280),
         ("c1", 1 / 35, 0.4597008433809831, 0.8880738339771153)],
    50: [("a1", 4 / 315), ("a2", 64 / 2835), ("a3", 27 / 1280),
         ("b1", 14641 / 725760, 0.3015113445777636, 0.9045340337332909)],
}
LEBEDEV_DEGREE = {6: 3, 14: 5, 26: 7, 38: 9, 50: 11}


def _orbit(p: tuple[float, float, float]) -> list[tuple[float, float, float]]:
    pts = set()
    for q in itertools.permutations(p):
        for s in itertools.product((1.0, -1.0), repeat=3):
            pts.add(tuple(si * qi + 0.0 for si, qi in zip(s, q)))
    return sorted(pts)


def lebedev_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions ``(n, 3)`` and weights summing to one."""
    if n not in _LEBEDEV:
        raise GridError(f"angular rule with {n} nodes not available; choose one of {sorted(_LEBEDEV)}")
    dirs, wts = [], []
    s2, s3 = 1 / math.sqrt(2), 1 / math.sqrt(3)
    for gen in _LEBEDEV[n]:
        kind, w = gen[0], gen[1]
        if kind == "a1":
            pts = _orbit((1.0, 0.0, 0.0))
        elif kind == "a2":
            pts = _orbit((s2, s2, 0.0))
        elif kind == "a3":
            pts = _orbit((s3, s3, s3))
        elif kind == "b1":
            pts = _orbit((gen[2], gen[2], gen[3]))
        else:
            pts = _orbit((gen[2], gen[3], 0.0))
        dirs.extend(pts)
        wts.extend([w] * len(pts))
    return np.array(dirs), np.array(wts)


@dataclass(frozen=True, eq=False)
class KGrid:
    """Quadrature rule ``sum_i w_i f(k_i)`` approximating an integral over R^3."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "explicit-list"
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 3)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if nodes.shape[0] < 1:
            raise GridError("a grid needs at least one node")
        if nodes.shape[0] != weights.size:
            raise GridError("node and weight counts differ")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise GridError("grid contains non-finite values")
        bad = np.flatnonzero(np.linalg.norm(nodes, axis=1) == 0.0)
        if bad.size:
            raise GridError(f"node[{bad[0]}] sits at k = 0")
        badw = np.flatnonzero(weights <= 0)
        if badw.size:
            raise GridError(f"weight[{badw[0]}] is not strictly positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.shape[0]

    @cached_property
    def norms(self) -> np.ndarray:
        n = np.linalg.norm(self.nodes, axis=1)
        n.setflags(write=False)
        return n

    @cached_property
    def normalization(self) -> np.ndarray:
        n = _normalization_factors(self.norms)
        n.setflags(write=False)
        return n

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(self.kind.encode())
        h.update(np.ascontiguousarray(self.nodes, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    def find_nodes(self, points: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
        """Index of the grid node matching each point, or -1."""
        from scipy.spatial import cKDTree

        tree = cKDTree(self.nodes)
        scale = float(self.norms.max())
        dist, idx = tree.query(np.asarray(points, dtype=float).reshape(-1, 3))
        idx = np.where(dist <= rtol * scale, idx, -1)
        return idx

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": dict(self.parameters),
            "nodes": [{"kx": float(k[0]), "ky": float(k[1]), "kz": float(k[2]), "w": float(w)}
                      for k, w in zip(self.nodes, self.weights)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "KGrid":
        nodes = [[n["kx"], n["ky"], n["kz"]] for n in data["nodes"]]
        weights = [n["w"] for n in data["nodes"]]
        return cls(nodes, weights, data.get("kind", "explicit-list"), dict(data.get("parameters", {})))


def _radial_rule(r_nodes: int, r_scale: float, radial_map: str) -> tuple[np.ndarray, np.ndarray]:
    t, w = leggauss(r_nodes)
    if radial_map == "log":
        r = -r_scale * np.log((1 - t) / 2)
        drdt = r_scale / (1 - t)
    elif radial_map == "rational":
        r = r_scale * (1 + t) / (1 - t)
        drdt = 2 * r_scale / (1 - t) ** 2
    else:
        raise GridError(f"unknown radial map {radial_map!r}")
    return r, w * drdt * r ** 2


def make_spherical_grid(r_nodes: int, ang_nodes: int, r_scale: float = 2.0,
                        radial_map: str = "log") -> KGrid:
    """Gauss-Legendre radial rule times a Lebedev angular rule.

    The radial abscissae ``t`` in (-1, 1) are mapped onto (0, inf) by
    ``r = -r_scale * log((1 - t) / 2)`` (``radial_map="log"``) or
    ``r = r_scale * (1 + t) / (1 - t)`` (``radial_map="rational"``).
    Weights include the ``r^2`` Jacobian and the ``4 pi`` solid angle.
    Node ``i * ang_nodes + j`` is radius ``i`` along direction ``j``.
    """
    if r_nodes < 2:
        raise GridError("r_nodes must be >= 2")
    if ang_nodes < 6:
        raise GridError("ang_nodes must be >= 6")
    if not r_scale > 0:
        raise GridError("r_scale must be positive")
    r, wr = _radial_rule(r_nodes, r_scale, radial_map)
    dirs, wa = lebedev_rule(ang_nodes)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (wr[:, None] * (4 * np.pi * wa)[None, :]).reshape(-1)
    params = {"r_nodes": r_nodes, "ang_nodes": ang_nodes, "r_scale": r_scale, "radial_map": radial_map}
    return KGrid(nodes, weights, "spherical-product", params)


def make_box_grid(n: int, L: float, twist: float | Sequence[float] = 0.5) -> KGrid:
    """Plane-wave modes of a periodic box of side ``L``.

    Modes are ``k = (2 pi / L) (j + twist)`` with ``n`` consecutive integers
    ``j`` per axis centred on zero.  The twist keeps ``k = 0`` off the grid
    while sums and differences of modes stay on the reciprocal lattice, so
    box integrals of ``exp(i (k -+ k').x)`` are exact Kronecker deltas.
    Twist components must therefore be multiples of 1/2.  Each node
    carries weight ``(2 pi / L)^3``.
    """
    if n < 1:
        raise GridError("n must be >= 1")
    if not L > 0:
        raise GridError("box side L must be positive")
    tw = np.broadcast_to(np.asarray(twist, dtype=float), (3,))
    if np.any(np.abs(2 * tw - np.round(2 * tw)) > 1e-12):
        raise GridError("box twist components must be multiples of 1/2")
    j = np.arange(n) - n // 2
    dk = 2 * np.pi / L
    jj = np.array(list(itertools.product(j, j, j)), dtype=float)
    nodes = dk * (jj + tw)
    weights = np.full(len(nodes), dk ** 3)
    params = {"n": n, "L": L, "twist": [float(x) for x in tw]}
    return KGrid(nodes, weights, "box-modes", params)


def explicit_grid(nodes, weights) -> KGrid:
    return KGrid(nodes, weights, "explicit-list", {})


def symmetric_grid(half_nodes, half_weights) -> KGrid:
    """Explicit grid closed under ``k -> -k``: node ``2i`` is ``k_i``, node ``2i+1`` is ``-k_i``."""
    half = np.asarray(half_nodes, dtype=float).reshape(-1, 3)
    w = np.asarray(half_weights, dtype=float).reshape(-1)
    nodes = np.empty((2 * len(half), 3))
    nodes[0::2] = half
    nodes[1::2] = -half
    return KGrid(nodes, np.repeat(w, 2), "explicit-list", {"symmetric": True})


def compensated_sum(values) -> float:
    """Correctly rounded float sum, independent of evaluation order."""
    return math.fsum(np.asarray(values, dtype=float).reshape(-1).tolist())


def integrate(grid: KGrid, integrand: Union[Callable, np.ndarray]):
    """Quadrature ``sum_i w_i f(k_i)`` with compensated summation.

    ``integrand`` is either an array of per-node values or a callable mapping
    the ``(n, 3)`` node array to such an array.  Returns ``float`` for real
    integrands and ``complex`` otherwise.
    """
    vals = integrand(grid.nodes) if callable(integrand) else integrand
    vals = np.asarray(vals)
    if vals.shape != (len(grid),):
        raise ValueError(f"integrand has shape {vals.shape}, expected ({len(grid)},)")
    terms = grid.weights * vals
    if np.iscomplexobj(terms):
        return complex(compensated_sum(terms.real), compensated_sum(terms.imag))
    return compensated_sum(terms)


@dataclass(frozen=True, eq=False)
class Profile:
    """Complex amplitude per node: shape ``(n,)`` (scalar) or ``(n, 2)`` (H, V)."""

    grid: KGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        n = len(self.grid)
        if v.shape not in ((n,), (n, 2)):
            raise ValueError(f"profile has shape {v.shape}, expected ({n},) or ({n}, 2)")
        if not np.all(np.isfinite(v)):
            bad = np.flatnonzero(~np.all(np.isfinite(v.reshape(n, -1)), axis=1))[0]
            raise ValueError(f"profile value[{bad}] is not finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_photon(self) -> bool:
        return self.values.ndim == 2

    @classmethod
    def from_function(cls, grid: KGrid, fn: Callable) -> "Profile":
        return cls(grid, fn(grid.nodes))

    def scaled(self, factor: complex) -> "Profile":
        return Profile(self.grid, self.values * factor)

    def to_json(self) -> dict:
        if self.is_photon:
            vals = [{"h": {"re": float(h.real), "im": float(h.imag)},
                     "v": {"re": float(v.real), "im": float(v.imag)}} for h, v in self.values]
        else:
            vals = [{"re": float(v.real), "im": float(v.imag)} for v in self.values]
        out = self.grid.to_json()
        out["values"] = vals
        return out

    @classmethod
    def from_json(cls, data: dict, grid: KGrid | None = None) -> "Profile":
        grid = grid if grid is not None else KGrid.from_json(data)
        vals = data["values"]
        if vals and "h" in vals[0]:
            arr = [[complex(v["h"]["re"], v["h"]["im"]), complex(v["v"]["re"], v["v"]["im"])] for v in vals]
        else:
            arr = [complex(v["re"], v["im"]) for v in vals]
        return cls(grid, arr)


@dataclass(frozen=True, eq=False)
class StateField:
    """One oscillator state per grid node (the wave-vector dependent wave function)."""

    grid: KGrid
    states: tuple
    constants: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        states = tuple(self.states)
        if len(states) != len(self.grid):
            raise ValueError(f"{len(states)} states for {len(self.grid)} nodes")
        kinds = {type(s) for s in states}
        if len(kinds) != 1 or not kinds <= {FockState1, FockState2}:
            raise ValueError("all node states must be FockState1, or all FockState2")
        for i, s in enumerate(states):
            if not is_normalized(s):
                raise ValueError(f"state[{i}] is not normalized (norm {s.norm():.15g})")
        object.__setattr__(self, "states", states)

    @property
    def modes(self) -> int:
        return self.states[0].modes

    @cached_property
    def a_expect(self) -> np.ndarray:
        """``<a>`` per node, shape ``(n,)``, or ``(<a_H>, <a_V>)`` per node, shape ``(n, 2)``."""
        if self.modes == 1:
            out = np.array([expectation(s, A) for s in self.states])
        else:
            out = np.array([[expectation(s, A_H), expectation(s, A_V)] for s in self.states])
        out.setflags(write=False)
        return out

    @cached_property
    def number_expect(self) -> np.ndarray:
        """``<a^† a>`` per node, or ``(<n_H>, <n_V>)`` per node; real."""
        if self.modes == 1:
            out = np.array([expectation(s, number_operator()).real for s in self.states])
        else:
            nh, nv = number_operator("H"), number_operator("V")
            out = np.array([[expectation(s, nh).real, expectation(s, nv).real] for s in self.states])
        out.setflags(write=False)
        return out

    def with_states(self, grid: KGrid, states) -> "StateField":
        return StateField(grid, tuple(states), self.constants)


def coherent_field(profile: Profile, cutoff: int,
                   constants: PhysicalConstants = PhysicalConstants()) -> StateField:
    """Coherent state with amplitude ``F(k_i)`` at every node.

    Scalar profiles give single-mode states, photon profiles give
    ``|F_H, F_V>`` two-mode states.
    """
    states = []
    for i, val in enumerate(profile.values):
        try:
            if profile.is_photon:
                states.append(coherent_state_2(val[0], val[1], cutoff))
            else:
                states.append(coherent_state_1(val, cutoff))
        except TruncationError as exc:
            raise TruncationError(f"node[{i}]: {exc}", exc.required_cutoff) from None
    return StateField(profile.grid, tuple(states), constants)


def vacuum_field(grid: KGrid, cutoff: int, modes: int = 1,
                 constants: PhysicalConstants = PhysicalConstants()) -> StateField:
    vac = FockState1.vacuum(cutoff) if modes == 1 else FockState2.vacuum(cutoff)
    return StateField(grid, (vac,) * len(grid), constants)


def gaussian_profile(grid: KGrid, amplitude: complex = 1.0, width: float = 1.0,
                     center=(0.0, 0.0, 0.0), polarization=None) -> Profile:
    """``amplitude * exp(-|k - center|^2 / (2 width^2))``.

    With ``polarization=(p_H, p_V)`` a photon profile is returned.
    """
    d = grid.nodes - np.asarray(center, dtype=float)
    g = amplitude * np.exp(-np.sum(d * d, axis=1) / (2 * width ** 2))
    if polarization is None:
        return Profile(grid, g)
    p = np.asarray(polarization, dtype=complex)
    return Profile(grid, g[:, None] * p[None, :])
