"""Truncated Fock-space algebra for one- and two-mode harmonic oscillators.

States are stored as dense coefficient arrays over the number basis
``|0>, ..., |cutoff>`` (one mode) or ``|m, n>`` with ``0 <= m, n <= cutoff``
(two modes, row-major in ``(m, n)``).  Ladder operators follow the
orthonormal convention ``a|n> = sqrt(n)|n-1>``.  Creation on ``|cutoff>``
leaves the truncated space and that component is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

__all__ = [
    "FockState1",
    "FockState2",
    "LadderOp",
    "TruncationError",
    "A",
    "A_DAG",
    "A_H",
    "A_H_DAG",
    "A_V",
    "A_V_DAG",
    "coherent_state_1",
    "coherent_state_2",
    "required_cutoff",
    "apply_ladder",
    "apply_operator",
    "expectation",
    "ladder_matrix",
    "operator_matrix",
    "number_operator",
    "stokes_operators",
    "mode_rotation_generator",
    "mode_rotation_unitary",
    "apply_unitary",
    "state_to_json",
    "state_from_json",
    "is_normalized",
    "random_state",
]

# Probability mass a coherent state may lose to truncation before we refuse it.
TAIL_MASS_LIMIT = 1e-10
_NORM_TOL = 1e-12


class TruncationError(ValueError):
    """Raised when a coherent amplitude is too large for the requested cutoff."""

    def __init__(self, message: str, required_cutoff: int):
        super().__init__(message)
        self.required_cutoff = required_cutoff


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FockState1:
    """Single-mode state ``sum_n c_n |n>``, truncated at ``cutoff``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size < 2:
            raise ValueError("a single-mode state needs cutoff >= 1")
        if not np.all(np.isfinite(c)):
            raise ValueError("state coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def cutoff(self) -> int:
        return self.coeffs.size - 1

    @property
    def modes(self) -> int:
        return 1

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "FockState1":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockState1(self.coeffs / nrm)

    def support(self) -> int:
        """Largest occupation number with a nonzero amplitude (-1 for zero)."""
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else -1

    @classmethod
    def number(cls, n: int, cutoff: int) -> "FockState1":
        if not 0 <= n <= cutoff:
            raise ValueError(f"number state |{n}> outside cutoff {cutoff}")
        c = np.zeros(cutoff + 1, dtype=complex)
        c[n] = 1.0
        return cls(c)

    @classmethod
    def vacuum(cls, cutoff: int) -> "FockState1":
        return cls.number(0, cutoff)


@dataclass(frozen=True, eq=False)
class FockState2:
    """Two-mode state ``sum_{m,n} c_{mn} |m, n>``; axis 0 is H, axis 1 is V."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            d = math.isqrt(c.size)
            if d * d != c.size:
                raise ValueError("flat two-mode coefficients must have square length")
            c = c.reshape(d, d)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("two-mode coefficients must be a (d, d) array with d >= 2")
        if not np.all(np.isfinite(c)):
            raise ValueError("state coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def cutoff(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def modes(self) -> int:
        return 2

    @property
    def vector(self) -> np.ndarray:
        """Row-major flattening, index ``m * (cutoff + 1) + n``."""
        return self.coeffs.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "FockState2":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockState2(self.coeffs / nrm)

    def support(self) -> int:
        """Largest total number ``m + n`` with a nonzero amplitude (-1 for zero)."""
        m, n = np.nonzero(self.coeffs)
        return int((m + n).max()) if m.size else -1

    @classmethod
    def number(cls, m: int, n: int, cutoff: int) -> "FockState2":
        if not (0 <= m <= cutoff and 0 <= n <= cutoff):
            raise ValueError(f"number state |{m},{n}> outside cutoff {cutoff}")
        c = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        c[m, n] = 1.0
        return cls(c)

    @classmethod
    def vacuum(cls, cutoff: int) -> "FockState2":
        return cls.number(0, 0, cutoff)


FockState = Union[FockState1, FockState2]


@dataclass(frozen=True)
class LadderOp:
    mode: str  # "single", "H" or "V"
    kind: str  # "annihilate" or "create"

    def __post_init__(self):
        if self.mode not in ("single", "H", "V"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.kind not in ("annihilate", "create"):
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def dagger(self) -> "LadderOp":
        return LadderOp(self.mode, "create" if self.kind == "annihilate" else "annihilate")

    def __repr__(self):
        sym = {"single": "a", "H": "a_H", "V": "a_V"}[self.mode]
        return sym + ("†" if self.kind == "create" else "")


A = LadderOp("single", "annihilate")
A_DAG = LadderOp("single", "create")
A_H = LadderOp("H", "annihilate")
A_H_DAG = LadderOp("H", "create")
A_V = LadderOp("V", "annihilate")
A_V_DAG = LadderOp("V", "create")


def required_cutoff(z: complex) -> int:
    """Smallest cutoff accepted for a coherent amplitude ``z``.

    Two conditions: ``|z|^2 <= cutoff / 4`` and the Poisson mass above the
    cutoff stays below ``TAIL_MASS_LIMIT``.
    """
    mu = abs(z) ** 2
    c = max(1, math.ceil(4 * mu))
    while gammainc(c + 1, mu) > TAIL_MASS_LIMIT:
        c += 1
    return c


def _coherent_coeffs(z: complex, cutoff: int) -> np.ndarray:
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if not np.isfinite(z):
        raise ValueError("coherent amplitude must be finite")
    need = required_cutoff(z)
    if cutoff < need:
        raise TruncationError(
            f"coherent amplitude |z|^2 = {abs(z) ** 2:.6g} needs cutoff >= {need}, got {cutoff}",
            need,
        )
    c = np.empty(cutoff + 1, dtype=complex)
    c[0] = math.exp(-0.5 * abs(z) ** 2)
    # recurrence c_n = c_{n-1} z / sqrt(n) avoids z**n / sqrt(n!) overflow
    for n in range(1, cutoff + 1):
        c[n] = c[n - 1] * z / math.sqrt(n)
    return c / np.linalg.norm(c)


def coherent_state_1(z: complex, cutoff: int) -> FockState1:
    """Truncated, renormalized coherent state ``|z>``.

    Raises
    ------
    TruncationError
        If ``cutoff`` is too small for ``z``; ``required_cutoff`` on the
        exception names the smallest acceptable value.
    """
    return FockState1(_coherent_coeffs(complex(z), cutoff))


def coherent_state_2(z: complex, w: complex, cutoff: int) -> FockState2:
    """Product ``|z>_H |w>_V`` of two truncated coherent states."""
    return FockState2(np.outer(_coherent_coeffs(complex(z), cutoff),
                               _coherent_coeffs(complex(w), cutoff)))


def _shift_annihilate(c: np.ndarray, axis: int) -> np.ndarray:
    d = c.shape[axis]
    sq = np.sqrt(np.arange(1, d, dtype=float))
    out = np.zeros_like(c)
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    src[axis] = slice(1, d)
    dst[axis] = slice(0, d - 1)
    shape = [1] * c.ndim
    shape[axis] = d - 1
    out[tuple(dst)] = c[tuple(src)] * sq.reshape(shape)
    return out


def _shift_create(c: np.ndarray, axis: int) -> np.ndarray:
    d = c.shape[axis]
    sq = np.sqrt(np.arange(1, d, dtype=float))
    out = np.zeros_like(c)
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    src[axis] = slice(0, d - 1)
    dst[axis] = slice(1, d)
    shape = [1] * c.ndim
    shape[axis] = d - 1
    out[tuple(dst)] = c[tuple(src)] * sq.reshape(shape)
    return out


def _axis_for(state: FockState, op: LadderOp) -> int:
    if state.modes == 1:
        if op.mode != "single":
            raise ValueError(f"{op!r} acts on two-mode states only")
        return 0
    if op.mode == "single":
        raise ValueError("single-mode operator applied to a two-mode state")
    return 0 if op.mode == "H" else 1


def apply_ladder(state: FockState, op: LadderOp) -> FockState:
    """Apply one ladder operator; the result is not renormalized."""
    axis = _axis_for(state, op)
    shift = _shift_annihilate if op.kind == "annihilate" else _shift_create
    return type(state)(shift(state.coeffs, axis))


OperatorExpr = Union[LadderOp, Sequence[LadderOp], Sequence[tuple], np.ndarray]


def _as_terms(op: OperatorExpr) -> list[tuple[complex, tuple[LadderOp, ...]]]:
    """Normalize an operator expression into ``[(coefficient, product), ...]``.

    Accepted forms: a single ``LadderOp``; a sequence of ``LadderOp`` read as
    an operator product (rightmost acts first); a sequence of
    ``(coefficient, product)`` pairs read as a sum.
    """
    if isinstance(op, LadderOp):
        return [(1.0, (op,))]
    op = list(op)
    if all(isinstance(o, LadderOp) for o in op):
        return [(1.0, tuple(op))]
    terms = []
    for term in op:
        coeff, prod = term
        if isinstance(prod, LadderOp):
            prod = (prod,)
        terms.append((complex(coeff), tuple(prod)))
    return terms


def apply_operator(state: FockState, op: OperatorExpr) -> np.ndarray:
    """Coefficient array of ``O|psi>`` (same shape as ``state.coeffs``)."""
    if isinstance(op, np.ndarray):
        return (op @ state.vector).reshape(state.coeffs.shape)
    out = np.zeros_like(state.coeffs)
    for coeff, prod in _as_terms(op):
        cur = state
        for lad in reversed(prod):
            cur = apply_ladder(cur, lad)
        out = out + coeff * cur.coeffs
    return out


def expectation(state: FockState, op: OperatorExpr) -> complex:
    """``<psi|O|psi>`` evaluated by direct action on the truncated state."""
    return complex(np.vdot(state.vector, apply_operator(state, op).reshape(-1)))


@lru_cache(maxsize=64)
def _ladder_matrix_cached(mode: str, kind: str, cutoff: int) -> np.ndarray:
    d = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    single = a if kind == "annihilate" else a.T.copy()
    if mode == "single":
        return _frozen(single)
    eye = np.eye(d, dtype=complex)
    full = np.kron(single, eye) if mode == "H" else np.kron(eye, single)
    return _frozen(full)


def ladder_matrix(op: LadderOp, cutoff: int) -> np.ndarray:
    """Dense matrix of ``op`` on the truncated basis (read-only)."""
    return _ladder_matrix_cached(op.mode, op.kind, cutoff)


def operator_matrix(op: OperatorExpr, cutoff: int, modes: int) -> np.ndarray:
    """Dense matrix of an operator expression built from truncated ladder matrices."""
    dim = (cutoff + 1) ** modes
    if isinstance(op, np.ndarray):
        return op
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, prod in _as_terms(op):
        mat = np.eye(dim, dtype=complex)
        for lad in prod:
            if (lad.mode == "single") != (modes == 1):
                raise ValueError(f"{lad!r} does not act on {modes}-mode states")
            mat = mat @ ladder_matrix(lad, cutoff)
        out += coeff * mat
    return out


def number_operator(mode: str = "single") -> list:
    lad = LadderOp(mode, "annihilate")
    return [lad.dagger, lad]


def stokes_operators() -> dict[str, list]:
    """Stokes operators S0..S3 as sums of bilinear ladder products."""
    return {
        "S0": [(1, (A_H_DAG, A_H)), (1, (A_V_DAG, A_V))],
        "S1": [(1, (A_H_DAG, A_V)), (1, (A_V_DAG, A_H))],
        "S2": [(1j, (A_V_DAG, A_H)), (-1j, (A_H_DAG, A_V))],
        "S3": [(1, (A_H_DAG, A_H)), (-1, (A_V_DAG, A_V))],
    }


@lru_cache(maxsize=16)
def _generator_cached(cutoff: int) -> np.ndarray:
    gen = (ladder_matrix(A_H_DAG, cutoff) @ ladder_matrix(A_V, cutoff)
           - ladder_matrix(A_V_DAG, cutoff) @ ladder_matrix(A_H, cutoff))
    return _frozen(gen)


def mode_rotation_generator(cutoff: int) -> np.ndarray:
    """Anti-Hermitian ``a_H^† a_V - a_V^† a_H`` on the two-mode truncated space."""
    return _generator_cached(cutoff)


def mode_rotation_unitary(gamma: float, cutoff: int) -> np.ndarray:
    """Unitary ``U = exp(gamma (a_H^† a_V - a_V^† a_H))``.

    ``U a_H U^† = cos(gamma) a_H - sin(gamma) a_V`` and
    ``U a_V U^† = sin(gamma) a_H + cos(gamma) a_V`` hold exactly on states
    with total number at most ``cutoff - 1``.  The generator conserves
    ``n_H + n_V``, so ``U`` is block diagonal in total number.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    return expm(float(gamma) * mode_rotation_generator(cutoff))


def apply_unitary(state: FockState2, u: np.ndarray) -> FockState2:
    return FockState2(u @ state.vector)


def state_to_json(state: FockState) -> dict:
    """Sparse JSON record: ``(n, re, im)`` or ``(m, n, re, im)`` per nonzero amplitude."""
    records = []
    if state.modes == 1:
        for n in np.flatnonzero(state.coeffs):
            c = state.coeffs[n]
            records.append([int(n), float(c.real), float(c.imag)])
    else:
        for m, n in zip(*np.nonzero(state.coeffs)):
            c = state.coeffs[m, n]
            records.append([int(m), int(n), float(c.real), float(c.imag)])
    return {"modes": state.modes, "cutoff": state.cutoff, "coeffs": records}


def state_from_json(data: dict) -> FockState:
    cutoff = int(data["cutoff"])
    modes = int(data.get("modes", 2))
    if modes == 1:
        c = np.zeros(cutoff + 1, dtype=complex)
        for n, re, im in data["coeffs"]:
            c[int(n)] = complex(re, im)
        return FockState1(c)
    c = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for m, n, re, im in data["coeffs"]:
        c[int(m), int(n)] = complex(re, im)
    return FockState2(c)


def is_normalized(state: FockState, tol: float = _NORM_TOL) -> bool:
    return abs(state.norm() - 1.0) <= tol


def random_state(rng: np.random.Generator, cutoff: int, modes: int = 1,
                 support: int | None = None) -> FockState:
    """Normalized state with i.i.d. complex Gaussian amplitudes.

    ``support`` limits the occupied numbers (total number for two modes).
    """
    d = cutoff + 1
    shape = (d,) if modes == 1 else (d, d)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if support is not None:
        if modes == 1:
            c[support + 1:] = 0
        else:
            m, n = np.indices(shape)
            c[m + n > support] = 0
    cls = FockState1 if modes == 1 else FockState2
    return cls(c).normalized()
