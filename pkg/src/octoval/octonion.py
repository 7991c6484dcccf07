"""Octonion arithmetic.

Two layers live here. ``Octonion`` is a small value class for interactive
use and for the algebraic identity checks. The module-level array functions
(``omul``, ``oconj``, ...) operate on arrays whose last axis has length 8 and
are what the Monte-Carlo code uses.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import DomainError

# Cyclically oriented triples (i, j, k) with e_i e_j = e_k.
FANO_TRIPLES: tuple[tuple[int, int, int], ...] = (
    (1, 2, 4),
    (2, 3, 5),
    (3, 4, 6),
    (4, 5, 7),
    (5, 6, 1),
    (6, 7, 2),
    (7, 1, 3),
)

# Row i, column j holds e_i e_j as a signed index (-0 is not needed: the
# diagonal entries are -1, encoded as (-1, 0)).
_TABLE_ROWS = (
    ("-0", "+4", "+7", "-2", "+6", "-5", "-3"),
    ("-4", "-0", "+5", "+1", "-3", "+7", "-6"),
    ("-7", "-5", "-0", "+6", "+2", "-4", "+1"),
    ("+2", "-1", "-6", "-0", "+7", "+3", "-5"),
    ("-6", "+3", "-2", "-7", "-0", "+1", "+4"),
    ("+5", "-7", "+4", "-3", "-1", "-0", "+2"),
    ("+3", "+6", "-1", "+5", "-4", "-2", "-0"),
)


def _parse_entry(entry: str) -> tuple[int, int]:
    return (1 if entry[0] == "+" else -1), int(entry[1:])


def basis_table() -> dict[tuple[int, int], tuple[int, int]]:
    """Return the transcribed table as ``{(i, j): (sign, k)}`` for 1 <= i, j <= 7."""
    table = {}
    for i, row in enumerate(_TABLE_ROWS, start=1):
        for j, entry in enumerate(row, start=1):
            table[(i, j)] = _parse_entry(entry)
    return table


def _table_from_fano() -> dict[tuple[int, int], tuple[int, int]]:
    table = {(i, i): (-1, 0) for i in range(1, 8)}
    for i, j, k in FANO_TRIPLES:
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            table[(a, b)] = (1, c)
            table[(b, a)] = (-1, c)
    return table


def _build_structure_constants() -> np.ndarray:
    table = basis_table()
    if table != _table_from_fano():
        raise AssertionError("multiplication table disagrees with the Fano triples")
    mult = np.zeros((8, 8, 8))
    for i in range(8):
        mult[0, i, i] = 1.0
        mult[i, 0, i] = 1.0
    for (i, j), (sign, k) in table.items():
        mult[i, j, k] = sign
    return mult


# MULT[i, j, k] is the coefficient of e_k in e_i e_j.
MULT = _build_structure_constants()
MULT.setflags(write=False)

_CONJ_SIGNS = np.array([1.0, -1, -1, -1, -1, -1, -1, -1])


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------


def omul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Octonion product of broadcastable arrays with trailing axis 8."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    outer = a[..., :, None] * b[..., None, :]
    return np.tensordot(outer, MULT, axes=([-2, -1], [0, 1]))


def oconj(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float) * _CONJ_SIGNS


def onorm2(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return np.einsum("...i,...i->...", a, a)


def onorm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(onorm2(a))


def oinv(a: np.ndarray) -> np.ndarray:
    n2 = onorm2(a)
    if np.any(n2 == 0.0):
        raise DomainError("zero octonion has no inverse")
    return oconj(a) / np.asarray(n2)[..., None]


def ore(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float)[..., 0]


def oinner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Scalar product Re(a conj(b)), which is the Euclidean dot product."""
    return np.einsum("...i,...i->...", np.asarray(a, float), np.asarray(b, float))


def oassociator(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return omul(omul(a, b), c) - omul(a, omul(b, c))


def left_matrix(u: np.ndarray) -> np.ndarray:
    """8x8 real matrix of x -> u x."""
    return np.einsum("i,ijk->kj", np.asarray(u, float), MULT)


def right_matrix(u: np.ndarray) -> np.ndarray:
    """8x8 real matrix of x -> x u."""
    return np.einsum("j,ijk->ki", np.asarray(u, float), MULT)


def basis(i: int) -> np.ndarray:
    e = np.zeros(8)
    e[i] = 1.0
    return e


# coefficient of e_k in e_l conj(e_m); used to contract real Hessians.
UNIT_PAIR = np.einsum("lak,am->lmk", MULT, np.diag(_CONJ_SIGNS))
UNIT_PAIR.setflags(write=False)


def random_octonions(rng: np.random.Generator, size: int | tuple[int, ...] = ()) -> np.ndarray:
    """Coefficients i.i.d. uniform on [-1, 1]."""
    shape = (size,) if isinstance(size, int) else tuple(size)
    return rng.uniform(-1.0, 1.0, size=shape + (8,))


# ---------------------------------------------------------------------------
# value class
# ---------------------------------------------------------------------------


class Octonion:
    """An octonion ``sum c[i] e_i`` with ``e_0 = 1``."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[float] | np.ndarray | float = 0.0):
        if np.isscalar(coeffs):
            c = np.zeros(8)
            c[0] = float(coeffs)  # type: ignore[arg-type]
        else:
            c = np.array(coeffs, dtype=float).reshape(-1)
            if c.shape != (8,):
                raise DomainError(f"octonion needs 8 coefficients, got {c.shape[0]}")
        self.c = c

    @classmethod
    def unit(cls, i: int) -> "Octonion":
        return cls(basis(i))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Octonion":
        return cls(random_octonions(rng))

    @property
    def re(self) -> float:
        return float(self.c[0])

    def conj(self) -> "Octonion":
        return Octonion(oconj(self.c))

    def norm(self) -> float:
        return float(np.sqrt(self.c @ self.c))

    def inverse(self) -> "Octonion":
        return Octonion(oinv(self.c))

    def __add__(self, other):
        return Octonion(self.c + _coerce(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return Octonion(self.c - _coerce(other).c)

    def __rsub__(self, other):
        return Octonion(_coerce(other).c - self.c)

    def __neg__(self):
        return Octonion(-self.c)

    def __mul__(self, other):
        if np.isscalar(other):
            return Octonion(self.c * float(other))
        return Octonion(omul(self.c, _coerce(other).c))

    def __rmul__(self, other):
        if np.isscalar(other):
            return Octonion(self.c * float(other))
        return Octonion(omul(_coerce(other).c, self.c))

    def __truediv__(self, scalar: float):
        return Octonion(self.c / float(scalar))

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Octonion, int, float)):
            return NotImplemented
        return bool(np.array_equal(self.c, _coerce(other).c))

    def __hash__(self):
        return hash(tuple(self.c))

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.c, _coerce(other).c, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        terms = [f"{v:+.6g}*e{i}" for i, v in enumerate(self.c) if v != 0.0]
        return "Octonion(" + (" ".join(terms) if terms else "0") + ")"


def _coerce(x) -> Octonion:
    if isinstance(x, Octonion):
        return x
    if np.isscalar(x):
        return Octonion(float(x))
    return Octonion(x)


def mul(a: Octonion, b: Octonion) -> Octonion:
    return _coerce(a) * _coerce(b)


def conj(a: Octonion) -> Octonion:
    return _coerce(a).conj()


def norm(a: Octonion) -> float:
    return _coerce(a).norm()


def inverse(a: Octonion) -> Octonion:
    return _coerce(a).inverse()


def associator(a: Octonion, b: Octonion, c: Octonion) -> Octonion:
    """Return ``(ab)c - a(bc)``."""
    return Octonion(oassociator(_coerce(a).c, _coerce(b).c, _coerce(c).c))
