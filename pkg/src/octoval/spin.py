"""sl2(O) as a bracket closure in gl(16, R), its action on H2(O), Spin(9) sampling
and the octonionic Hopf map.

Every Lie algebra element is carried as a pair: ``rep16`` acts on O^2 = R^16 and
``repH`` acts on H2(O) = R^10 in the basis {diag(1,0), diag(0,1), off-diagonal
e_0..e_7}. Brackets are taken on both components at once, so the pair stays a
representation without ever having to reconstruct repH from rep16.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, NumericalFailure
from .hermitian import (
    HERM_DIM,
    HMatrix2,
    OctoVec2,
    herm_to_matrix,
    matrix_to_herm,
    omat_mul,
    omat_star,
    outer,
    split,
)
from .octonion import left_matrix, oinv, onorm2

RANK_TOL = 1e-9
MAX_ROUNDS = 10
SL2_DIM = 45
SPIN9_DIM = 36


@dataclass(frozen=True)
class TracelessOctoMatrix:
    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray

    def __post_init__(self):
        for name in ("m11", "m12", "m21", "m22"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (8,):
                raise DomainError(f"{name} must be an octonion (8 coefficients)")
            object.__setattr__(self, name, v)
        if np.any(self.m11 + self.m22 != 0.0):
            raise DomainError("matrix is not traceless")

    @classmethod
    def from_entries(cls, m: np.ndarray) -> "TracelessOctoMatrix":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def random(cls, rng: np.random.Generator) -> "TracelessOctoMatrix":
        m = rng.uniform(-1.0, 1.0, size=(3, 8))
        return cls(m[0], m[1], m[2], -m[0])

    def entries(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])


@dataclass(frozen=True)
class LieElement:
    rep16: np.ndarray
    repH: np.ndarray

    def bracket(self, other: "LieElement") -> "LieElement":
        return LieElement(
            self.rep16 @ other.rep16 - other.rep16 @ self.rep16,
            self.repH @ other.repH - other.repH @ self.repH,
        )

    def __add__(self, other: "LieElement") -> "LieElement":
        return LieElement(self.rep16 + other.rep16, self.repH + other.repH)

    def __mul__(self, s: float) -> "LieElement":
        return LieElement(self.rep16 * s, self.repH * s)

    __rmul__ = __mul__

    def exp(self) -> "GroupElement":
        return GroupElement(expm(self.rep16), expm(self.repH))


@dataclass(frozen=True)
class GroupElement:
    g16: np.ndarray
    gH: np.ndarray

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(np.eye(16), np.eye(HERM_DIM))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.g16 @ other.g16, self.gH @ other.gH)

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.g16), np.linalg.inv(self.gH))

    def act_vec(self, xi: np.ndarray) -> np.ndarray:
        """g16 xi for xi of shape (..., 16)."""
        return np.asarray(xi, float) @ self.g16.T

    def act_herm(self, v: np.ndarray) -> np.ndarray:
        """gH A for A in the (..., 10) layout."""
        return np.asarray(v, float) @ self.gH.T

    def act_sym(self, b: np.ndarray) -> np.ndarray:
        """B -> g^-T B g^-1: the form xi -> b(g^-1 xi)."""
        ginv = np.linalg.inv(self.g16)
        return ginv.T @ b @ ginv

    def act_point(self, v: HMatrix2) -> HMatrix2:
        return HMatrix2.from_vector(self.act_herm(v.to_vector()))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def block_rep16(entries: np.ndarray) -> np.ndarray:
    """16x16 matrix of xi -> M xi for a (2, 2, 8) octonionic matrix."""
    out = np.zeros((16, 16))
    for r in range(2):
        for c in range(2):
            out[8 * r : 8 * r + 8, 8 * c : 8 * c + 8] = left_matrix(entries[r, c])
    return out


def herm_action(entries: np.ndarray) -> np.ndarray:
    """10x10 matrix of X -> -M^* X - X M on H2(O)."""
    m = np.asarray(entries, float)
    ms = omat_star(m)
    cols = []
    for v in np.eye(HERM_DIM):
        x = herm_to_matrix(v)
        y = -omat_mul(ms, x) - omat_mul(x, m)
        cols.append(matrix_to_herm(y))
    return np.array(cols).T


def operator16(m: TracelessOctoMatrix) -> LieElement:
    e = m.entries()
    return LieElement(block_rep16(e), herm_action(e))


def traceless_generators() -> list[LieElement]:
    """E12(e_i), E21(e_i), diag(e_i, -e_i); diag(1, -1) is the i = 0 case."""
    gens = []
    zero = np.zeros(8)
    for i in range(8):
        e = np.zeros(8)
        e[i] = 1.0
        gens.append(operator16(TracelessOctoMatrix(zero, e, zero, zero)))
        gens.append(operator16(TracelessOctoMatrix(zero, zero, e, zero)))
        gens.append(operator16(TracelessOctoMatrix(e, zero, zero, -e)))
    return gens


# ---------------------------------------------------------------------------
# closure
# ---------------------------------------------------------------------------


def _orthonormalize(r16: np.ndarray, rh: np.ndarray, tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis (Frobenius on rep16) of the span of the rows, repH carried linearly."""
    if r16.shape[0] == 0:
        return r16, rh
    u, s, vt = np.linalg.svd(r16, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return r16[:0], rh[:0]
    keep = s > tol * s[0]
    coeff = (u[:, keep] / s[keep]).T
    return vt[keep], coeff @ rh


def _stack(elems: list[LieElement]) -> tuple[np.ndarray, np.ndarray]:
    if not elems:
        return np.zeros((0, 256)), np.zeros((0, HERM_DIM * HERM_DIM))
    return (
        np.array([e.rep16.ravel() for e in elems]),
        np.array([e.repH.ravel() for e in elems]),
    )


def _unstack(r16: np.ndarray, rh: np.ndarray) -> list[LieElement]:
    return [LieElement(a.reshape(16, 16), b.reshape(HERM_DIM, HERM_DIM)) for a, b in zip(r16, rh)]


def lie_closure(generators: list[LieElement], tol: float = RANK_TOL, max_rounds: int = MAX_ROUNDS) -> list[LieElement]:
    r16, rh = _orthonormalize(*_stack(generators), tol=tol)
    for _ in range(max_rounds):
        n = r16.shape[0]
        if n == 0:
            return []
        a16 = r16.reshape(n, 16, 16)
        ah = rh.reshape(n, HERM_DIM, HERM_DIM)
        i, j = np.triu_indices(n, k=1)
        c16 = (a16[i] @ a16[j] - a16[j] @ a16[i]).reshape(len(i), -1)
        ch = (ah[i] @ ah[j] - ah[j] @ ah[i]).reshape(len(i), -1)
        new16, newh = _orthonormalize(np.vstack([r16, c16]), np.vstack([rh, ch]), tol=tol)
        if new16.shape[0] == n:
            return _unstack(r16, rh)
        r16, rh = new16, newh
    raise NumericalFailure(f"bracket closure did not stabilise in {max_rounds} rounds")


def span_residual(basis: list[LieElement], x16: np.ndarray) -> float:
    """Frobenius distance of x16 from the span of the (orthonormal) basis."""
    b = np.array([e.rep16.ravel() for e in basis])
    v = np.asarray(x16, float).ravel()
    return float(np.linalg.norm(v - b.T @ (b @ v)))


def compact_basis(full: list[LieElement], tol: float = 1e-9) -> list[LieElement]:
    """Orthonormal basis of span(full) intersected with the antisymmetric matrices."""
    r16, rh = _stack(full)
    n = r16.shape[0]
    sym = np.array([(m + m.T).ravel() for m in r16.reshape(n, 16, 16)]).T
    _, s, vt = np.linalg.svd(sym, full_matrices=True)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    null = vt[rank:]
    if n == SL2_DIM and null.shape[0] != SPIN9_DIM:
        raise NumericalFailure(f"compact part has dimension {null.shape[0]}, expected {SPIN9_DIM}")
    return _unstack(null @ r16, null @ rh)


def joint_rank(elems: list[LieElement], tol: float = RANK_TOL) -> tuple[int, int]:
    """(rank of rep16 parts, rank of concatenated (rep16, repH) parts)."""
    r16, rh = _stack(elems)

    def rank(a):
        s = np.linalg.svd(a, compute_uv=False)
        return int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0

    return rank(r16), rank(np.hstack([r16, rh]))


@dataclass(frozen=True)
class SpinContext:
    full: tuple[LieElement, ...]
    compact: tuple[LieElement, ...]

    def element(self, coeffs: np.ndarray, compact: bool = True) -> LieElement:
        basis = self.compact if compact else self.full
        coeffs = np.asarray(coeffs, float)
        if coeffs.shape != (len(basis),):
            raise DomainError(f"expected {len(basis)} coefficients")
        r16 = np.einsum("k,kij->ij", coeffs, np.array([e.rep16 for e in basis]))
        rh = np.einsum("k,kij->ij", coeffs, np.array([e.repH for e in basis]))
        return LieElement(r16, rh)

    def sample_spin9(self, seed=None, scale: float = 1.0) -> GroupElement:
        rng = np.random.default_rng(seed)
        return self.element(scale * rng.standard_normal(len(self.compact))).exp()

    def sample_sl2(self, seed=None, scale: float = 0.5) -> GroupElement:
        """exp of a random element of the full algebra; coefficients uniform in [-scale, scale]."""
        if scale > 0.5:
            raise DomainError("non-compact sampling scale must be at most 0.5")
        rng = np.random.default_rng(seed)
        return self.element(rng.uniform(-scale, scale, len(self.full)), compact=False).exp()


@lru_cache(maxsize=1)
def spin_context() -> SpinContext:
    full = lie_closure(traceless_generators())
    if len(full) != SL2_DIM:
        raise NumericalFailure(f"closure has dimension {len(full)}, expected {SL2_DIM}")
    return SpinContext(tuple(full), tuple(compact_basis(full)))


def sample_spin9(seed=None) -> GroupElement:
    return spin_context().sample_spin9(seed)


# ---------------------------------------------------------------------------
# Hopf map and charts of OP^1
# ---------------------------------------------------------------------------


def hopf_class_vec(xi: np.ndarray) -> np.ndarray:
    """xi xi^* / |xi|^2 in the (..., 10) layout."""
    xi = np.asarray(xi, float)
    n2 = np.einsum("...i,...i->...", xi, xi)
    if np.any(n2 == 0.0):
        raise DomainError("the zero vector has no Hopf class")
    col = split(xi / np.sqrt(n2)[..., None])
    return matrix_to_herm(outer(col, col), check=False)


def hopf_class(xi: OctoVec2 | np.ndarray) -> HMatrix2:
    v = xi.to_real() if isinstance(xi, OctoVec2) else xi
    return HMatrix2.from_vector(hopf_class_vec(v))


def chart_representative(xi: np.ndarray) -> np.ndarray:
    """Representative (x y^-1, 1) or (1, y x^-1) of the class of xi, whichever chart is better conditioned."""
    xi = np.asarray(xi, float)
    x, y = xi[:8], xi[8:]
    nx, ny = onorm2(x), onorm2(y)
    if nx == 0.0 and ny == 0.0:
        raise DomainError("the zero vector has no Hopf class")
    from .octonion import omul

    one = np.zeros(8)
    one[0] = 1.0
    if ny >= nx:
        return np.concatenate([omul(x, oinv(y)), one])
    return np.concatenate([one, omul(y, oinv(x))])
