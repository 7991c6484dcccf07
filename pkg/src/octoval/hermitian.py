"""Octonionic hermitian 2x2 matrices and their real 16x16 shadows.

A hermitian matrix [[a, q], [conj(q), b]] is stored as a length-10 vector
``(a, b, q_0, ..., q_7)``; this is also the fixed basis in which the group
acts on H2(O) (see ``octoval.spin``). Points of O^2 = R^16 are length-16
vectors, first octonion coordinate first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .octonion import UNIT_PAIR, Octonion, oconj, omul, onorm2, random_octonions

HERM_DIM = 10


@dataclass(frozen=True)
class OctoVec2:
    """A column (q1, q2) in O^2."""

    q1: Octonion
    q2: Octonion

    @classmethod
    def from_real(cls, x) -> "OctoVec2":
        x = np.asarray(x, dtype=float)
        if x.shape != (16,):
            raise DomainError("an O^2 vector needs 16 real coordinates")
        return cls(Octonion(x[:8]), Octonion(x[8:]))

    def to_real(self) -> np.ndarray:
        return np.concatenate([self.q1.c, self.q2.c])

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_real()))

    def times(self, x: Octonion) -> "OctoVec2":
        """Right scalar multiplication xi . x = (q1 x, q2 x)."""
        return OctoVec2(self.q1 * x, self.q2 * x)


@dataclass(frozen=True)
class HMatrix2:
    """[[a, q], [conj(q), b]] with a, b real."""

    a: float
    b: float
    q: Octonion

    @classmethod
    def from_vector(cls, v) -> "HMatrix2":
        v = np.asarray(v, dtype=float)
        if v.shape != (HERM_DIM,):
            raise DomainError("hermitian vector must have length 10")
        return cls(float(v[0]), float(v[1]), Octonion(v[2:]))

    @classmethod
    def identity(cls) -> "HMatrix2":
        return cls(1.0, 1.0, Octonion(0.0))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.a, self.b], self.q.c])

    def entries(self) -> np.ndarray:
        """Full matrix as a (2, 2, 8) array of octonions."""
        return herm_to_matrix(self.to_vector())

    def __add__(self, other: "HMatrix2") -> "HMatrix2":
        return HMatrix2.from_vector(self.to_vector() + other.to_vector())

    def __sub__(self, other: "HMatrix2") -> "HMatrix2":
        return HMatrix2.from_vector(self.to_vector() - other.to_vector())

    def __mul__(self, s: float) -> "HMatrix2":
        return HMatrix2.from_vector(self.to_vector() * float(s))

    __rmul__ = __mul__

    def allclose(self, other: "HMatrix2", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_vector(), other.to_vector(), rtol=0, atol=atol))

    def entry_norm(self) -> float:
        """a + b + 2|q| (absolute values on the diagonal)."""
        return abs(self.a) + abs(self.b) + 2.0 * self.q.norm()


# ---------------------------------------------------------------------------
# vectorised kernels on (..., 10) arrays
# ---------------------------------------------------------------------------


def herm_det(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[..., 0] * v[..., 1] - onorm2(v[..., 2:])


def herm_mixed_det(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Polarisation of det: (a1 b2 + b1 a2 - 2 Re(q_u conj(q_v))) / 2."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.einsum("...i,...i->...", u[..., 2:], v[..., 2:])
    return 0.5 * (u[..., 0] * v[..., 1] + u[..., 1] * v[..., 0] - 2.0 * cross)


def herm_quad_form(v: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Re(xi^* A xi) = a|x|^2 + b|y|^2 + 2 Re(q y conj(x))."""
    v = np.asarray(v, dtype=float)
    xi = np.asarray(xi, dtype=float)
    x, y = xi[..., :8], xi[..., 8:]
    cross = omul(omul(v[..., 2:], y), oconj(x))[..., 0]
    return v[..., 0] * onorm2(x) + v[..., 1] * onorm2(y) + 2.0 * cross


def herm_embed(v: np.ndarray) -> np.ndarray:
    """Batched j: (..., 10) -> (..., 16, 16)."""
    v = np.asarray(v, dtype=float)
    # coefficient of x_l y_m in Re(q y conj(x)) is <q, e_l conj(e_m)>
    c = np.einsum("...k,lmk->...lm", v[..., 2:], UNIT_PAIR)
    out = np.zeros(v.shape[:-1] + (16, 16))
    eye = np.eye(8)
    out[..., :8, :8] = v[..., 0, None, None] * eye
    out[..., 8:, 8:] = v[..., 1, None, None] * eye
    out[..., :8, 8:] = c
    out[..., 8:, :8] = np.swapaxes(c, -1, -2)
    return out


def hessian_contract(h: np.ndarray) -> np.ndarray:
    """Octonionic Hessian from a real (..., 16, 16) Hessian.

    Entry (i, j) is sum_{l,m} d^2 f / dx^i_l dx^j_m * e_l conj(e_m), which is
    what the Dirac operators give for a real valued function. The result is
    returned in the (..., 10) layout using the (1, 2) block; use
    ``hessian_asymmetry`` to measure how far the raw matrix is from hermitian.
    """
    h = np.asarray(h, dtype=float)
    a = np.trace(h[..., :8, :8], axis1=-2, axis2=-1)
    b = np.trace(h[..., 8:, 8:], axis1=-2, axis2=-1)
    q12 = np.einsum("...lm,lmk->...k", h[..., :8, 8:], UNIT_PAIR)
    q21 = np.einsum("...lm,lmk->...k", h[..., 8:, :8], UNIT_PAIR)
    q = 0.5 * (q12 + oconj(q21))
    return np.concatenate([a[..., None], b[..., None], q], axis=-1)


def hessian_asymmetry(h: np.ndarray) -> np.ndarray:
    """Largest deviation from hermitian of the raw octonionic Hessian."""
    h = np.asarray(h, dtype=float)
    im11 = np.einsum("...lm,lmk->...k", h[..., :8, :8], UNIT_PAIR)[..., 1:]
    im22 = np.einsum("...lm,lmk->...k", h[..., 8:, 8:], UNIT_PAIR)[..., 1:]
    q12 = np.einsum("...lm,lmk->...k", h[..., :8, 8:], UNIT_PAIR)
    q21 = np.einsum("...lm,lmk->...k", h[..., 8:, :8], UNIT_PAIR)
    parts = [np.abs(im11).max(axis=-1), np.abs(im22).max(axis=-1), np.abs(q12 - oconj(q21)).max(axis=-1)]
    return np.max(np.stack(parts), axis=0)


def herm_min_eig(v: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of j(A), computed numerically from the 16x16 form."""
    return np.linalg.eigvalsh(herm_embed(v))[..., 0]


def herm_to_matrix(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    m = np.zeros(v.shape[:-1] + (2, 2, 8))
    m[..., 0, 0, 0] = v[..., 0]
    m[..., 1, 1, 0] = v[..., 1]
    m[..., 0, 1, :] = v[..., 2:]
    m[..., 1, 0, :] = oconj(v[..., 2:])
    return m


def matrix_to_herm(m: np.ndarray, check: bool = True, atol: float = 1e-9) -> np.ndarray:
    """Inverse of ``herm_to_matrix``; hermitian part is taken."""
    m = np.asarray(m, dtype=float)
    if check:
        dev = max(
            np.abs(m[..., 0, 0, 1:]).max(),
            np.abs(m[..., 1, 1, 1:]).max(),
            np.abs(m[..., 0, 1, :] - oconj(m[..., 1, 0, :])).max(),
        )
        scale = 1.0 + np.abs(m).max()
        if dev > atol * scale:
            raise DomainError(f"matrix is not hermitian (deviation {dev:.3e})")
    q = 0.5 * (m[..., 0, 1, :] + oconj(m[..., 1, 0, :]))
    return np.concatenate([m[..., 0, 0, :1], m[..., 1, 1, :1], q], axis=-1)


def omat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of (..., 2, 2, 8) octonionic matrices (entrywise sums of products)."""
    prods = omul(a[..., :, :, None, :], b[..., None, :, :, :])
    return prods.sum(axis=-3)


def omat_vec(a: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """(..., 2, 2, 8) times a column (..., 2, 8)."""
    return omul(a, xi[..., None, :, :]).sum(axis=-2)


def omat_star(a: np.ndarray) -> np.ndarray:
    return oconj(np.swapaxes(a, -3, -2))


def outer(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """xi eta^* for columns (..., 2, 8)."""
    return omul(xi[..., :, None, :], oconj(eta)[..., None, :, :])


def split(xi: np.ndarray) -> np.ndarray:
    """R^16 -> (2, 8) column."""
    xi = np.asarray(xi, dtype=float)
    return xi.reshape(xi.shape[:-1] + (2, 8))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def _vec(a: HMatrix2 | np.ndarray) -> np.ndarray:
    return a.to_vector() if isinstance(a, HMatrix2) else np.asarray(a, dtype=float)


def _xi(x: OctoVec2 | np.ndarray) -> np.ndarray:
    return x.to_real() if isinstance(x, OctoVec2) else np.asarray(x, dtype=float)


def quad_form(a: HMatrix2, xi: OctoVec2) -> float:
    return float(herm_quad_form(_vec(a), _xi(xi)))


def det(a: HMatrix2) -> float:
    return float(herm_det(_vec(a)))


def mixed_det(a: HMatrix2, b: HMatrix2) -> float:
    return float(herm_mixed_det(_vec(a), _vec(b)))


def nonneg_tolerance(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    size = np.abs(v[..., 0]) + np.abs(v[..., 1]) + 2.0 * np.sqrt(onorm2(v[..., 2:]))
    return 1e-10 * (1.0 + size**2)


def is_positive(a: HMatrix2, strict: bool = True) -> bool:
    """Sylvester-type test: strict mode is a > 0 and det > 0."""
    v = _vec(a)
    d = herm_det(v)
    if strict:
        return bool(v[0] > 0 and d > 0)
    return bool(v[0] >= 0 and v[1] >= 0 and d >= -nonneg_tolerance(v))


def embed_j(a: HMatrix2) -> np.ndarray:
    """Symmetric 16x16 matrix of xi -> Re(xi^* A xi)."""
    return herm_embed(_vec(a))


def project_theta(b: np.ndarray, atol: float = 1e-12) -> HMatrix2:
    """Left inverse of ``embed_j``: the constant octonionic Hessian of xi^T B xi over 16.

    The Hessian of the quadratic form xi^T B xi is taken in closed form
    (real Hessian 2B). Entries are *not* conjugated: with the Hessian built
    from the two Dirac operators this is the orientation for which
    ``project_theta(embed_j(A)) == A`` and the sphere-average identity hold.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (16, 16):
        raise DomainError("expected a 16x16 matrix")
    if np.abs(b - b.T).max() > atol * (1.0 + np.abs(b).max()):
        raise DomainError("matrix is not symmetric")
    return HMatrix2.from_vector(project_theta_vec(b))


def project_theta_vec(b: np.ndarray) -> np.ndarray:
    """Batched ``project_theta`` without validation: (..., 16, 16) -> (..., 10)."""
    b = np.asarray(b, dtype=float)
    return hessian_contract(2.0 * b) / 16.0


# ---------------------------------------------------------------------------
# random sampling
# ---------------------------------------------------------------------------


def random_hermitian(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = () if size is None else (size,)
    ab = rng.uniform(-1.0, 1.0, size=shape + (2,))
    return np.concatenate([ab, random_octonions(rng, shape)], axis=-1)


def random_positive(rng: np.random.Generator, size: int | None = None, columns: int = 3) -> np.ndarray:
    """Sum of ``columns`` rank-one matrices xi xi^*, xi with uniform coefficients."""
    shape = () if size is None else (size,)
    xi = rng.uniform(-1.0, 1.0, size=shape + (columns, 2, 8))
    m = outer(xi, xi).sum(axis=-4)
    return matrix_to_herm(m, check=False)


def random_octovec(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = () if size is None else (size,)
    return rng.uniform(-1.0, 1.0, size=shape + (16,))


def sample_s7(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform points on the unit sphere of O (normalised Gaussians)."""
    g = rng.standard_normal((n, 8))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def scale_column(xi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """xi . x for xi in R^16 (or batch) and octonions x (..., 8)."""
    col = split(xi)
    return omul(col, x[..., None, :]).reshape(np.broadcast_shapes(col.shape[:-2], x.shape[:-1]) + (16,))


def sphere_average_form(b: np.ndarray, xi: np.ndarray, n: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo mean of x -> b(xi . x) over x uniform on S^7, with its standard error."""
    x = sample_s7(rng, n)
    pts = scale_column(np.asarray(xi, float), x)
    vals = np.einsum("ni,ij,nj->n", pts, b, pts)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


def mixed_det_gram() -> np.ndarray:
    """Gram matrix of the mixed determinant in the (a, b, q_0..q_7) basis."""
    eye = np.eye(HERM_DIM)
    return herm_mixed_det(eye[:, None, :], eye[None, :, :])
