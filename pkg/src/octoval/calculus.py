"""Scalar fields on O^2 = R^16, Dirac operators, octonionic Hessians,
restriction to octonionic lines, plurisubharmonicity checks and mollification.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import beta as beta_dist
from scipy.stats import norm as norm_dist
from scipy.stats import qmc

from .errors import DomainError, NumericalFailure, PreconditionError
from .hermitian import HMatrix2, hessian_asymmetry, hessian_contract, herm_embed, scale_column
from .octonion import MULT, UNIT_PAIR
from .sampling import MeasureEstimate, mc_mean, sphere_points
from .spin import chart_representative

DIM = 16
SMOOTHNESS = ("quadratic-exact", "smooth", "continuous")
_CHUNK = 1 << 17

Array = np.ndarray


def _as_points(x) -> tuple[Array, bool]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != DIM:
        raise DomainError(f"points must have {DIM} coordinates")
    single = x.ndim == 1
    return np.atleast_2d(x), single


@dataclass(frozen=True)
class ScalarField:
    """A real function on R^16, vectorised over rows.

    ``fn`` maps (N, 16) -> (N,). ``grad`` and ``hess`` are optional closed
    forms mapping (N, 16) -> (N, 16) and (N, 16, 16).
    """

    fn: Callable[[Array], Array]
    fd_step: float = 1e-3
    smoothness: str = "smooth"
    grad: Optional[Callable[[Array], Array]] = None
    hess: Optional[Callable[[Array], Array]] = None
    name: str = "field"

    def __post_init__(self):
        if self.smoothness not in SMOOTHNESS:
            raise DomainError(f"unknown smoothness hint {self.smoothness!r}")
        if not self.fd_step > 0:
            raise DomainError("fd_step must be positive")

    def __call__(self, x) -> Array | float:
        pts, single = _as_points(x)
        out = np.asarray(self.fn(pts), dtype=float)
        return float(out[0]) if single else out

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return add_fields(self, other)

    def __mul__(self, s: float) -> "ScalarField":
        return scale_field(self, s)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return scale_field(self, -1.0)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return add_fields(self, scale_field(other, -1.0))

    def with_step(self, h: float) -> "ScalarField":
        return replace(self, fd_step=h)

    def pullback(self, m: Array, shift: Array | None = None) -> "ScalarField":
        """x -> f(M x + shift)."""
        m = np.asarray(m, float)
        s = np.zeros(DIM) if shift is None else np.asarray(shift, float)
        f = self

        def fn(x):
            return f.fn(x @ m.T + s)

        grad = None if f.grad is None else (lambda x: f.grad(x @ m.T + s) @ m)
        hess = None if f.hess is None else (lambda x: m.T @ f.hess(x @ m.T + s) @ m)
        return ScalarField(fn, f.fd_step, f.smoothness, grad, hess, f"{f.name}∘affine")


def _worst(a: str, b: str) -> str:
    return SMOOTHNESS[max(SMOOTHNESS.index(a), SMOOTHNESS.index(b))]


def add_fields(f: ScalarField, g: ScalarField) -> ScalarField:
    grad = None if f.grad is None or g.grad is None else (lambda x: f.grad(x) + g.grad(x))
    hess = None if f.hess is None or g.hess is None else (lambda x: f.hess(x) + g.hess(x))
    return ScalarField(
        lambda x: f.fn(x) + g.fn(x),
        min(f.fd_step, g.fd_step),
        _worst(f.smoothness, g.smoothness),
        grad,
        hess,
        f"({f.name} + {g.name})",
    )


def scale_field(f: ScalarField, s: float) -> ScalarField:
    s = float(s)
    grad = None if f.grad is None else (lambda x: s * f.grad(x))
    hess = None if f.hess is None else (lambda x: s * f.hess(x))
    return ScalarField(lambda x: s * f.fn(x), f.fd_step, f.smoothness, grad, hess, f"{s:g}*{f.name}")


# ---------------------------------------------------------------------------
# built-in fields
# ---------------------------------------------------------------------------


def quadratic_form(b: Array, name: str = "quadratic-form") -> ScalarField:
    """x -> x^T B x (B symmetrised)."""
    b = np.asarray(b, float)
    if b.shape != (DIM, DIM):
        raise DomainError("quadratic form needs a 16x16 matrix")
    b = 0.5 * (b + b.T)
    return ScalarField(
        lambda x: np.einsum("ni,ij,nj->n", x, b, x),
        smoothness="quadratic-exact",
        grad=lambda x: 2.0 * x @ b,
        hess=lambda x: np.broadcast_to(2.0 * b, (x.shape[0], DIM, DIM)),
        name=name,
    )


def normsq(center: Array | None = None) -> ScalarField:
    """|q - center|^2 on O^2."""
    c = np.zeros(DIM) if center is None else np.asarray(center, float)
    return quadratic_form(np.eye(DIM), "normsq").pullback(np.eye(DIM), -c)


def normsq1() -> ScalarField:
    return quadratic_form(np.diag(np.r_[np.ones(8), np.zeros(8)]), "normsq1")


def re_q1_conj_q2() -> ScalarField:
    """Re(q1 conj(q2)) = <q1, q2>."""
    b = np.zeros((DIM, DIM))
    b[:8, 8:] = 0.5 * np.eye(8)
    b[8:, :8] = 0.5 * np.eye(8)
    return quadratic_form(b, "re-q1-conj-q2")


def linear(c: Array, c0: float = 0.0) -> ScalarField:
    c = np.asarray(c, float)
    return ScalarField(
        lambda x: x @ c + c0,
        smoothness="quadratic-exact",
        grad=lambda x: np.broadcast_to(c, x.shape),
        hess=lambda x: np.zeros((x.shape[0], DIM, DIM)),
        name="linear",
    )


def constant(c: float) -> ScalarField:
    return linear(np.zeros(DIM), c)


def gaussian(s: float = 1.0, center: Array | None = None) -> ScalarField:
    """exp(-|x - center|^2 / (2 s^2))."""
    c = np.zeros(DIM) if center is None else np.asarray(center, float)
    s2 = float(s) ** 2

    def fn(x):
        d = x - c
        return np.exp(-np.einsum("ni,ni->n", d, d) / (2 * s2))

    def grad(x):
        return -(x - c) / s2 * fn(x)[:, None]

    def hess(x):
        d = (x - c) / s2
        return fn(x)[:, None, None] * (np.einsum("ni,nj->nij", d, d) - np.eye(DIM) / s2)

    return ScalarField(fn, grad=grad, hess=hess, name="gaussian")


def euclidean_norm() -> ScalarField:
    """|x|; continuous, with the gradient x / |x| (zero at the origin)."""

    def grad(x):
        r = np.linalg.norm(x, axis=1, keepdims=True)
        return np.divide(x, r, out=np.zeros_like(x), where=r > 0)

    return ScalarField(lambda x: np.linalg.norm(x, axis=1), smoothness="continuous", grad=grad, name="abs")


def power_sum(weights: Array, offsets: Array, coeffs: Array, power: int = 4) -> ScalarField:
    """sum_k c_k (w_k . x + d_k)^p; quartic polynomials for p = 4."""
    w = np.atleast_2d(np.asarray(weights, float))
    d = np.asarray(offsets, float)
    c = np.asarray(coeffs, float)
    p = int(power)

    def fn(x):
        return ((x @ w.T + d) ** p) @ c

    def grad(x):
        return (p * (x @ w.T + d) ** (p - 1) * c) @ w

    def hess(x):
        t = p * (p - 1) * (x @ w.T + d) ** (p - 2) * c
        return np.einsum("nk,ki,kj->nij", t, w, w)

    return ScalarField(fn, grad=grad, hess=hess, name=f"power-sum{p}")


def random_quartic(rng: np.random.Generator, terms: int = 6, convex: bool = True) -> ScalarField:
    w = rng.standard_normal((terms, DIM)) / np.sqrt(DIM)
    d = rng.uniform(-1.0, 1.0, terms)
    c = rng.uniform(0.2, 1.0, terms) if convex else rng.uniform(-1.0, 1.0, terms)
    return power_sum(w, d, c, 4)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def _stencil_offsets() -> tuple[Array, list[tuple[int, int]]]:
    """Unit offsets of the 513-point second-derivative stencil and their index pairs."""
    eye = np.eye(DIM)
    rows = [np.zeros(DIM)]
    rows += [s * eye[i] for i in range(DIM) for s in (1.0, -1.0)]
    pairs = [(i, j) for i in range(DIM) for j in range(i + 1, DIM)]
    for i, j in pairs:
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            rows.append(si * eye[i] + sj * eye[j])
    return np.array(rows), pairs


_OFFSETS, _PAIRS = _stencil_offsets()
_PI, _PJ = np.array(_PAIRS).T


def fd_step_at(f: ScalarField, x: Array) -> Array:
    """Per-point step: fd_step * (1 + |x|)."""
    return f.fd_step * (1.0 + np.linalg.norm(x, axis=1))


def _fd_hessian_once(f: ScalarField, x: Array, h: Array) -> Array:
    n = x.shape[0]
    m = _OFFSETS.shape[0]
    out = np.empty((n, DIM, DIM))
    per = max(1, _CHUNK // m)
    for s in range(0, n, per):
        xs, hs = x[s : s + per], h[s : s + per]
        pts = xs[:, None, :] + hs[:, None, None] * _OFFSETS[None]
        v = np.asarray(f.fn(pts.reshape(-1, DIM)), float).reshape(len(xs), m)
        c = v[:, 0]
        plus, minus = v[:, 1 : 1 + 2 * DIM : 2], v[:, 2 : 2 + 2 * DIM : 2]
        h2 = hs[:, None] ** 2
        blk = out[s : s + per]
        diag = (plus - 2.0 * c[:, None] + minus) / h2
        quad = v[:, 1 + 2 * DIM :].reshape(len(xs), len(_PAIRS), 4)
        off = (quad[..., 0] - quad[..., 1] - quad[..., 2] + quad[..., 3]) / (4.0 * h2)
        blk[:, np.arange(DIM), np.arange(DIM)] = diag
        blk[:, _PI, _PJ] = off
        blk[:, _PJ, _PI] = off
    return out


def fd_hessian(f: ScalarField, x, richardson: bool = False) -> Array:
    """Central-difference real Hessian, (N, 16, 16) (or (16, 16) for one point)."""
    pts, single = _as_points(x)
    h = fd_step_at(f, pts)
    hs = _fd_hessian_once(f, pts, h)
    if richardson:
        hs = (4.0 * _fd_hessian_once(f, pts, 0.5 * h) - hs) / 3.0
    return hs[0] if single else hs


def real_hessian(f: ScalarField, x, method: str = "auto", richardson: bool = False) -> Array:
    pts, single = _as_points(x)
    if method not in ("auto", "fd", "analytic"):
        raise DomainError(f"unknown method {method!r}")
    if method == "analytic" and f.hess is None:
        raise DomainError(f"{f.name} has no closed-form Hessian")
    if f.hess is not None and method != "fd":
        out = np.asarray(f.hess(pts), float)
    else:
        out = fd_hessian(f, pts, richardson=richardson)
    return out[0] if single else out


def fd_gradient(f: ScalarField, x) -> Array:
    pts, single = _as_points(x)
    h = fd_step_at(f, pts)
    eye = np.eye(DIM)
    plus = f.fn((pts[:, None, :] + h[:, None, None] * eye).reshape(-1, DIM)).reshape(-1, DIM)
    minus = f.fn((pts[:, None, :] - h[:, None, None] * eye).reshape(-1, DIM)).reshape(-1, DIM)
    g = (plus - minus) / (2.0 * h[:, None])
    return g[0] if single else g


def real_gradient(f: ScalarField, x, method: str = "auto") -> Array:
    pts, single = _as_points(x)
    if f.grad is not None and method != "fd":
        out = np.asarray(f.grad(pts), float)
    else:
        out = fd_gradient(f, pts)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Dirac operators and octonionic Hessians
# ---------------------------------------------------------------------------


def dirac(F: Callable[[Array], Array], point, conjugated: bool = True, step: float = 1e-5) -> Array:
    """Dirac operator of an octonion-valued F on O, by central differences.

    ``conjugated=True``: sum_i e_i dF/dx_i; otherwise sum_i dF/dx_i conj(e_i).
    ``F`` maps (N, 8) -> (N, 8).
    """
    p = np.asarray(point, float)
    eye = np.eye(8)
    h = step * (1.0 + np.linalg.norm(p))
    d = (np.asarray(F(p + h * eye), float) - np.asarray(F(p - h * eye), float)) / (2.0 * h)
    if conjugated:
        # sum_i e_i d_i: coefficient k is sum_i sum_j d_i[j] MULT[i, j, k]
        return np.einsum("ij,ijk->k", d, MULT)
    return np.einsum("ij,jik->k", d, MULT * np.array([1.0, -1, -1, -1, -1, -1, -1, -1])[None, :, None])


def octonionic_hessian_vec(
    f: ScalarField, x, method: str = "auto", richardson: bool = False, return_asymmetry: bool = False
):
    """Octonionic Hessians in the (..., 10) layout, from the real Hessian."""
    h = real_hessian(f, x, method=method, richardson=richardson)
    out = hessian_contract(h)
    if return_asymmetry:
        return out, hessian_asymmetry(h)
    return out


def fd_tolerance(f: ScalarField, x: Array) -> float:
    """Rough absolute error budget for an FD second derivative at x."""
    h = float(fd_step_at(f, np.atleast_2d(x))[0])
    scale = 1.0 + abs(float(f(x)))
    return 1e-2 * h * h * scale + 1e-15 * scale / (h * h)


def octonionic_hessian(f: ScalarField, x, method: str = "auto", richardson: bool = False) -> HMatrix2:
    """The octonionic Hessian at a single point, symmetrised; rejects a badly asymmetric raw matrix."""
    x = np.asarray(x, float)
    if x.shape != (DIM,):
        raise DomainError("octonionic_hessian takes one point; use octonionic_hessian_vec for batches")
    v, asym = octonionic_hessian_vec(f, x, method=method, richardson=richardson, return_asymmetry=True)
    tol = 100.0 * fd_tolerance(f, x) * DIM
    if float(asym) > tol:
        raise NumericalFailure(f"octonionic Hessian asymmetry {float(asym):.3e} exceeds {tol:.3e}")
    return HMatrix2.from_vector(v)


# ---------------------------------------------------------------------------
# octonionic lines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineLine:
    """The line base + {xi . x : x in O}, xi taken up to Hopf equivalence."""

    direction: Array
    base: Array = field(default_factory=lambda: np.zeros(DIM))

    def __post_init__(self):
        d = np.asarray(self.direction, float)
        if d.shape != (DIM,):
            raise DomainError("direction must be a vector in R^16")
        rep = chart_representative(d)
        object.__setattr__(self, "direction", d / np.linalg.norm(d))
        object.__setattr__(self, "base", np.asarray(self.base, float))
        object.__setattr__(self, "_unit", rep / np.linalg.norm(rep))

    @property
    def unit(self) -> Array:
        """Chart representative (a, 1) or (1, b), normalised."""
        return self._unit  # type: ignore[attr-defined]

    def frame(self) -> Array:
        """Orthonormal tangent frame: rows xi . e_i, i = 0..7."""
        return scale_column(self.unit, np.eye(8))

    def point(self, x) -> Array:
        return self.base + scale_column(self.unit, np.asarray(x, float))

    def projector(self) -> Array:
        f = self.frame()
        return f.T @ f


def line_laplacian(f: ScalarField, line: AffineLine, x=None, richardson: bool = False) -> float:
    """8-dimensional Laplacian of f restricted to the line, at parameter x."""
    x = np.zeros(8) if x is None else np.asarray(x, float)
    p = line.point(x)
    t = line.frame()
    h = float(fd_step_at(f, p[None])[0])

    def lap(h):
        pts = np.vstack([p[None], p + h * t, p - h * t])
        v = f(pts)
        return float(np.sum(v[1:9] - 2.0 * v[0] + v[9:17]) / (h * h))

    out = lap(h)
    if richardson:
        out = (4.0 * lap(0.5 * h) - out) / 3.0
    return out


def line_laplacian_from_hessian(hess_vec: Array, line: AffineLine) -> float:
    """Re(xi^* H xi) / |xi|^2 for the line's unit direction."""
    from .hermitian import herm_quad_form

    return float(herm_quad_form(hess_vec, line.unit))


# ---------------------------------------------------------------------------
# plurisubharmonicity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PshReport:
    passed: bool
    min_eigenvalue: float
    witness: Array
    n_points: int


def _box(region, dim: int = DIM) -> tuple[Array, Array]:
    lo, hi = region
    lo = np.broadcast_to(np.asarray(lo, float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, float), (dim,)).copy()
    if np.any(hi <= lo):
        raise DomainError("empty sampling box")
    return lo, hi


def min_hessian_eig(f: ScalarField, pts: Array, method: str = "auto") -> Array:
    return np.linalg.eigvalsh(herm_embed(octonionic_hessian_vec(f, pts, method=method)))[:, 0]


def is_psh(f: ScalarField, region=(-1.0, 1.0), n_points: int = 256, seed: int | None = 0, tol: float = 1e-8,
           method: str = "auto") -> PshReport:
    if f.smoothness == "continuous":
        raise PreconditionError(f"{f.name} is only continuous; mollify it before testing plurisubharmonicity")
    lo, hi = _box(region)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((n_points, DIM))
    eig = min_hessian_eig(f, pts, method=method)
    k = int(np.argmin(eig))
    return PshReport(bool(eig[k] >= -tol), float(eig[k]), pts[k], n_points)


def sphere_mean(f: ScalarField, center, radius: float, n_samples: int = 1 << 14, seed: int | None = 0) -> MeasureEstimate:
    c = np.asarray(center, float)
    return mc_mean(lambda y: f(c + radius * y), lambda rng, n: sphere_points(rng, n, DIM), n_samples, seed)


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------

PROFILE_POWER = 8


@dataclass(frozen=True)
class Mollifier:
    """c (1 - |n y|^2)^8 on the ball of radius 1/n, unit mass."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("mollifier index must be a positive integer")

    @property
    def radius(self) -> float:
        return 1.0 / self.n

    def density(self, y: Array) -> Array:
        y = np.atleast_2d(np.asarray(y, float))
        r2 = np.einsum("ni,ni->n", y, y) * self.n**2
        return np.where(r2 < 1.0, self.normaliser() * np.clip(1.0 - r2, 0.0, None) ** PROFILE_POWER, 0.0)

    def normaliser(self) -> float:
        # integral of (1 - |n y|^2)^8 over R^16 is n^-16 * (|S^15| / 2) * B(8, 9)
        from scipy.special import beta as beta_fn
        from scipy.special import gamma

        sphere = 2.0 * np.pi**8 / gamma(8.0)
        return float(self.n**DIM / (0.5 * sphere * beta_fn(8.0, PROFILE_POWER + 1.0)))

    def offsets(self, count: int, seed: int | None = 0) -> Array:
        """QMC nodes distributed by the density, in antithetic pairs (count rounded up to even)."""
        half = (count + 1) // 2
        m = int(np.ceil(np.log2(max(half, 2))))
        u = qmc.Sobol(d=DIM + 1, scramble=True, seed=seed).random_base2(m)[:half]
        u = np.clip(u, 1e-12, 1 - 1e-12)
        r = np.sqrt(beta_dist.ppf(u[:, 0], 8.0, PROFILE_POWER + 1.0))
        g = norm_dist.ppf(u[:, 1:])
        d = g / np.linalg.norm(g, axis=1, keepdims=True)
        y = d * (r / self.n)[:, None]
        return np.vstack([y, -y])


def mollify(f: ScalarField, m: Mollifier, quad_points: int = 512, seed: int | None = 0) -> ScalarField:
    """(f * delta_n)(x) ~ mean_k f(x - y_k) over fixed QMC nodes y_k."""
    ys = m.offsets(quad_points, seed)
    k = ys.shape[0]

    def avg(fun, x, tail):
        out = np.zeros((x.shape[0],) + tail)
        per = max(1, _CHUNK // k)
        for s in range(0, x.shape[0], per):
            xs = x[s : s + per]
            pts = (xs[:, None, :] - ys[None]).reshape(-1, DIM)
            out[s : s + per] = np.asarray(fun(pts)).reshape((len(xs), k) + tail).mean(axis=1)
        return out

    grad = None if f.grad is None else (lambda x: avg(f.grad, x, (DIM,)))
    hess = None if f.hess is None else (lambda x: avg(f.hess, x, (DIM, DIM)))
    if hess is None and f.grad is not None:
        # Hess(f * delta) = E[grad f(x - y) (grad log delta)(y)^T], y ~ delta
        r2 = np.einsum("ki,ki->k", ys, ys) * m.n**2
        score = -2.0 * PROFILE_POWER * m.n**2 * ys / (1.0 - r2)[:, None]

        def hess(x):
            out = np.zeros((x.shape[0], DIM, DIM))
            per = max(1, _CHUNK // k)
            for s in range(0, x.shape[0], per):
                xs = x[s : s + per]
                g = np.asarray(f.grad((xs[:, None, :] - ys[None]).reshape(-1, DIM))).reshape(len(xs), k, DIM)
                h = np.einsum("nki,kj->nij", g, score) / k
                out[s : s + per] = 0.5 * (h + np.swapaxes(h, 1, 2))
            return out

    step = min(f.fd_step, 0.25 * m.radius)
    return ScalarField(lambda x: avg(f.fn, x, ()), step, "smooth", grad, hess, f"mollify({f.name}, {m.n})")


def pointwise_max(f: ScalarField, g: ScalarField) -> ScalarField:
    return ScalarField(lambda x: np.maximum(f.fn(x), g.fn(x)), min(f.fd_step, g.fd_step), "continuous",
                       name=f"max({f.name}, {g.name})")


def unit_pair_contract(a: Array) -> Array:
    """sum_{l,m} a[..., l, m] e_l conj(e_m) for (..., 8, 8) arrays."""
    return np.einsum("...lm,lmk->...k", a, UNIT_PAIR)


def octonion_gradient(grad16: Array) -> Array:
    """zeta_p = sum_l e_l df/dx^p_l as a (..., 2, 8) column; the first Dirac derivative."""
    g = np.asarray(grad16, float)
    return g.reshape(g.shape[:-1] + (2, 8))

