"""Convex bodies in R^16, their support functions, the psi-weighted Monge-Ampere
valuation, the octonionic pseudo-volume and the classical T_i / U_j valuations
of analytic bodies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, gamma, pi

import numpy as np
from scipy.integrate import quad

from .calculus import DIM, Mollifier, ScalarField, mollify
from .errors import CapabilityError, DomainError, ParseError, PreconditionError
from .hermitian import herm_det, herm_embed, hessian_contract, scale_column
from .measure import TestFunction, _integrate_columns, _weight_proposal, smooth_max
from .sampling import MeasureEstimate, batch_means, estimate, sphere_points
from .spin import chart_representative

EXCLUSION_RADIUS = 0.02
LSE_LADDER = (32.0, 64.0, 128.0)
DEFAULT_N = 1 << 16


def ball_volume(d: int, r: float = 1.0) -> float:
    """kappa_d r^d."""
    return pi ** (d / 2) / gamma(d / 2 + 1) * r**d


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^d in R^(d+1)."""
    return 2 * pi ** ((d + 1) / 2) / gamma((d + 1) / 2)


def ball_intrinsic_volume(i: int, d: int, r: float) -> float:
    """V_i of a d-ball of radius r: binom(d, i) kappa_d / kappa_(d-i) r^i."""
    return comb(d, i) * ball_volume(d) / ball_volume(d - i) * r**i


# ---------------------------------------------------------------------------
# bodies
# ---------------------------------------------------------------------------


def _vec16(v, what: str) -> np.ndarray:
    v = np.asarray(v, float)
    if v.shape != (DIM,):
        raise DomainError(f"{what} must have {DIM} coordinates")
    return v


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec16(self.center, "center"))
        if not self.radius > 0:
            raise DomainError("radius must be positive")

    def support(self, x):
        x = np.atleast_2d(x)
        return x @ self.center + self.radius * np.linalg.norm(x, axis=1)

    def translate(self, t) -> "Ball":
        return Ball(self.center + np.asarray(t, float), self.radius)

    def scaled(self, lam: float) -> "Ball":
        return Ball(lam * self.center, lam * self.radius)

    def transform(self, a: np.ndarray) -> "Ellipsoid":
        return self.as_ellipsoid().transform(a)

    def as_ellipsoid(self) -> "Ellipsoid":
        return Ellipsoid(self.center, self.radius**2 * np.eye(DIM))

    def hessian(self, x):
        x = np.atleast_2d(x)
        r = np.linalg.norm(x, axis=1)
        u = x / r[:, None]
        return (self.radius / r)[:, None, None] * (np.eye(DIM) - np.einsum("ni,nj->nij", u, u))

    def gradient(self, x):
        x = np.atleast_2d(x)
        return self.center + self.radius * x / np.linalg.norm(x, axis=1, keepdims=True)

    def to_json(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": float(self.radius)}


@dataclass(frozen=True)
class Ellipsoid:
    """{x : (x - c)^T M^-1 (x - c) <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _vec16(self.center, "center"))
        m = np.asarray(self.shape, float)
        if m.shape != (DIM, DIM):
            raise DomainError("shape must be 16x16")
        if np.abs(m - m.T).max() > 1e-12 * (1 + np.abs(m).max()):
            raise DomainError("shape must be symmetric")
        if np.linalg.eigvalsh(m)[0] <= 0:
            raise DomainError("shape must be positive definite")
        object.__setattr__(self, "shape", m)

    def _s(self, x):
        return np.sqrt(np.einsum("ni,ij,nj->n", x, self.shape, x))

    def support(self, x):
        x = np.atleast_2d(x)
        return x @ self.center + self._s(x)

    def gradient(self, x):
        x = np.atleast_2d(x)
        return self.center + (x @ self.shape) / self._s(x)[:, None]

    def hessian(self, x):
        x = np.atleast_2d(x)
        s = self._s(x)
        mx = x @ self.shape
        return self.shape / s[:, None, None] - np.einsum("ni,nj->nij", mx, mx) / (s**3)[:, None, None]

    def translate(self, t) -> "Ellipsoid":
        return Ellipsoid(self.center + np.asarray(t, float), self.shape)

    def scaled(self, lam: float) -> "Ellipsoid":
        return Ellipsoid(lam * self.center, lam * lam * self.shape)

    def transform(self, a: np.ndarray) -> "Ellipsoid":
        a = np.asarray(a, float)
        m = a @ self.shape @ a.T
        return Ellipsoid(a @ self.center, 0.5 * (m + m.T))

    def to_json(self) -> dict:
        return {"type": "ellipsoid", "center": self.center.tolist(), "shape": self.shape.tolist()}


@dataclass(frozen=True)
class Polytope:
    """conv(vertices) scaled by ``scale`` and shifted by ``offset``.

    Keeping the scale and shift outside the vertex list means the smoothed
    support function of a dilate or translate is the exact dilate or
    translate of the smoothed support function.
    """

    vertices: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(DIM))
    scale: float = 1.0

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, float))
        if v.shape[0] == 0 or v.shape[1] != DIM:
            raise DomainError("a polytope needs at least one vertex in R^16")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "offset", _vec16(self.offset, "offset"))
        if not self.scale > 0:
            raise DomainError("scale must be positive")

    def support(self, x):
        x = np.atleast_2d(x)
        return x @ self.offset + self.scale * np.max(x @ self.vertices.T, axis=1)

    def translate(self, t) -> "Polytope":
        return Polytope(self.vertices, self.offset + np.asarray(t, float), self.scale)

    def scaled(self, lam: float) -> "Polytope":
        return Polytope(self.vertices, lam * self.offset, lam * self.scale)

    def transform(self, a: np.ndarray) -> "Polytope":
        a = np.asarray(a, float)
        return Polytope(self.vertices @ a.T, a @ self.offset, self.scale)

    def lse_terms(self, x, beta: float):
        """Softmax weights and the smoothed support value (without offset, unscaled)."""
        z = beta * (x @ self.vertices.T)
        zmax = z.max(axis=1, keepdims=True)
        e = np.exp(z - zmax)
        tot = e.sum(axis=1, keepdims=True)
        value = (zmax[:, 0] + np.log(tot[:, 0])) / beta
        return e / tot, value

    def to_json(self) -> dict:
        pts = self.scale * self.vertices + self.offset
        return {"type": "polytope", "vertices": pts.tolist()}

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class Box:
    """Axis-parallel box prod [lo_i, hi_i], scaled and shifted like ``Polytope``.

    Its 2^16 vertices are never listed: the log-sum-exp over a product set
    factorises into one two-term log-sum-exp per coordinate.
    """

    lo: np.ndarray
    hi: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(DIM))
    scale: float = 1.0

    def __post_init__(self):
        lo, hi = _vec16(self.lo, "lo"), _vec16(self.hi, "hi")
        if np.any(hi < lo):
            raise DomainError("box needs lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "offset", _vec16(self.offset, "offset"))

    def support(self, x):
        x = np.atleast_2d(x)
        return x @ self.offset + self.scale * np.sum(np.maximum(x * self.lo, x * self.hi), axis=1)

    def translate(self, t) -> "Box":
        return Box(self.lo, self.hi, self.offset + np.asarray(t, float), self.scale)

    def scaled(self, lam: float) -> "Box":
        return Box(self.lo, self.hi, lam * self.offset, lam * self.scale)

    def transform(self, a: np.ndarray) -> "Polytope":
        return self.as_polytope().transform(a)

    def as_polytope(self) -> Polytope:
        bits = (np.arange(1 << DIM)[:, None] >> np.arange(DIM)) & 1
        verts = np.where(bits == 1, self.hi, self.lo)
        return Polytope(verts, self.offset, self.scale)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Actual coordinates of the box after scale and shift."""
        return self.scale * self.lo + self.offset, self.scale * self.hi + self.offset

    def to_json(self) -> dict:
        lo, hi = self.bounds
        return {"type": "box", "lo": lo.tolist(), "hi": hi.tolist()}


ConvexBody = Ball | Ellipsoid | Polytope | Box


def singleton(p) -> Polytope:
    return Polytope(np.asarray(p, float)[None, :])


def body_from_json(data: dict) -> ConvexBody:
    try:
        kind = data["type"]
        if kind == "ball":
            return Ball(data["center"], float(data["radius"]))
        if kind == "ellipsoid":
            return Ellipsoid(data["center"], data["shape"])
        if kind == "polytope":
            return Polytope(data["vertices"])
        if kind == "box":
            return Box(data["lo"], data["hi"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed body: {exc}") from exc
    raise ParseError(f"unknown body type {data.get('type')!r}")


def load_body(path: str) -> ConvexBody:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return body_from_json(data)


def support(k: ConvexBody, x):
    out = k.support(x)
    return float(out[0]) if np.ndim(x) == 1 else out


# ---------------------------------------------------------------------------
# smoothed support functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Smoothing:
    """``lse`` with parameter beta, ``mollify`` with index n, or ``exact`` for analytic bodies."""

    method: str = "lse"
    beta: float = 64.0
    n: int = 4
    quad_points: int = 256

    def describe(self) -> str:
        if self.method == "lse":
            return f"lse(beta={self.beta:g})"
        if self.method == "mollify":
            return f"mollify(n={self.n})"
        return "exact"


def _polytope_field(k: Polytope, beta: float) -> ScalarField:
    def fn(x):
        _, val = k.lse_terms(x, beta)
        return x @ k.offset + k.scale * val

    def grad(x):
        p, _ = k.lse_terms(x, beta)
        return k.offset + k.scale * (p @ k.vertices)

    def hess(x):
        p, _ = k.lse_terms(x, beta)
        mean = p @ k.vertices
        second = np.einsum("nk,ki,kj->nij", p, k.vertices, k.vertices)
        return (k.scale * beta) * (second - np.einsum("ni,nj->nij", mean, mean))

    return ScalarField(fn, 1e-3, "smooth", grad, hess, f"lse{beta:g}")


def _box_field(k: Box, beta: float) -> ScalarField:
    d = k.hi - k.lo

    def parts(x):
        a, b = x * k.lo, x * k.hi
        # p = weight of the lo vertex in each coordinate
        p = 0.5 * (1.0 + np.tanh(0.5 * beta * (a - b)))
        return a, b, p

    def fn(x):
        a, b, _ = parts(x)
        m = np.maximum(a, b)
        val = m + np.log1p(np.exp(-beta * np.abs(a - b))) / beta
        return x @ k.offset + k.scale * val.sum(axis=1)

    def grad(x):
        _, _, p = parts(x)
        return k.offset + k.scale * (p * k.lo + (1.0 - p) * k.hi)

    def hess(x):
        _, _, p = parts(x)
        diag = (k.scale * beta) * p * (1.0 - p) * d * d
        out = np.zeros((x.shape[0], DIM, DIM))
        idx = np.arange(DIM)
        out[:, idx, idx] = diag
        return out

    return ScalarField(fn, 1e-3, "smooth", grad, hess, f"box-lse{beta:g}")


def _analytic_field(k: Ball | Ellipsoid) -> ScalarField:
    return ScalarField(lambda x: k.support(x), 1e-3, "smooth", k.gradient, k.hessian, type(k).__name__.lower())


def exact_support_field(k: ConvexBody) -> ScalarField:
    """h_K itself; continuous in general, with a gradient wherever it is differentiable."""
    if isinstance(k, (Ball, Ellipsoid)):
        return ScalarField(lambda x: k.support(x), 1e-3, "continuous", k.gradient, None, "support")
    if isinstance(k, Box):
        def grad(x):
            return k.offset + k.scale * np.where(x * k.lo >= x * k.hi, k.lo, k.hi)
    else:
        def grad(x):
            idx = np.argmax(x @ k.vertices.T, axis=1)
            return k.offset + k.scale * k.vertices[idx]
    return ScalarField(lambda x: k.support(x), 1e-3, "continuous", grad, None, "support")


def smooth_support(k: ConvexBody, smoothing: Smoothing | None = None) -> ScalarField:
    smoothing = smoothing or Smoothing()
    if smoothing.method == "mollify":
        return mollify(exact_support_field(k), Mollifier(smoothing.n), smoothing.quad_points)
    if isinstance(k, (Ball, Ellipsoid)):
        return _analytic_field(k)
    if smoothing.method != "lse":
        raise CapabilityError(f"smoothing {smoothing.method!r} is not available for polytopes")
    if not smoothing.beta > 0:
        raise DomainError("beta must be positive")
    if isinstance(k, Box):
        return _box_field(k, smoothing.beta)
    return _polytope_field(k, smoothing.beta)


def lse_error_bound(k: ConvexBody, beta: float) -> float:
    """Uniform bound on (smoothed - exact) support, for unit-norm arguments scaled by |x|."""
    if isinstance(k, Box):
        return k.scale * DIM * np.log(2.0) / beta
    if isinstance(k, Polytope):
        return k.scale * np.log(k.n_vertices) / beta
    return 0.0


def _singular(k: ConvexBody, smoothing: Smoothing) -> bool:
    return isinstance(k, (Ball, Ellipsoid)) and smoothing.method != "mollify"


def _label(k: ConvexBody, smoothing: Smoothing) -> str:
    return "exact" if _singular(k, smoothing) else smoothing.describe()


def _apex_hessian_bound(k: ConvexBody) -> float:
    """C with det(octonionic Hessian of h_K)(x) <= C / |x|^2 for an ellipsoid or ball."""
    m = k.as_ellipsoid().shape if isinstance(k, Ball) else k.shape
    ev = np.linalg.eigvalsh(m)
    # real Hessian <= lambda_max / (sqrt(lambda_min) |x|); det <= (trace / 2)^2
    return (8.0 * ev[-1] / np.sqrt(ev[0])) ** 2


def exclusion_bound(k: ConvexBody, rho: float, weight_max: float = 1.0) -> float:
    """Bound on the integral of det over the excluded ball: C * omega_15 * rho^14 / 14."""
    return weight_max * _apex_hessian_bound(k) * sphere_area(DIM - 1) * rho**14 / 14.0


# ---------------------------------------------------------------------------
# valuations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValuationResult:
    value: float
    std_error: float
    n_samples: int
    seed: int | None
    smoothing: str

    @classmethod
    def from_estimate(cls, est: MeasureEstimate, smoothing: str, extra_error: float = 0.0) -> "ValuationResult":
        return cls(est.value, est.std_error + extra_error, est.n_samples, est.seed, smoothing)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "smoothing": self.smoothing,
        }


def _det_columns(fields, rho: float):
    """Integrand columns det(Hess h) for each field, zeroed inside the exclusion ball."""

    def cols(x):
        keep = np.linalg.norm(x, axis=1) >= rho if rho > 0 else np.ones(x.shape[0], bool)
        xs = np.where(keep[:, None], x, 1.0)  # any regular point; masked out below
        out = [np.where(keep, herm_det(hessian_contract(f.hess(xs))), 0.0) for f in fields]
        return np.stack(out, axis=1)

    return cols


def _field_with_hessian(k: ConvexBody, smoothing: Smoothing) -> ScalarField:
    f = smooth_support(k, smoothing)
    if f.hess is None:
        raise CapabilityError("smoothed support function has no Hessian")
    return f


def psi_valuation(k: ConvexBody, psi: TestFunction, smoothing: Smoothing | None = None, n: int = DEFAULT_N,
                  seed: int | None = 0, exclusion: float = EXCLUSION_RADIUS,
                  threads: int | None = None) -> ValuationResult:
    """Integral of psi * det(octonionic Hessian of the smoothed h_K)."""
    smoothing = smoothing or Smoothing()
    f = _field_with_hessian(k, smoothing)
    rho = 0.0
    extra = 0.0
    if _singular(k, smoothing):
        lo, hi = psi.box
        if np.all(lo < 0) and np.all(hi > 0):
            if not exclusion > 0:
                raise PreconditionError("support function is singular inside supp psi; an exclusion radius is required")
            rho = exclusion
            extra = exclusion_bound(k, rho, psi.amplitude)
    prop = _weight_proposal(psi)
    base = _det_columns([f], rho)

    def cols(x):
        return base(x) * psi.value(x)[:, None]

    means = _integrate_columns(cols, prop, n, seed, threads)
    return ValuationResult.from_estimate(estimate(means[:, 0], n, seed), _label(k, smoothing), extra)


def _shell_sampler(rho: float):
    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        r = (rho**DIM + u * (1.0 - rho**DIM)) ** (1.0 / DIM)
        return sphere_points(rng, n, DIM) * r[:, None]

    return sample


def pseudo_volume_batches(bodies, smoothing: Smoothing | None = None, n: int = DEFAULT_N, seed: int | None = 0,
                          exclusion: float = EXCLUSION_RADIUS, threads: int | None = None):
    """Batch means (times the sampled volume) for several bodies on shared points of the unit ball."""
    smoothing = smoothing or Smoothing()
    fields = [_field_with_hessian(k, smoothing) for k in bodies]
    rho = exclusion if any(_singular(k, smoothing) for k in bodies) else 0.0
    vol = ball_volume(DIM) * (1.0 - rho**DIM)
    means = batch_means(_det_columns(fields, rho), _shell_sampler(rho), n, seed, threads=threads)
    extra = [exclusion_bound(k, rho) if rho > 0 and _singular(k, smoothing) else 0.0 for k in bodies]
    return means * vol, extra


def pseudo_volume(k: ConvexBody, smoothing: Smoothing | None = None, n: int = DEFAULT_N, seed: int | None = 0,
                  exclusion: float = EXCLUSION_RADIUS, threads: int | None = None) -> ValuationResult:
    """Integral over the unit ball of det(octonionic Hessian of the smoothed h_K)."""
    smoothing = smoothing or Smoothing()
    means, extra = pseudo_volume_batches([k], smoothing, n, seed, exclusion, threads)
    return ValuationResult.from_estimate(estimate(means[:, 0], n, seed), _label(k, smoothing), extra[0])


def ball_pseudo_volume_oracle(c0: float) -> float:
    """c0 * omega_15 / 14 for det(octonionic Hessian of |x|) = c0 / |x|^2."""
    return c0 * sphere_area(DIM - 1) / 14.0


# ---------------------------------------------------------------------------
# additivity
# ---------------------------------------------------------------------------


def boxes_union_convex(k1: Box, k2: Box, atol: float = 0.0) -> bool:
    """True when one box contains the other, or they agree in 15 extents and overlap in the last."""
    lo1, hi1 = k1.bounds
    lo2, hi2 = k2.bounds
    if np.all(lo1 <= lo2 + atol) and np.all(hi2 <= hi1 + atol):
        return True
    if np.all(lo2 <= lo1 + atol) and np.all(hi1 <= hi2 + atol):
        return True
    differ = ~(np.isclose(lo1, lo2, rtol=0, atol=atol) & np.isclose(hi1, hi2, rtol=0, atol=atol))
    if np.count_nonzero(differ) != 1:
        return False
    i = int(np.flatnonzero(differ)[0])
    return bool(max(lo1[i], lo2[i]) <= min(hi1[i], hi2[i]) + atol)


@dataclass(frozen=True)
class AdditivityLevel:
    beta: float
    j: float
    residual: MeasureEstimate
    terms: tuple[MeasureEstimate, ...]  # val(union), val(intersection), val(K1), val(K2)

    @property
    def largest_term(self) -> float:
        return max(abs(t.value) for t in self.terms)


def additivity_residual(k1: ConvexBody, k2: ConvexBody, psi: TestFunction, ladder=None, n: int = DEFAULT_N,
                        seed: int | None = 0, threads: int | None = None) -> list[AdditivityLevel]:
    """val(K1 u K2) + val(K1 n K2) - val(K1) - val(K2) with max/min of support functions smoothed.

    ``ladder`` is a sequence of (beta, j): beta smooths each polytope support
    function, j is the level of the smooth maximum.
    """
    if isinstance(k1, Box) and isinstance(k2, Box) and not boxes_union_convex(k1, k2):
        raise PreconditionError("the union of these boxes is not convex")
    ladder = tuple(ladder or [(b, b) for b in LSE_LADDER])
    prop = _weight_proposal(psi)
    setups = []
    for beta, j in ladder:
        s = Smoothing("lse", beta)
        u, v = _field_with_hessian(k1, s), _field_with_hessian(k2, s)
        setups.append((u, v, smooth_max(u, v, j)))

    def cols(x):
        w0 = psi.value(x)
        out = []
        for u, v, w in setups:
            hu = hessian_contract(u.hess(x))
            hv = hessian_contract(v.hess(x))
            hw = hessian_contract(w.hess(x))
            du, dv, dw = herm_det(hu), herm_det(hv), herm_det(hw)
            dmin = herm_det(hu + hv - hw)
            out.extend([w0 * (dw + dmin - du - dv), w0 * dw, w0 * dmin, w0 * du, w0 * dv])
        return np.stack(out, axis=1)

    means = _integrate_columns(cols, prop, n, seed, threads)
    result = []
    for i, (beta, j) in enumerate(ladder):
        m = means[:, 5 * i : 5 * i + 5]
        est = [estimate(m[:, c], n, seed) for c in range(5)]
        result.append(AdditivityLevel(float(beta), float(j), est[0], tuple(est[1:])))
    return result


# ---------------------------------------------------------------------------
# classical valuations T_i and U_j
# ---------------------------------------------------------------------------


def sample_line_frames(rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 8, 16) orthonormal frames of octonionic lines through 0, Hopf image of uniform S^15."""
    xi = sphere_points(rng, n, DIM)
    frames = np.empty((n, 8, DIM))
    for k in range(n):
        c = chart_representative(xi[k])
        c /= np.linalg.norm(c)
        frames[k] = scale_column(c, np.eye(8))
    return frames


def _ellipsoid_shape(k: ConvexBody) -> np.ndarray:
    if isinstance(k, Ball):
        return k.radius**2 * np.eye(DIM)
    return k.shape


def t_valuation(k: ConvexBody, i: int, n_lines: int = 1 << 12, seed: int | None = 0,
                threads: int | None = None) -> ValuationResult:
    """T_i(K): average over octonionic lines E of V_i of the projection of K onto E."""
    if not 0 <= i <= 8:
        raise DomainError("i must be in 0..8")
    if i == 0:
        return ValuationResult(1.0, 0.0, n_lines, seed, "exact")
    if isinstance(k, Ball):
        v = ball_intrinsic_volume(i, 8, k.radius)
        # the projection of a ball onto any line is the same 8-ball
        means = batch_means(lambda f: np.full(f.shape[0], v), sample_line_frames, n_lines, seed, threads=threads)
        return ValuationResult.from_estimate(estimate(means, n_lines, seed), "exact")
    if isinstance(k, Ellipsoid) and i == 8:
        m = k.shape
        kappa = ball_volume(8)

        def vol(frames):
            return kappa * np.sqrt(np.linalg.det(frames @ m @ np.swapaxes(frames, 1, 2)))

        means = batch_means(vol, sample_line_frames, n_lines, seed, threads=threads)
        return ValuationResult.from_estimate(estimate(means, n_lines, seed), "exact")
    raise CapabilityError(f"T_{i} is not available for {type(k).__name__}")


def ellipsoid_projection_oracle(m: np.ndarray, n_lines: int, seed: int | None) -> MeasureEstimate:
    """kappa_8 sqrt(pdet(P M P)) averaged over lines, P the projector j(xi xi^*)."""
    from .spin import hopf_class_vec

    kappa = ball_volume(8)

    def vol(xi):
        p = herm_embed(hopf_class_vec(xi))
        ev = np.linalg.eigvalsh(p @ m @ p)[:, -8:]
        return kappa * np.sqrt(np.prod(ev, axis=1))

    return estimate(batch_means(vol, lambda rng, n: sphere_points(rng, n, DIM), n_lines, seed), n_lines, seed)


def u_valuation_quadrature(k: ConvexBody, j: int) -> float:
    """U_j(ball r) = omega_7 * int_0^r d^7 V_(j-8)(8-ball of radius sqrt(r^2 - d^2)) dd."""
    if not isinstance(k, Ball):
        raise CapabilityError("U_j is only available for balls")
    if not 8 <= j <= 16:
        raise DomainError("j must be in 8..16")
    r = k.radius
    i = j - 8
    val, _ = quad(lambda d: d**7 * ball_intrinsic_volume(i, 8, np.sqrt(max(r * r - d * d, 0.0))), 0.0, r,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(7) * val


def u_valuation(k: ConvexBody, j: int, n_lines: int = 1 << 14, seed: int | None = 0,
                threads: int | None = None) -> tuple[float, ValuationResult]:
    """(quadrature value, Monte-Carlo estimate) of U_j for a ball.

    The measure on affine lines is the probability measure on lines through
    0 times Lebesgue measure on the orthogonal complement.
    """
    exact = u_valuation_quadrature(k, j)
    r = k.radius
    i = j - 8
    # offsets are drawn from a ball 25% wider than K so that empty sections are exercised
    big = 1.25 * r
    vol8 = ball_volume(8, big)
    coef = ball_intrinsic_volume(i, 8, 1.0)

    def sample(rng, n):
        frames = sample_line_frames(rng, n)
        g = rng.standard_normal((n, DIM))
        g -= np.einsum("nji,nj->ni", frames, np.einsum("nij,nj->ni", frames, g))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * (big * rng.random(n) ** (1.0 / 8.0))[:, None]

    def section(w):
        # the line through the centre's projection plus w meets K in an 8-ball of radius sqrt(r^2 - |w|^2)
        d2 = np.einsum("ni,ni->n", w, w)
        inside = d2 <= r * r
        return np.where(inside, coef * np.clip(r * r - d2, 0.0, None) ** (i / 2.0), 0.0) * vol8

    means = batch_means(section, sample, n_lines, seed, threads=threads)
    return exact, ValuationResult.from_estimate(estimate(means, n_lines, seed), "exact")


# ---------------------------------------------------------------------------
# non-invariance under the full rotation group
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotationWitness:
    """A rotation R and a body K with P(R K) - P(K) far outside the Monte-Carlo error."""

    rotation: np.ndarray
    body: ConvexBody
    rotation_seed: int
    seed: int
    n_samples: int

    def gap(self, threads: int | None = None) -> MeasureEstimate:
        """Paired estimate of P(R K) - P(K) on shared sample points."""
        means, _ = pseudo_volume_batches([self.body, self.body.transform(self.rotation)], n=self.n_samples,
                                         seed=self.seed, threads=threads)
        return estimate(means[:, 1] - means[:, 0], self.n_samples, self.seed)

    def to_json(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "body": self.body.to_json(),
            "rotation_seed": self.rotation_seed,
            "seed": self.seed,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RotationWitness":
        r = np.asarray(data["rotation"], float)
        if r.shape != (DIM, DIM) or np.abs(r @ r.T - np.eye(DIM)).max() > 1e-10 or np.linalg.det(r) < 0:
            raise ParseError("witness rotation is not in SO(16)")
        return cls(r, body_from_json(data["body"]), int(data["rotation_seed"]), int(data["seed"]),
                   int(data["n_samples"]))


def search_rotation_witness(body: ConvexBody, rotation_seeds, n: int = DEFAULT_N, seed: int = 0,
                            threads: int | None = None) -> tuple[RotationWitness, MeasureEstimate]:
    """Try Haar-random rotations and keep the one with the largest gap in standard errors."""
    from scipy.stats import special_ortho_group

    best = None
    for s in rotation_seeds:
        r = special_ortho_group.rvs(DIM, random_state=int(s))
        w = RotationWitness(r, body, int(s), seed, n)
        g = w.gap(threads)
        score = abs(g.value) / g.std_error if g.std_error > 0 else np.inf
        if best is None or score > best[0]:
            best = (score, w, g)
    if best is None:
        raise DomainError("no rotation seeds given")
    return best[1], best[2]


def load_rotation_witness() -> RotationWitness:
    """The pinned witness shipped with the package."""
    from importlib.resources import files

    text = files("octoval").joinpath("data/so16_witness.json").read_text()
    return RotationWitness.from_json(json.loads(text))
