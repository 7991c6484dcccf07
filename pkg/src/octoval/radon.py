"""Radon transform over affine octonionic lines and the inversion operator.

Lines through a point are sampled as Hopf images of uniform points of S^15,
which gives the Spin(9)-invariant probability measure on OP^1. The lines are
drawn by randomised Sobol sequences (one independent scrambling per batch).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import factorial, gamma, pi
from typing import Callable

import numpy as np
from scipy.linalg import null_space
from scipy.stats import norm as norm_dist
from scipy.stats import qmc

from .calculus import DIM, AffineLine, ScalarField
from .errors import DomainError, NumericalFailure
from .hermitian import scale_column
from .sampling import MeasureEstimate, batch_means, estimate
from .octonion import oinv, omul, onorm2

LINE_DIM = 8
DELTA_POWER = 4


# ---------------------------------------------------------------------------
# the constant chain
# ---------------------------------------------------------------------------


def radial_laplacian_polynomial(k: int = DELTA_POWER, n: int = LINE_DIM) -> np.ndarray:
    """Coefficients (ascending in t = |w|^2) of P_k with Delta^k exp(-t/2) = P_k(t) exp(-t/2) in R^n.

    Uses Delta[P(t) e^{-t/2}] = [2n (P' - P/2) + 4t (P'' - P' + P/4)] e^{-t/2}.
    """
    p = np.polynomial.Polynomial([1.0])
    t = np.polynomial.Polynomial([0.0, 1.0])
    for _ in range(k):
        d1, d2 = p.deriv(1), p.deriv(2)
        p = 2 * n * (d1 - p / 2) + 4 * t * (d2 - d1 + p / 4)
    return p.coef


def laplacian_power_at_zero_hermite(k: int = DELTA_POWER, n: int = LINE_DIM) -> int:
    """Delta^k exp(-|w|^2/2) at 0 as the multinomial sum of 1-D Hermite values.

    d^{2m}/dx^{2m} exp(-x^2/2) at 0 is (-1)^m (2m-1)!!.
    """

    def dfact(m: int) -> int:
        out = 1
        for v in range(2 * m - 1, 0, -2):
            out *= v
        return out

    total = 0
    for alpha in itertools.product(range(k + 1), repeat=n):
        if sum(alpha) != k:
            continue
        coef = factorial(k)
        for a in alpha:
            coef //= factorial(a)
        term = coef
        for a in alpha:
            term *= dfact(a)
        total += term
    return (-1) ** k * total


def laplacian_power_at_zero_gamma(k: int = DELTA_POWER, n: int = LINE_DIM) -> float:
    """(-2)^k Gamma(n/2 + k) / Gamma(n/2)."""
    return (-2.0) ** k * gamma(n / 2 + k) / gamma(n / 2)


def inversion_constant(s: float = 1.0) -> float:
    """c with D(Rf) = c f, read off at q = 0 for f = exp(-|q|^2 / (2 s^2)).

    Rf(E) = (2 pi s^2)^4 exp(-d(E)^2 / (2 s^2)); Delta^4 in the 8 offset
    directions contributes s^-8 P_4(0); f(0) = 1.
    """
    p4 = radial_laplacian_polynomial()
    return (2 * pi * s * s) ** 4 * s**-8 * p4[0]


# ---------------------------------------------------------------------------
# lines
# ---------------------------------------------------------------------------


def line_frames(unit_dirs: np.ndarray) -> np.ndarray:
    """(N, 8, 16) tangent frames xi . e_i for unit chart representatives."""
    return scale_column(unit_dirs[:, None, :], np.eye(8)[None, :, :])


def chart_units(xi: np.ndarray) -> np.ndarray:
    """Normalised chart representatives of a batch of nonzero vectors in R^16."""
    x, y = xi[:, :8], xi[:, 8:]
    use_y = onorm2(y) >= onorm2(x)
    one = np.zeros_like(x)
    one[:, 0] = 1.0
    left = np.concatenate([omul(x, oinv(np.where(use_y[:, None], y, one))), one], axis=1)
    right = np.concatenate([one, omul(y, oinv(np.where(use_y[:, None], one, x)))], axis=1)
    out = np.where(use_y[:, None], left, right)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def perp_frame(frame: np.ndarray) -> np.ndarray:
    """(8, 16) orthonormal frame of the orthogonal complement of a line's tangent 8-plane."""
    return null_space(frame).T


def foot_point(line: AffineLine) -> np.ndarray:
    """Point of the line closest to the origin."""
    f = line.frame()
    return line.base - f.T @ (f @ line.base)


def line_distance(line: AffineLine, point=None) -> float:
    p = np.zeros(DIM) if point is None else np.asarray(point, float)
    f = line.frame()
    d = line.base - p
    return float(np.linalg.norm(d - f.T @ (f @ d)))


def _sobol_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """Randomly scrambled Sobol points pushed to S^15 through the normal quantile."""
    seed = int(rng.integers(0, 2**63 - 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = qmc.Sobol(d=DIM, scramble=True, seed=seed).random(n)
    g = norm_dist.ppf(np.clip(u, 1e-15, 1 - 1e-15))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# the transform
# ---------------------------------------------------------------------------


def radon_transform(f: ScalarField, line: AffineLine, n: int = 1 << 12, seed: int | None = 0,
                    scale: float = 1.0) -> MeasureEstimate:
    """Integral of f over the line, importance-sampled by a Gaussian centred at the foot point."""
    p0 = foot_point(line)
    frame = line.frame()
    s2 = scale * scale
    norm_c = (2 * pi * s2) ** (LINE_DIM / 2)

    def sample(rng, m):
        return rng.standard_normal((m, LINE_DIM)) * scale

    def fn(x):
        dens = np.exp(-np.einsum("ni,ni->n", x, x) / (2 * s2)) / norm_c
        return f(p0 + x @ frame) / dens

    return estimate(batch_means(fn, sample, n, seed), n, seed)


@dataclass(frozen=True)
class LineFunction:
    """A function on affine lines, vectorised over translates of one line.

    ``fn(unit, bases)`` receives the line's unit chart direction (16,) and
    base points (N, 16) and returns (N,).
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "g"

    def __call__(self, line: AffineLine) -> float:
        return float(self.fn(line.unit, line.base[None])[0])

    def __add__(self, other: "LineFunction") -> "LineFunction":
        return LineFunction(lambda u, b: self.fn(u, b) + other.fn(u, b), f"{self.name}+{other.name}")


@dataclass(frozen=True)
class GaussianImage:
    """Radon image of sum_k w_k exp(-|q - c_k|^2 / (2 s_k^2)), in closed form."""

    weights: tuple[float, ...]
    scales: tuple[float, ...]
    centers: tuple[np.ndarray, ...]

    @classmethod
    def single(cls, s: float = 1.0, center=None, weight: float = 1.0) -> "GaussianImage":
        c = np.zeros(DIM) if center is None else np.asarray(center, float)
        return cls((float(weight),), (float(s),), (c,))

    def __add__(self, other: "GaussianImage") -> "GaussianImage":
        return GaussianImage(self.weights + other.weights, self.scales + other.scales, self.centers + other.centers)

    def __mul__(self, a: float) -> "GaussianImage":
        return GaussianImage(tuple(a * w for w in self.weights), self.scales, self.centers)

    __rmul__ = __mul__

    def __sub__(self, other: "GaussianImage") -> "GaussianImage":
        return self + (-1.0) * other

    def source(self) -> ScalarField:
        def fn(x):
            out = np.zeros(x.shape[0])
            for w, s, c in zip(self.weights, self.scales, self.centers):
                d = x - c
                out += w * np.exp(-np.einsum("ni,ni->n", d, d) / (2 * s * s))
            return out

        return ScalarField(fn, name="gaussians")

    def line_function(self) -> LineFunction:
        def fn(unit, bases):
            frame = scale_column(unit, np.eye(8))
            out = np.zeros(bases.shape[0])
            for w, s, c in zip(self.weights, self.scales, self.centers):
                d = bases - c
                d = d - (d @ frame.T) @ frame
                out += w * (2 * pi * s * s) ** 4 * np.exp(-np.einsum("ni,ni->n", d, d) / (2 * s * s))
            return out

        return LineFunction(fn, "gaussian-image")

    def delta4_through(self, q: np.ndarray, frames: np.ndarray) -> np.ndarray:
        """(Delta_{E-perp})^4 of w -> g(E + w) at w = 0, E = q + span(frames[k]), closed form."""
        p4 = np.polynomial.Polynomial(radial_laplacian_polynomial())
        out = np.zeros(frames.shape[0])
        for w, s, c in zip(self.weights, self.scales, self.centers):
            d = q - c
            perp = d - np.einsum("kij,kj->ki", np.swapaxes(frames, 1, 2), frames @ d)
            t = np.einsum("ki,ki->k", perp, perp) / (s * s)
            out += w * (2 * pi * s * s) ** 4 * s**-8 * p4(t) * np.exp(-t / 2)
        return out


# ---------------------------------------------------------------------------
# Delta^4 by finite differences
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _delta4_stencil() -> tuple[np.ndarray, np.ndarray]:
    """Integer offsets and weights of (sum_i delta_i^2)^4 on Z^8 (unit spacing)."""
    one_d = {1: {-1: 1.0, 0: -2.0, 1: 1.0}}
    for m in range(2, DELTA_POWER + 1):
        prev = one_d[m - 1]
        cur: dict[int, float] = {}
        for a, wa in prev.items():
            for b, wb in one_d[1].items():
                cur[a + b] = cur.get(a + b, 0.0) + wa * wb
        one_d[m] = cur
    weights: dict[tuple[int, ...], float] = {}
    for alpha in itertools.product(range(DELTA_POWER + 1), repeat=LINE_DIM):
        if sum(alpha) != DELTA_POWER:
            continue
        coef = factorial(DELTA_POWER)
        for a in alpha:
            coef //= factorial(a)
        axes = [list(one_d[a].items()) if a else [(0, 1.0)] for a in alpha]
        for combo in itertools.product(*axes):
            key = tuple(o for o, _ in combo)
            w = coef * np.prod([v for _, v in combo])
            weights[key] = weights.get(key, 0.0) + w
    keys = [k for k, v in weights.items() if v != 0.0]
    return np.array(keys, float), np.array([weights[k] for k in keys])


RICHARDSON_STEPS = (1.0, 0.8, 0.6, 0.45)


def fd_delta4(values_at: Callable[[np.ndarray], np.ndarray], h: float = 0.6, steps=RICHARDSON_STEPS,
              noise_tol: float = 1e-6) -> tuple[float, float]:
    """Delta^4 at 0 of a function on R^8 from the stencil at several spacings.

    The single-spacing stencil is second-order accurate; extrapolating the
    four spacings h * steps in h^2 removes the h^2, h^4 and h^6 terms, so the
    combined estimate is accurate to O(h^8). Rounding in the values is
    amplified by roughly sum|w| / h^8 (about 10^6 / h^8), which is returned
    as the second component and checked against ``noise_tol`` relative to
    the larger of the result and |Delta^4| of a unit-width Gaussian with the
    same peak as the sampled values, so that an exact zero (a constant
    input) is not mistaken for cancellation.
    """
    offs, w = _delta4_stencil()
    hs = h * np.asarray(steps, float)
    ests = []
    noise = 0.0
    size = 0.0
    for hk in hs:
        v = np.asarray(values_at(offs * hk), float)
        size = max(size, float(np.abs(v).max()))
        ests.append(float(w @ v) / hk**8)
        noise = max(noise, np.finfo(float).eps * float(np.abs(w) @ np.abs(v)) / hk**8)
    # fit est(h) = a0 + a1 h^2 + a2 h^4 + a3 h^6 and report a0
    vand = np.vander(hs**2, len(hs), increasing=True)
    coef = np.linalg.solve(vand, np.array(ests))
    amplification = float(np.abs(np.linalg.inv(vand)[0]).sum())
    noise *= amplification
    result = float(coef[0])
    floor = abs(radial_laplacian_polynomial()[0]) * size
    if noise > noise_tol * max(abs(result), floor, 1e-300):
        raise NumericalFailure(f"finite-difference Delta^4 dominated by rounding ({noise:.3e} vs {abs(result):.3e})")
    return result, noise


# ---------------------------------------------------------------------------
# the inversion operator
# ---------------------------------------------------------------------------


def _line_sampler(rng, m):
    return chart_units(_sobol_sphere(rng, m))


def inverse_operator_at(g, q, n_lines: int = 1 << 12, seed: int | None = 0, mode: str = "analytic-gaussian",
                        h: float = 0.6, threads: int | None = None) -> MeasureEstimate:
    """D g(q): average over lines E through q of (Delta_{E-perp})^4 g(E + w) at w = 0."""
    q = np.asarray(q, float)
    if q.shape != (DIM,):
        raise DomainError("q must be a point of R^16")
    if mode == "analytic-gaussian":
        if not isinstance(g, GaussianImage):
            raise DomainError("analytic mode needs a GaussianImage")

        def fn(units):
            return g.delta4_through(q, line_frames(units))

    elif mode == "fd":
        line_fn = g.line_function() if isinstance(g, GaussianImage) else g

        def fn(units):
            out = np.empty(units.shape[0])
            for k, u in enumerate(units):
                perp = perp_frame(scale_column(u, np.eye(8)))
                out[k], _ = fd_delta4(lambda offs: line_fn.fn(u, q + offs @ perp), h=h)
            return out

    else:
        raise DomainError(f"unknown mode {mode!r}")
    return estimate(batch_means(fn, _line_sampler, n_lines, seed, threads=threads), n_lines, seed)
