"""Monge-Ampere type integrals of octonionic Hessians.

All integrals are Monte-Carlo estimates with 16 independent batches. Within
one identity evaluation every term is computed on the same sample points, so
algebraic cancellations are exact and the reported error bars are those of
the paired differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn
from scipy.stats import beta as beta_dist

from .calculus import DIM, ScalarField, octonionic_hessian_vec, real_gradient
from .errors import DomainError, PreconditionError
from .hermitian import herm_det, herm_mixed_det, hessian_contract
from .sampling import MeasureEstimate, batch_means, estimate

DEFAULT_N = 1 << 16


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """prod_i (1 - ((x_i - c_i) / r_i)^2)^k on the box |x_i - c_i| < r_i, zero outside.

    For k >= 3 this is C^2 with closed-form derivatives.
    """

    __test__ = False  # keep pytest from collecting this class

    center: np.ndarray
    half_widths: np.ndarray
    power: int = 4
    amplitude: float = 1.0

    def __post_init__(self):
        c = np.broadcast_to(np.asarray(self.center, float), (DIM,)).copy()
        r = np.broadcast_to(np.asarray(self.half_widths, float), (DIM,)).copy()
        if np.any(r <= 0):
            raise DomainError("half widths must be positive")
        if self.power < 3:
            raise DomainError("power must be at least 3 for a C^2 bump")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", r)

    @classmethod
    def random(cls, rng: np.random.Generator, spread: float = 0.3, width=(0.8, 1.2)) -> "TestFunction":
        return cls(rng.uniform(-spread, spread, DIM), rng.uniform(*width, DIM))

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.half_widths, self.center + self.half_widths

    def integral(self) -> float:
        """Exact integral: prod r_i * B(1/2, k+1)."""
        one = beta_fn(0.5, self.power + 1.0)
        return float(self.amplitude * np.prod(self.half_widths * one))

    def _factors(self, x):
        t = (x - self.center) / self.half_widths
        inside = np.abs(t) < 1.0
        s = np.where(inside, 1.0 - t * t, 0.0)
        k = self.power
        f = s**k
        # d/dx of s^k = k s^(k-1) * (-2 t / r); second derivative likewise
        r = self.half_widths
        d1 = np.where(inside, -2.0 * k * t * s ** (k - 1) / r, 0.0)
        d2 = np.where(inside, (4.0 * k * (k - 1) * t * t * s ** (k - 2) - 2.0 * k * s ** (k - 1)) / r**2, 0.0)
        return f, d1, d2

    def value(self, x):
        f, _, _ = self._factors(np.atleast_2d(x))
        return self.amplitude * np.prod(f, axis=1)

    def _parts(self, x):
        """Product P, ratios d1/f and the leave-one-out products, safe off the support."""
        f, d1, d2 = self._factors(x)
        inside = np.all(f > 0.0, axis=1)
        fs = np.where(inside[:, None], f, 1.0)
        prod = np.where(inside, np.prod(fs, axis=1), 0.0)
        loo = prod[:, None] / fs
        ratio = np.where(inside[:, None], d1 / fs, 0.0)
        return prod, ratio, d2, loo

    def gradient(self, x):
        x = np.atleast_2d(x)
        prod, ratio, _, _ = self._parts(x)
        return self.amplitude * prod[:, None] * ratio

    def hessian(self, x):
        x = np.atleast_2d(x)
        prod, ratio, d2, loo = self._parts(x)
        out = prod[:, None, None] * np.einsum("ni,nj->nij", ratio, ratio)
        idx = np.arange(DIM)
        out[:, idx, idx] = d2 * loo
        return self.amplitude * out

    def field(self) -> ScalarField:
        return ScalarField(self.value, fd_step=1e-3, smoothness="smooth", grad=self.gradient, hess=self.hessian,
                           name="bump")


# ---------------------------------------------------------------------------
# importance sampling on boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxProposal:
    """Product of symmetric Beta(a, a) laws stretched over a box."""

    lo: np.ndarray
    hi: np.ndarray
    a: float = 3.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.beta(self.a, self.a, size=(n, self.lo.size))
        return self.lo + (self.hi - self.lo) * u

    def pdf(self, x: np.ndarray) -> np.ndarray:
        w = self.hi - self.lo
        u = (x - self.lo) / w
        return np.prod(beta_dist.pdf(u, self.a, self.a) / w, axis=1)


def _integrate_columns(columns, proposal: BoxProposal, n: int, seed: int | None, threads: int | None = None):
    """Batch means of ``columns(x) / pdf(x)``; columns returns (N, k)."""

    def fn(x):
        return np.asarray(columns(x)) / proposal.pdf(x)[:, None]

    return batch_means(fn, proposal.sample, n, seed, threads=threads)


def _require_c2(*fields: ScalarField):
    for f in fields:
        if f.smoothness == "continuous":
            raise PreconditionError(f"{f.name} is only continuous; a C^2 field is required")


def _hess(f: ScalarField, x, method: str):
    return octonionic_hessian_vec(f, x, method=method)


def _weight_proposal(psi: TestFunction) -> BoxProposal:
    # Beta(k+1, k+1) in every coordinate is exactly proportional to the bump
    lo, hi = psi.box
    return BoxProposal(lo, hi, psi.power + 1.0)


def ma_integral(f: ScalarField, psi: TestFunction, n: int = DEFAULT_N, seed: int | None = 0,
                method: str = "auto", threads: int | None = None) -> MeasureEstimate:
    """Integral of psi * det(octonionic Hessian of f)."""
    return mixed_ma_integral(f, f, psi, n, seed, method, threads)


def mixed_ma_integral(f: ScalarField, g: ScalarField, psi: TestFunction, n: int = DEFAULT_N, seed: int | None = 0,
                      method: str = "auto", threads: int | None = None) -> MeasureEstimate:
    _require_c2(f, g)
    prop = _weight_proposal(psi)

    def cols(x):
        hf = _hess(f, x, method)
        hg = hf if g is f else _hess(g, x, method)
        d = herm_det(hf) if g is f else herm_mixed_det(hf, hg)
        return (psi.value(x) * d)[:, None]

    return estimate(_integrate_columns(cols, prop, n, seed, threads)[:, 0], n, seed)


# ---------------------------------------------------------------------------
# the trilinear form
# ---------------------------------------------------------------------------


def support_intersection(*bumps: TestFunction) -> tuple[np.ndarray, np.ndarray] | None:
    lo = np.max([b.box[0] for b in bumps], axis=0)
    hi = np.min([b.box[1] for b in bumps], axis=0)
    if np.any(hi <= lo):
        return None
    return lo, hi


def tau_permutations(bumps: tuple[TestFunction, TestFunction, TestFunction], perms, n: int = DEFAULT_N,
                     seed: int | None = 0, threads: int | None = None) -> np.ndarray:
    """Batch means (16, len(perms)) of tau(f_p0, f_p1, f_p2) for each permutation, on shared points.

    The integrand vanishes off the intersection of the three supports, so
    that box is sampled.
    """
    box = support_intersection(*bumps)
    if box is None:
        return np.zeros((16, len(perms)))
    prop = BoxProposal(box[0], box[1], 3.0)

    def cols(x):
        vals = [b.value(x) for b in bumps]
        hs = [hessian_contract(b.hessian(x)) for b in bumps]
        out = [vals[p[0]] * herm_mixed_det(hs[p[1]], hs[p[2]]) for p in perms]
        return np.stack(out, axis=1)

    return _integrate_columns(cols, prop, n, seed, threads)


def tau(f0: TestFunction, f1: TestFunction, f2: TestFunction, n: int = DEFAULT_N, seed: int | None = 0,
        threads: int | None = None) -> MeasureEstimate:
    for f in (f0, f1, f2):
        if not isinstance(f, TestFunction):
            raise PreconditionError("tau needs compactly supported test functions")
    means = tau_permutations((f0, f1, f2), [(0, 1, 2)], n, seed, threads)
    return estimate(means[:, 0], n, seed)


def paired_difference(means: np.ndarray, i: int, j: int, n: int, seed: int | None) -> MeasureEstimate:
    return estimate(means[:, i] - means[:, j], n, seed)


# ---------------------------------------------------------------------------
# smooth maximum and the Blocki identity
# ---------------------------------------------------------------------------


def chi(x):
    """C^2 quartic step: 0 for x <= -1, x for x >= 1."""
    x = np.asarray(x, float)
    mid = (3.0 + 8.0 * x + 6.0 * x**2 - x**4) / 16.0
    return np.where(x <= -1.0, 0.0, np.where(x >= 1.0, x, mid))


def chi_prime(x):
    x = np.asarray(x, float)
    mid = (2.0 + 3.0 * x - x**3) / 4.0
    return np.where(x <= -1.0, 0.0, np.where(x >= 1.0, 1.0, mid))


def chi_second(x):
    x = np.asarray(x, float)
    return np.where(np.abs(x) >= 1.0, 0.0, 0.75 * (1.0 - x * x))


def smooth_max(u: ScalarField, v: ScalarField, j: float) -> ScalarField:
    """v + chi(j (u - v)) / j, decreasing to max(u, v) as j grows."""
    j = float(j)

    def fn(x):
        return v.fn(x) + chi(j * (u.fn(x) - v.fn(x))) / j

    grad = hess = None
    if u.grad is not None and v.grad is not None:
        def grad(x):
            c1 = chi_prime(j * (u.fn(x) - v.fn(x)))[:, None]
            return c1 * u.grad(x) + (1.0 - c1) * v.grad(x)

        if u.hess is not None and v.hess is not None:
            def hess(x):
                a = j * (u.fn(x) - v.fn(x))
                c1 = chi_prime(a)[:, None, None]
                c2 = chi_second(a)[:, None, None]
                da = u.grad(x) - v.grad(x)
                return c1 * u.hess(x) + (1.0 - c1) * v.hess(x) + j * c2 * np.einsum("ni,nj->nij", da, da)

    step = min(u.fd_step, v.fd_step, 0.1 / j)
    return ScalarField(fn, step, "smooth", grad, hess, f"smoothmax_{j:g}({u.name}, {v.name})")


def smooth_min(u: ScalarField, v: ScalarField, j: float) -> ScalarField:
    return u + v - smooth_max(u, v, j)


def chi_term_hessian(u: ScalarField, v: ScalarField, j: float, x) -> np.ndarray:
    """chi'(j a) Hess(a) + j chi''(j a) (zeta_p conj(zeta_q)), a = u - v, in the (N, 10) layout.

    zeta_p = sum_l e_l da/dx^p_l is the first Dirac derivative of a in q_p.
    """
    from .hermitian import matrix_to_herm, outer, split

    x = np.atleast_2d(np.asarray(x, float))
    a = j * (u(x) - v(x))
    ha = octonionic_hessian_vec(u, x) - octonionic_hessian_vec(v, x)
    zeta = split(real_gradient(u, x) - real_gradient(v, x))
    g = matrix_to_herm(outer(zeta, zeta), check=False)
    return chi_prime(a)[:, None] * ha + (j * chi_second(a))[:, None] * g


@dataclass(frozen=True)
class BlockiLevel:
    j: float
    residual: MeasureEstimate          # integral of psi * (det W - det(W, U + V) + det(U, V))
    min_residual: MeasureEstimate      # the corresponding min{u, v} identity residual
    terms: tuple[MeasureEstimate, ...]  # det W, det(W, U+V), det(U, V)

    @property
    def largest_term(self) -> float:
        return max(abs(t.value) for t in self.terms)


def blocki_residual(u: ScalarField, v: ScalarField, psi: TestFunction, levels=(2, 4, 8), n: int = DEFAULT_N,
                    seed: int | None = 0, method: str = "auto", threads: int | None = None) -> list[BlockiLevel]:
    """Residuals of the max and min identities with max{u, v} replaced by ``smooth_max(u, v, j)``."""
    _require_c2(u, v)
    prop = _weight_proposal(psi)
    ws = [smooth_max(u, v, j) for j in levels]

    def cols(x):
        w0 = psi.value(x)
        hu = _hess(u, x, method)
        hv = _hess(v, x, method)
        duv = herm_mixed_det(hu, hv)
        out = []
        for w in ws:
            hw = _hess(w, x, method)
            dw = herm_det(hw)
            dwuv = herm_mixed_det(hw, hu + hv)
            res = dw - dwuv + duv
            # det(U + V - W) - (det U + det V - det W)
            res_min = herm_det(hu + hv - hw) - herm_det(hu) - herm_det(hv) + dw
            out.extend([w0 * res, w0 * res_min, w0 * dw, w0 * dwuv, w0 * duv])
        return np.stack(out, axis=1)

    means = _integrate_columns(cols, prop, n, seed, threads)
    result = []
    for k, j in enumerate(levels):
        m = means[:, 5 * k : 5 * k + 5]
        est = [estimate(m[:, c], n, seed) for c in range(5)]
        result.append(BlockiLevel(float(j), est[0], est[1], tuple(est[2:])))
    return result


def ma_l1_bound(f: ScalarField, psi: TestFunction, n: int = DEFAULT_N, seed: int | None = 0):
    """Estimates of (psi * ||Hess f||_1, psi * det(Hess f, I)) with ||A|| = |a| + |b| + 2|q|."""
    prop = _weight_proposal(psi)
    from .octonion import onorm

    def cols(x):
        h = _hess(f, x, "auto")
        w = psi.value(x)
        nrm = np.abs(h[:, 0]) + np.abs(h[:, 1]) + 2.0 * onorm(h[:, 2:])
        return np.stack([w * nrm, w * 0.5 * (h[:, 0] + h[:, 1])], axis=1)

    m = _integrate_columns(cols, prop, n, seed)
    return estimate(m[:, 0], n, seed), estimate(m[:, 1], n, seed)

