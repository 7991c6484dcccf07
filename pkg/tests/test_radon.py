import numpy as np
import pytest
from scipy.optimize import least_squares

from octoval import calculus as calc
from octoval import radon
from octoval.errors import DomainError, NumericalFailure

TWO_PI_4 = (2 * np.pi) ** 4


def test_delta4_at_zero_two_ways():
    assert radon.laplacian_power_at_zero_hermite() == 13440
    assert radon.laplacian_power_at_zero_gamma() == pytest.approx(13440.0, rel=1e-14)
    assert radon.radial_laplacian_polynomial()[0] == pytest.approx(13440.0)


def test_radial_polynomial_first_step():
    # Delta exp(-r^2/2) = (r^2 - 8) exp(-r^2/2) in R^8
    assert np.allclose(radon.radial_laplacian_polynomial(1), [-8.0, 1.0])
    assert np.allclose(radon.radial_laplacian_polynomial(4), [13440, -6720, 1008, -56, 1])


def test_inversion_constant():
    c = radon.inversion_constant()
    assert c != 0
    assert c == pytest.approx(13440 * TWO_PI_4, rel=1e-14)
    for s in (0.5, 2.0):
        assert radon.inversion_constant(s) == pytest.approx(c, rel=1e-14)


def test_radon_of_standard_gaussian(rng):
    f = calc.gaussian(1.0)
    line = radon.AffineLine(rng.standard_normal(16))
    est = radon.radon_transform(f, line, n=1 << 10)
    assert est.value == pytest.approx(TWO_PI_4, rel=1e-12)
    assert est.std_error < 1e-9 * TWO_PI_4
    shifted = radon.AffineLine(rng.standard_normal(16), rng.standard_normal(16))
    d = radon.line_distance(shifted)
    est = radon.radon_transform(f, shifted, n=1 << 12)
    assert abs(est.value - TWO_PI_4 * np.exp(-d * d / 2)) <= 3 * est.std_error + 1e-12


def test_radon_of_zero(rng):
    line = radon.AffineLine(rng.standard_normal(16), rng.standard_normal(16))
    assert radon.radon_transform(calc.constant(0.0), line, n=256).value == 0.0


def test_closed_form_image_matches_quadrature(rng):
    img = radon.GaussianImage.single(0.8, rng.uniform(-0.5, 0.5, 16)) - radon.GaussianImage.single(1.2)
    line = radon.AffineLine(rng.standard_normal(16), rng.uniform(-1, 1, 16))
    est = radon.radon_transform(img.source(), line, n=1 << 14, scale=1.2)
    assert abs(est.value - img.line_function()(line)) <= 3 * est.std_error


def test_radon_equivariance(ctx, rng):
    g = ctx.sample_spin9(seed=8)
    gi = np.linalg.inv(g.g16)
    f = radon.GaussianImage.single(0.9, rng.uniform(-0.5, 0.5, 16)).source()
    line = radon.AffineLine(rng.standard_normal(16), rng.uniform(-1, 1, 16))
    moved = radon.AffineLine(gi @ line.direction, gi @ line.base)
    a = radon.radon_transform(f.pullback(gi), line, n=1 << 14, seed=1, scale=1.5)
    b = radon.radon_transform(f, moved, n=1 << 14, seed=2, scale=1.5)
    assert abs(a.value - b.value) <= 3 * np.hypot(a.std_error, b.std_error)


def test_line_distance_against_minimisation(rng):
    line = radon.AffineLine(rng.standard_normal(16), rng.standard_normal(16))
    perp = radon.perp_frame(line.frame())
    assert np.abs(perp @ line.frame().T).max() < 1e-12
    w = perp.T @ rng.standard_normal(8)
    moved = radon.AffineLine(line.direction, line.base + w)
    fit = least_squares(lambda x: moved.point(x), np.zeros(8), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    direct = np.linalg.norm(moved.point(fit.x))
    assert radon.line_distance(moved) == pytest.approx(direct, abs=1e-8)
    expected = np.linalg.norm(perp.T @ (perp @ line.base) + w)
    assert radon.line_distance(moved) == pytest.approx(expected, abs=1e-12)


def test_chart_units_match_scalar_charts(rng):
    xi = rng.standard_normal((20, 16))
    got = radon.chart_units(xi)
    for row, u in zip(xi, got):
        assert np.allclose(u, calc.AffineLine(row).unit)


def test_inverse_operator_reproduces_gaussian(rng):
    img = radon.GaussianImage.single()
    c = radon.inversion_constant()
    est = radon.inverse_operator_at(img, np.zeros(16), n_lines=64)
    assert est.value == pytest.approx(c, rel=1e-12)
    q = rng.uniform(-1, 1, 16)
    q *= 0.9 / np.linalg.norm(q)
    est = radon.inverse_operator_at(img, q, n_lines=1 << 14)
    assert est.value / c == pytest.approx(np.exp(-q @ q / 2), rel=3e-3)


def test_inverse_operator_of_constant_is_zero():
    const = radon.LineFunction(lambda u, b: np.full(b.shape[0], 3.0))
    est = radon.inverse_operator_at(const, np.zeros(16), n_lines=16, mode="fd")
    assert abs(est.value) < 1e-6


def test_inverse_operator_linearity(rng):
    a = radon.GaussianImage.single(0.8, rng.uniform(-0.3, 0.3, 16))
    b = radon.GaussianImage.single(1.3, rng.uniform(-0.3, 0.3, 16), weight=-0.5)
    q = rng.uniform(-0.5, 0.5, 16)
    parts = [radon.inverse_operator_at(g, q, n_lines=1 << 10, seed=4).value for g in (a, b)]
    total = radon.inverse_operator_at(a + b, q, n_lines=1 << 10, seed=4).value
    assert total == pytest.approx(sum(parts), rel=1e-12)


def test_injectivity_on_difference_of_gaussians(rng):
    img = radon.GaussianImage.single(1.0, rng.uniform(-0.3, 0.3, 16)) - radon.GaussianImage.single(1.4)
    f = img.source()
    c = radon.inversion_constant()
    for _ in range(3):
        q = rng.uniform(-0.4, 0.4, 16)
        est = radon.inverse_operator_at(img, q, n_lines=1 << 14, seed=5)
        assert est.value == pytest.approx(c * f(q), rel=1e-2)


def test_fd_mode_matches_closed_form(rng):
    img = radon.GaussianImage.single(1.0, rng.uniform(-0.3, 0.3, 16))
    q = rng.uniform(-0.3, 0.3, 16)
    a = radon.inverse_operator_at(img, q, n_lines=16, seed=6, mode="analytic-gaussian")
    b = radon.inverse_operator_at(img, q, n_lines=16, seed=6, mode="fd")
    assert b.value == pytest.approx(a.value, rel=2e-3)


def test_fd_delta4_on_polynomials(rng):
    # in R^8, Delta r^(2m) = 2m (2m + 6) r^(2m - 2); a degree-8 polynomial has no truncation error
    expect = 1.0
    for m in (4, 3, 2, 1):
        expect *= 2 * m * (2 * m + 6)
    val, _ = radon.fd_delta4(lambda w: np.einsum("ni,ni->n", w, w) ** 4, h=0.5)
    assert val == pytest.approx(expect, rel=1e-9)


def test_fd_delta4_detects_cancellation():
    with pytest.raises(NumericalFailure):
        radon.fd_delta4(lambda w: np.exp(-np.einsum("ni,ni->n", w, w) / 2), h=0.05)


def test_inverse_operator_validation():
    with pytest.raises(DomainError):
        radon.inverse_operator_at(radon.GaussianImage.single(), np.zeros(15))
    with pytest.raises(DomainError):
        radon.inverse_operator_at(radon.GaussianImage.single(), np.zeros(16), mode="spectral")
    with pytest.raises(DomainError):
        radon.inverse_operator_at(radon.LineFunction(lambda u, b: b[:, 0]), np.zeros(16))
