import numpy as np
import pytest

from octoval import calculus as calc
from octoval import hermitian as herm
from octoval import measure as meas
from octoval.errors import DomainError, PreconditionError

PSI = meas.TestFunction(np.zeros(16), 0.5)


def test_bump_integral_and_derivatives(rng):
    b = meas.TestFunction.random(rng)
    f = b.field()
    x = b.center + 0.3 * rng.uniform(-1, 1, (4, 16)) * b.half_widths
    assert np.allclose(calc.real_gradient(f, x, method="fd"), b.gradient(x), rtol=1e-4, atol=1e-7)
    assert np.allclose(calc.real_hessian(f, x, method="fd", richardson=True), b.hessian(x), atol=1e-6)
    lo, hi = b.box
    assert b.value(hi + 0.01)[0] == 0.0
    # a one-dimensional check of the closed-form integral
    one = meas.TestFunction(np.zeros(16), 1.0)
    t = np.linspace(-1, 1, 200001)
    assert np.trapezoid((1 - t * t) ** 4, t) ** 16 == pytest.approx(one.integral(), rel=1e-8)


def test_bump_validation():
    with pytest.raises(DomainError):
        meas.TestFunction(np.zeros(16), 0.0)
    with pytest.raises(DomainError):
        meas.TestFunction(np.zeros(16), 1.0, power=2)


def test_ma_integral_of_norm_square():
    est = meas.ma_integral(calc.normsq(), PSI, n=1 << 12)
    assert est.value == pytest.approx(256 * PSI.integral(), rel=1e-12)


def test_ma_integral_of_linear_field(rng):
    est = meas.ma_integral(calc.linear(rng.standard_normal(16)), PSI, n=1 << 12)
    assert est.value == 0.0


def test_ma_integral_of_embedded_form(rng):
    v = herm.random_hermitian(rng, 1)[0]
    est = meas.ma_integral(calc.quadratic_form(herm.herm_embed(v)), PSI, n=1 << 12)
    assert est.value == pytest.approx(256 * float(herm.herm_det(v)) * PSI.integral(), rel=1e-10)


def test_ma_integral_rejects_continuous_fields():
    with pytest.raises(PreconditionError):
        meas.ma_integral(calc.euclidean_norm(), PSI)


def test_mixed_integral_examples(rng):
    f = meas.TestFunction.random(rng).field() + calc.normsq1()
    a = meas.ma_integral(f, PSI, n=1 << 12, seed=3)
    b = meas.mixed_ma_integral(f, f, PSI, n=1 << 12, seed=3)
    assert a.value == b.value
    z = meas.mixed_ma_integral(calc.normsq(), calc.linear(np.ones(16)), PSI, n=1 << 12)
    assert z.value == 0.0
    g = calc.random_quartic(rng)
    m1 = meas.mixed_ma_integral(calc.normsq1(), g, PSI, n=1 << 12, seed=1)
    m2 = meas.mixed_ma_integral(g, calc.normsq1(), PSI, n=1 << 12, seed=1)
    assert m1.value == pytest.approx(m2.value, rel=1e-12)
    assert m1.value >= -3 * m1.std_error


def test_stability_in_sup_norm(rng):
    f = calc.random_quartic(rng)
    bump = meas.TestFunction(np.full(16, 0.1), 0.4).field()
    base = meas.ma_integral(f, PSI, n=1 << 12, seed=2).value
    diffs = [abs(meas.ma_integral(f + eps * bump, PSI, n=1 << 12, seed=2).value - base) for eps in (1e-3, 2e-3, 4e-3)]
    c = diffs[1] / 2e-3
    assert diffs[2] <= 2 * c * 4e-3


def test_mollified_norm_integrals_converge():
    vals = [meas.ma_integral(calc.mollify(calc.euclidean_norm(), calc.Mollifier(n), quad_points=256), PSI,
                             n=1 << 12, seed=0) for n in (1, 2, 4)]
    d1 = abs(vals[1].value - vals[0].value)
    d2 = abs(vals[2].value - vals[1].value)
    assert d2 < d1 + 3 * (vals[1].std_error + vals[2].std_error)


def test_tau_with_zero_argument(rng):
    a, b = meas.TestFunction.random(rng), meas.TestFunction.random(rng)
    zero = meas.TestFunction(a.center, a.half_widths, amplitude=0.0)
    for args in ((zero, a, b), (a, zero, b), (a, b, zero)):
        assert meas.tau(*args, n=1 << 10).value == 0.0


def test_tau_symmetric_in_last_two_exactly(rng):
    bumps = tuple(meas.TestFunction.random(rng) for _ in range(3))
    means = meas.tau_permutations(bumps, [(0, 1, 2), (0, 2, 1)], n=1 << 12, seed=4)
    assert np.allclose(means[:, 0], means[:, 1], rtol=1e-12, atol=0)


def test_tau_symmetric_in_first_two(rng):
    bumps = tuple(meas.TestFunction.random(rng) for _ in range(3))
    n = 1 << 14
    means = meas.tau_permutations(bumps, [(0, 1, 2), (1, 0, 2)], n=n, seed=5)
    d = meas.paired_difference(means, 0, 1, n, 5)
    assert d.within(0.0, 3.0)


def test_tau_disjoint_supports_and_validation():
    a = meas.TestFunction(np.zeros(16), 0.5)
    b = meas.TestFunction(np.full(16, 2.0), 0.5)
    assert meas.tau(a, a, b, n=1 << 10).value == 0.0
    with pytest.raises(PreconditionError):
        meas.tau(a, calc.normsq(), a)


def test_chi_is_a_c2_step():
    x = np.linspace(-2, 2, 4001)
    assert np.all(meas.chi(x) >= np.maximum(x, 0) - 1e-15)
    for edge in (-1.0, 1.0):
        lo, hi = edge - 1e-9, edge + 1e-9
        assert meas.chi(lo) == pytest.approx(meas.chi(hi), abs=1e-8)
        assert meas.chi_prime(lo) == pytest.approx(meas.chi_prime(hi), abs=1e-8)
        assert meas.chi_second(lo) == pytest.approx(meas.chi_second(hi), abs=1e-8)
    h = 1e-5
    fd = (meas.chi(x + h) - meas.chi(x - h)) / (2 * h)
    assert np.allclose(fd, meas.chi_prime(x), atol=1e-8)


def test_smooth_max_decreases_to_max(rng):
    u, v = calc.normsq(), calc.normsq(np.r_[0.3, np.zeros(15)])
    x = rng.uniform(-0.5, 0.5, (500, 16))
    exact = np.maximum(u(x), v(x))
    prev = np.full(len(x), np.inf)
    for j in (1, 2, 4, 8, 16):
        w = meas.smooth_max(u, v, j)(x)
        assert np.all(w >= exact - 1e-14)
        assert np.all(w <= prev + 1e-14)
        prev = w
    assert np.abs(prev - exact).max() <= 1 / 16


def test_smooth_max_is_psh(rng):
    u, v = calc.normsq(), calc.normsq(np.r_[0.3, np.zeros(15)])
    assert calc.is_psh(meas.smooth_max(u, v, 4), region=(-0.5, 0.5), n_points=128).passed


def test_chi_term_hessian_identity(rng):
    u, v = calc.random_quartic(rng), calc.normsq1()
    j = 3.0
    term = calc.ScalarField(lambda x: meas.chi(j * (u.fn(x) - v.fn(x))) / j, fd_step=1e-3)
    x = rng.uniform(-0.3, 0.3, (5, 16))
    fd = calc.octonionic_hessian_vec(term, x, method="fd", richardson=True)
    closed = meas.chi_term_hessian(u, v, j, x)
    assert np.abs(fd - closed).max() < 1e-5 * (1 + np.abs(closed).max())


def test_blocki_trivial_cases():
    u = calc.normsq()
    for v in (u, u - calc.constant(1.0)):
        for lvl in meas.blocki_residual(u, v, PSI, levels=(2, 8), n=1 << 12):
            assert abs(lvl.residual.value) <= 1e-12 * lvl.largest_term
            assert abs(lvl.min_residual.value) <= 1e-12 * lvl.largest_term


def test_blocki_crossing_pair():
    u, v = calc.normsq(), calc.normsq(np.r_[0.3, np.zeros(15)])
    levels = meas.blocki_residual(u, v, PSI, n=1 << 12)
    finest = levels[-1]
    assert abs(finest.residual.value) <= 0.05 * finest.largest_term
