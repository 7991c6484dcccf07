import json

import numpy as np
import pytest

from octoval import calculus as calc
from octoval import valuation as val
from octoval.errors import CapabilityError, DomainError, ParseError, PreconditionError
from octoval.hermitian import det
from octoval.measure import TestFunction

N = 1 << 13
E0 = np.r_[1.0, np.zeros(15)]


def _ellipsoid(rng, center_spread=0.2):
    a = rng.standard_normal((16, 16))
    return val.Ellipsoid(rng.uniform(-center_spread, center_spread, 16), a @ a.T / 16 + 0.3 * np.eye(16))


def _bodies(rng):
    return [
        val.Ball(rng.standard_normal(16), 0.7),
        _ellipsoid(rng),
        val.Polytope(rng.standard_normal((20, 16))),
        val.Box(-rng.random(16), rng.random(16)),
    ]


def test_support_examples(rng):
    x = rng.standard_normal(16)
    assert val.support(val.Ball(np.zeros(16), 1.0), x) == pytest.approx(np.linalg.norm(x))
    p = rng.standard_normal(16)
    assert val.support(val.singleton(p), x) == pytest.approx(p @ x)
    t = rng.standard_normal(16)
    for k in _bodies(rng):
        assert val.support(k.translate(t), x) == pytest.approx(val.support(k, x) + t @ x)


def test_support_is_sublinear(rng):
    x, y = rng.standard_normal((2, 1000, 16))
    for k in _bodies(rng):
        hx, hy, hxy = k.support(x), k.support(y), k.support(x + y)
        assert np.all(hxy <= hx + hy + 1e-12 * (1 + np.abs(hx) + np.abs(hy)))
        assert np.allclose(k.support(2.5 * x), 2.5 * hx)


def test_box_matches_vertex_polytope(rng):
    b = val.Box(-rng.random(16), rng.random(16), offset=rng.standard_normal(16), scale=1.3)
    x = rng.standard_normal((20, 16))
    assert np.allclose(b.support(x), b.as_polytope().support(x))


def test_body_validation():
    with pytest.raises(DomainError):
        val.Ball(np.zeros(16), 0.0)
    with pytest.raises(DomainError):
        val.Ellipsoid(np.zeros(16), -np.eye(16))
    with pytest.raises(DomainError):
        val.Box(np.ones(16), np.zeros(16))
    with pytest.raises(DomainError):
        val.Polytope(np.zeros((3, 15)))


def test_body_json_round_trip(rng, tmp_path):
    for k in _bodies(rng):
        path = tmp_path / "body.json"
        path.write_text(json.dumps(k.to_json()))
        back = val.load_body(str(path))
        x = rng.standard_normal((5, 16))
        assert np.allclose(back.support(x), k.support(x))
    with pytest.raises(ParseError):
        val.body_from_json({"type": "cone"})
    with pytest.raises(ParseError):
        val.body_from_json({"type": "ball"})


def test_lse_examples(rng):
    p = rng.standard_normal(16)
    x = rng.standard_normal((50, 16))
    f = val.smooth_support(val.singleton(p), val.Smoothing("lse", 10.0))
    assert np.allclose(f(x), x @ p)
    for k in (val.Polytope(rng.standard_normal((30, 16))), val.Box(-rng.random(16), rng.random(16))):
        for beta in (8.0, 64.0):
            u = x / np.linalg.norm(x, axis=1, keepdims=True)
            gap = val.smooth_support(k, val.Smoothing("lse", beta))(u) - k.support(u)
            assert gap.min() >= -1e-12
            assert gap.max() <= val.lse_error_bound(k, beta) + 1e-12


def test_smoothed_support_is_psh(rng):
    for k in (val.Polytope(rng.standard_normal((10, 16))), val.Box(-rng.random(16), rng.random(16))):
        assert calc.is_psh(val.smooth_support(k), n_points=32, tol=1e-8).passed


def test_smoothing_capabilities(rng):
    with pytest.raises(CapabilityError):
        val.smooth_support(val.Polytope(rng.standard_normal((3, 16))), val.Smoothing("exact"))
    with pytest.raises(DomainError):
        val.smooth_support(val.Polytope(rng.standard_normal((3, 16))), val.Smoothing("lse", -1.0))


def test_psi_valuation_of_singleton(rng):
    psi = TestFunction(np.full(16, 0.6), 0.4)
    r = val.psi_valuation(val.singleton(rng.standard_normal(16)), psi, n=N)
    assert r.value == 0.0


def test_psi_valuation_homogeneity(rng):
    psi = TestFunction(np.full(16, 0.6), 0.4)
    for k in (_ellipsoid(rng), val.Box(-rng.random(16), rng.random(16))):
        base = val.psi_valuation(k, psi, n=N, seed=1).value
        assert val.psi_valuation(k.scaled(1.7), psi, n=N, seed=1).value == pytest.approx(1.7**2 * base, rel=1e-12)
        assert val.psi_valuation(k.translate(rng.standard_normal(16)), psi, n=N, seed=1).value == pytest.approx(
            base, rel=1e-12)


def test_psi_valuation_excludes_the_apex(rng):
    psi = TestFunction(np.zeros(16), 0.5)
    r = val.psi_valuation(val.Ball(np.zeros(16), 1.0), psi, n=N)
    assert r.std_error >= val.exclusion_bound(val.Ball(np.zeros(16), 1.0), val.EXCLUSION_RADIUS)
    with pytest.raises(PreconditionError):
        val.psi_valuation(val.Ball(np.zeros(16), 1.0), psi, n=N, exclusion=0.0)


def test_pseudo_volume_exact_symmetries(rng):
    for k in (_ellipsoid(rng), val.Box(-rng.random(16), rng.random(16))):
        base = val.pseudo_volume(k, n=N, seed=2).value
        assert val.pseudo_volume(k.translate(rng.standard_normal(16)), n=N, seed=2).value == pytest.approx(
            base, rel=1e-12)
        assert val.pseudo_volume(k.scaled(0.6), n=N, seed=2).value == pytest.approx(0.36 * base, rel=1e-12)


def test_pseudo_volume_of_unit_ball():
    # det of the octonionic Hessian of |x| is radial and (-2)-homogeneous; fix it by FD at e0
    c0 = det(calc.octonionic_hessian(calc.euclidean_norm(), E0, method="fd", richardson=True))
    r = val.pseudo_volume(val.Ball(np.zeros(16), 1.0), n=1 << 14)
    assert abs(r.value - val.ball_pseudo_volume_oracle(c0)) <= 3 * r.std_error


def test_pseudo_volume_spin9_invariant(ctx, rng):
    k = _ellipsoid(rng)
    g = ctx.sample_spin9(seed=9)
    means, _ = val.pseudo_volume_batches([k, k.transform(g.g16)], n=N, seed=3)
    from octoval.sampling import estimate

    assert estimate(means[:, 1] - means[:, 0], N, 3).within(0.0, 3.0)


def test_pinned_rotation_witness():
    w = val.load_rotation_witness()
    assert np.abs(w.rotation @ w.rotation.T - np.eye(16)).max() < 1e-10
    assert isinstance(w.body, val.Ellipsoid)
    assert json.loads(json.dumps(w.to_json()))["rotation_seed"] == w.rotation_seed


def test_witness_rejects_non_rotations():
    data = val.load_rotation_witness().to_json()
    data["rotation"] = (-np.eye(16)[::-1]).tolist()
    data["rotation"][0][0] = 2.0
    with pytest.raises(ParseError):
        val.RotationWitness.from_json(data)


def test_additivity_trivial_cases(rng):
    psi = TestFunction(np.full(16, 0.6), 0.4)
    big = val.Box(-np.ones(16), np.ones(16))
    small = val.Box(-0.5 * np.ones(16), 0.5 * np.ones(16))
    for k1, k2 in ((big, big), (small, big)):
        for lvl in val.additivity_residual(k1, k2, psi, n=N):
            assert lvl.residual.within(0.0, 1.0, slack=1e-12 * lvl.largest_term)


def test_additivity_overlapping_boxes(rng):
    psi = TestFunction(np.full(16, 0.6), 0.4)
    lo, hi = -rng.random(16), rng.random(16)
    lo2, hi2 = lo.copy(), hi.copy()
    lo2[3], hi2[3] = lo[3] + 0.5 * (hi[3] - lo[3]), hi[3] + 0.4
    k1, k2 = val.Box(lo, hi), val.Box(lo2, hi2)
    assert val.boxes_union_convex(k1, k2)
    levels = val.additivity_residual(k1, k2, psi, n=N)
    finest = levels[-1]
    assert abs(finest.residual.value) <= 2 * finest.residual.std_error + 1e-2 * finest.largest_term


def test_additivity_rejects_nonconvex_union(rng):
    k1 = val.Box(np.zeros(16), np.ones(16))
    k2 = val.Box(np.full(16, 2.0), np.full(16, 3.0))
    assert not val.boxes_union_convex(k1, k2)
    with pytest.raises(PreconditionError):
        val.additivity_residual(k1, k2, TestFunction(np.zeros(16), 0.5), n=N)


def test_t_valuation_examples(rng):
    assert val.t_valuation(_ellipsoid(rng), 0).value == 1.0
    r = val.t_valuation(val.Ball(np.zeros(16), 0.8), 8, n_lines=256)
    assert r.value == pytest.approx(np.pi**4 / 24 * 0.8**8, rel=1e-12)
    assert r.std_error == pytest.approx(0.0, abs=1e-15)
    for i in range(1, 8):
        assert val.t_valuation(val.Ball(np.zeros(16), 0.8), i, n_lines=64).std_error == pytest.approx(0.0, abs=1e-15)


def test_t_valuation_ellipsoid_matches_projector_oracle(rng):
    k = _ellipsoid(rng)
    r = val.t_valuation(k, 8, n_lines=1 << 12, seed=0)
    oracle = val.ellipsoid_projection_oracle(k.shape, 1 << 12, seed=1)
    assert abs(r.value - oracle.value) <= 3 * np.hypot(r.std_error, oracle.std_error)


def test_t_valuation_capabilities(rng):
    with pytest.raises(CapabilityError):
        val.t_valuation(_ellipsoid(rng), 4)
    with pytest.raises(CapabilityError):
        val.t_valuation(val.Polytope(np.eye(16)), 8)
    with pytest.raises(DomainError):
        val.t_valuation(val.Ball(np.zeros(16), 1.0), 9)


@pytest.mark.parametrize("r", [0.5, 1.0, 1.3])
def test_u_valuation_endpoints(r):
    ball = val.Ball(np.zeros(16), r)
    assert val.u_valuation_quadrature(ball, 16) == pytest.approx(np.pi**8 / 40320 * r**16, rel=1e-12)
    assert val.u_valuation_quadrature(ball, 8) == pytest.approx(np.pi**4 / 24 * r**8, rel=1e-12)


def test_u_valuation_monte_carlo():
    ball = val.Ball(np.zeros(16), 0.9)
    for j in (8, 12, 16):
        exact, mc = val.u_valuation(ball, j, n_lines=1 << 12)
        assert abs(mc.value - exact) <= 3 * mc.std_error


def test_u_valuation_capabilities(rng):
    with pytest.raises(CapabilityError):
        val.u_valuation(_ellipsoid(rng), 10)
    with pytest.raises(DomainError):
        val.u_valuation_quadrature(val.Ball(np.zeros(16), 1.0), 7)


def test_intrinsic_volumes_of_balls():
    assert val.ball_intrinsic_volume(0, 8, 2.0) == pytest.approx(1.0)
    assert val.ball_intrinsic_volume(8, 8, 2.0) == pytest.approx(val.ball_volume(8, 2.0))
    # V_1 of a d-ball is the mean width times a constant: d kappa_d / kappa_(d-1) r
    assert val.ball_intrinsic_volume(1, 3, 1.0) == pytest.approx(4.0)
