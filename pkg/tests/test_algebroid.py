import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from transalg import algebroid as A
from transalg import lie
from transalg.field import ramp
from transalg.groups import SU2, SL2Cover
from transalg.lattice import CentralLattice
from test_lie import su2_matrix, matrix_to_su2

coord = st.floats(0.02, 0.98)


@pytest.mark.parametrize("lam", [0.5, 2.7, -1.3])
def test_abelian_total_curvature_is_lambda(lam):
    p = A.abelian_bump(lam)
    # tensor Gauss-Legendre rule on the support [0.1, 0.9]^2
    x, w = np.polynomial.legendre.leggauss(300)
    u, wu = 0.5 + 0.4 * x, 0.4 * w
    s, t = np.meshgrid(u, u, indexing="ij")
    total = float(np.einsum("i,j,ij->", wu, wu, A.curvature(p, s, t)[..., 0]))
    assert total == pytest.approx(lam, abs=1e-6)


def test_abelian_curvature_closed_form():
    p = A.abelian_bump(2.0)
    s, t = np.meshgrid(np.linspace(0.05, 0.95, 13), np.linspace(0.05, 0.95, 13))
    from transalg.field import bump

    b = lambda u: bump((u - 0.1) / 0.8) / 0.8
    assert np.allclose(A.curvature(p, s, t)[..., 0], 2.0 * b(s) * b(t), atol=1e-6)


@pytest.mark.parametrize("name", ["trivial", "abelian-bump", "su2-clutch", "sl2-clutch"])
def test_presets_vanish_on_three_sides(name):
    p = A.load_presentation(name)
    u = np.linspace(0, 1, 57)
    for s, t in [(np.zeros_like(u), u), (np.ones_like(u), u), (u, np.ones_like(u)), (u * 0.1, u)]:
        a, b = p.theta(s, t)
        assert np.max(np.abs(a)) <= 1e-12 and np.max(np.abs(b)) <= 1e-12


def test_presentation_validation():
    with pytest.raises(A.PresentationError, match="vanish"):
        A.presentation_from_exprs("abelian:1", ["s"], ["0"])
    with pytest.raises(A.PresentationError, match="coefficients"):
        A.presentation_from_exprs("su2", ["0"], ["0", "0", "0"])
    with pytest.raises(A.PresentationError, match="flat_margin"):
        A.abelian_bump(1.0, flat_margin=0.3)
    with pytest.raises(A.PresentationError, match="evaluate"):
        A.presentation_from_exprs("abelian:1", ["1/(s-0.5)"], ["0"])
    with pytest.raises(A.PresentationError):
        A.presentation_from_exprs("su2", ["0"] * 3, ["0"] * 3, backend="Abelian(1)")


def test_bottom_side_is_free():
    # only the left, right and top sides must be flat; the bottom carries the clutching data
    p = A.presentation_from_exprs("abelian:1", ["bump((s-0.1)/0.8)*(1-ramp((t-0.1)/0.8))"], ["0"])
    assert p.theta(0.5, 0.0)[0][0] > 0


def test_load_presentation_forms(tmp_path):
    assert A.load_presentation("abelian-bump(2.7)").lam == 2.7
    assert A.load_presentation({"preset": "abelian-bump", "lam": 0.5}).lam == 0.5
    assert A.load_presentation({"preset": "trivial", "algebra": "su2"}).algebra.dim == 3
    p = A.abelian_bump(1.5)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(p.to_json()))
    q = A.load_presentation(str(path))
    s, t = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9))
    assert np.allclose(p.theta(s, t)[0], q.theta(s, t)[0])
    assert A.load_presentation({"clutch": {"k": "su2"}}).backend == SU2()
    for bad in ["nope", {"preset": "nope"}, {"preset": "su2-clutch", "algebra": "su2"}, {"algebra": "su2"}, {"algebra": "su2", "theta_s": [], "theta_t": [], "x": 1}, 3]:
        with pytest.raises(A.PresentationError):
            A.load_presentation(bad)


def test_to_json_rejects_non_expression_fields():
    with pytest.raises(A.PresentationError):
        A.clutch_to_square(A.load_clutching({"k": "su2"})).to_json()


# -- gauge transformations ------------------------------------------------------


def su2_gauge(rng, psi=None):
    c = rng.normal(size=(3, 3))
    env = "bump((s-0.15)/0.7)*bump((t-0.15)/0.7)*0.2"
    mu = [f"{env}*({c[i, 0]:.4f}+{c[i, 1]:.4f}*s+{c[i, 2]:.4f}*t)" for i in range(3)]
    return A.GaugeTransformation(lie.su2(), np.eye(3) if psi is None else psi, tuple(mu), support_margin=0.1)


def test_gauge_action_matches_matrix_formula(rng):
    p = A.random_polynomial_presentation("su2", rng)
    g = su2_gauge(rng)
    q = A.apply_gauge(p, g)
    h = 1e-6
    for s, t in rng.uniform(0.2, 0.8, size=(5, 2)):
        fmat = lambda a, b: expm(su2_matrix(g.mu_values(a, b)))
        f = fmat(s, t)
        fi = np.linalg.inv(f)
        ths, tht = p.theta(s, t)
        dfs = (fmat(s + h, t) - fmat(s - h, t)) / (2 * h)
        dft = (fmat(s, t + h) - fmat(s, t - h)) / (2 * h)
        want_s = matrix_to_su2(f @ su2_matrix(ths) @ fi - dfs @ fi)
        want_t = matrix_to_su2(f @ su2_matrix(tht) @ fi - dft @ fi)
        got_s, got_t = q.theta(s, t)
        assert np.allclose(got_s, want_s, atol=1e-7)
        assert np.allclose(got_t, want_t, atol=1e-7)


def test_gauge_transforms_curvature_covariantly(rng):
    p = A.random_polynomial_presentation("su2", rng)
    rot = lie.adjoint_exp(lie.su2(), np.array([0.3, -0.2, 0.9]))
    g = su2_gauge(rng, psi=rot)
    q = A.apply_gauge(p, g)
    s, t = rng.uniform(0.2, 0.8, size=(2, 6))
    f_before = A.curvature(p, s, t)
    f_after = A.curvature(q, s, t)
    ad = g.ad_f(g.mu_values(s, t))
    want = np.einsum("nij,jk,nk->ni", ad, rot, f_before)
    assert np.allclose(f_after, want, atol=1e-5)


def test_kernel_pair_leaves_theta_unchanged(rng):
    p = A.random_polynomial_presentation("su2", rng)
    c = np.array([0.0, 0.0, 2 * math.pi])  # exp(c) = -1
    g = A.GaugeTransformation.constant(lie.su2(), -c, psi=lie.adjoint_exp(lie.su2(), c))
    q = A.apply_gauge(p, g)
    s, t = np.meshgrid(np.linspace(0, 1, 31), np.linspace(0, 1, 31))
    for a, b in zip(p.theta(s, t), q.theta(s, t)):
        assert np.max(np.abs(a - b)) <= 1e-10


def test_gauge_errors():
    with pytest.raises(A.GaugeError, match="automorphism"):
        A.GaugeTransformation(lie.su2(), np.diag([1.0, 1.0, 2.0]), ("0", "0", "0"))
    with pytest.raises(A.GaugeError, match="components"):
        A.GaugeTransformation(lie.su2(), np.eye(3), ("0",))
    with pytest.raises(A.GaugeError, match="identity"):
        A.GaugeTransformation(lie.abelian(1), np.eye(1), ("s",), support_margin=0.1)
    with pytest.raises(A.GaugeError):
        A.apply_gauge(A.abelian_bump(1.0), A.GaugeTransformation.identity(lie.su2()))
    # a gauge that is not the identity near the flat sides breaks the framing
    with pytest.raises(A.GaugeError, match="support"):
        A.apply_gauge(A.abelian_bump(1.0), A.GaugeTransformation(lie.abelian(1), np.eye(1), ("s*t",)))


# -- connected sums and clutching ----------------------------------------------


@given(coord, coord)
def test_connect_sum_layout(s, t):
    p1, p2 = A.abelian_bump(1.0), A.abelian_bump(-2.0)
    q = A.connect_sum(p1, p2)
    got = q.theta(s, t)[0][0]
    if s < 0.5:
        want = 2 * p2.theta(2 * s, t)[0][0]
    else:
        want = 2 * p1.theta(2 * s - 1, t)[0][0]
    assert got == pytest.approx(want, abs=1e-12)
    assert q.flat_margin == pytest.approx(0.05)


def test_connect_sum_requires_matching_data():
    with pytest.raises(A.PresentationError):
        A.connect_sum(A.abelian_bump(1.0), A.su2_clutch())
    with pytest.raises(A.PresentationError):
        A.connect_sum(A.su2_clutch(), A.trivial("su2", backend="SL2Cover"))


def test_clutching_path_matches_matrix_exponential():
    c = A.load_clutching({"k": "su2"})
    taus = np.linspace(0, 1, 11)
    ks = c.path(np.linspace(0, 1, 4001))[::400]
    for tau, k in zip(taus, ks):
        angle = 2 * math.pi * float(ramp((tau - 0.1) / 0.8))
        want = expm(su2_matrix([0, 0, angle]))
        w, x, y, z = k
        got = w * np.eye(2) + su2_matrix(2 * np.array([x, y, z]))
        assert np.allclose(got, want, atol=1e-6)
    assert np.allclose(c.endpoint().array, [-1, 0, 0, 0], atol=1e-6)


def test_sl2_clutching_ends_at_center_generator():
    c = A.load_clutching({"k": "sl2"})
    end = c.endpoint().array
    assert SL2Cover().central_index(end, 1e-6) == 1


def test_clutching_from_samples_reproduces_one_parameter_path():
    b = SU2()
    x = np.array([0.4, -1.1, 0.7])
    taus = np.linspace(0, 1, 41)
    ramp_tau = np.clip((taus - 0.15) / 0.7, 0, 1)
    ks = b.exp(ramp_tau[:, None] * x)
    c = A.clutching_from_samples(b, ks, margin=0.1)
    assert b.dist(b.mul(b.inv(c.endpoint().array), b.exp(x))) <= 1e-9


def test_clutching_validation():
    b = SU2()
    with pytest.raises(A.PresentationError, match="sitting"):
        A.ClutchingPresentation(b.algebra(), b, lambda tau: np.ones((len(tau), 3)))
    with pytest.raises(A.PresentationError, match="identity"):
        A.clutching_from_samples(b, b.exp(np.ones((5, 3))))
    with pytest.raises(A.PresentationError):
        A.load_clutching({"k": "so3"})
    with pytest.raises(A.PresentationError):
        A.load_clutching({"k": [[1, 0, 0, 0]] * 3})


# -- the induced connection ------------------------------------------------------


def test_center_is_flat_for_direct_sum(rng):
    alg = lie.direct_sum(lie.abelian(1), lie.su2())
    p = A.random_polynomial_presentation(alg, rng)
    assert p.backend is None
    d = A.induced_connection(p)
    assert A.center_flatness_defect(d, [1.0, 0, 0, 0], grid=41) <= 5e-6


def test_connection_curvature_matches_holonomy_of_small_loops(rng):
    # independent oracle for F: log of the holonomy around a shrinking square, divided by its area.
    # The loop is based at a corner, so the estimate sees F conjugated by an O(eps) transport and
    # converges at first order; one Richardson step removes that term.
    from transalg import holonomy as H

    p = A.random_polynomial_presentation("su2", rng)
    b = p.backend
    lat = CentralLattice(b, ())
    for s0, t0 in rng.uniform(0.3, 0.7, size=(3, 2)):
        est = []
        for eps in (1e-3, 5e-4):
            loop = H.rectangle_loop(s0 - eps / 2, s0 + eps / 2, t0 - eps / 2, t0 + eps / 2, 40)
            est.append(b.log(H.hol(p, loop, lat).array) / eps**2)
        richardson = 2 * est[1] - est[0]
        f = A.curvature(p, s0, t0)
        assert np.allclose(richardson, f, atol=1e-3 * max(1.0, np.linalg.norm(f)))


def test_random_presentation_is_interior(rng):
    p = A.random_polynomial_presentation("su2", rng, scale=2.0)
    u = np.linspace(0, 1, 41)
    a, _ = p.theta(u, np.zeros_like(u))
    assert np.max(np.abs(a)) == 0.0
    s, t = np.meshgrid(u, u)
    assert np.max(np.abs(p.theta(s, t)[0])) > 0.1
