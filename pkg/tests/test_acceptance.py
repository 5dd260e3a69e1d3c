"""Acceptance suite: one test and one summary line per criterion.

Reference values come from independent oracles (quadrature, matrix ODEs,
analytic derivatives, coset constructions) or from closed forms.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from conftest import ACCEPTANCE
from transalg import algebroid as A
from transalg import groupoid as G
from transalg import holonomy as H
from transalg import integrator as I
from transalg import lie
from transalg.field import bump
from transalg.groups import Abelian, DouadyFiber, GroupElement, SL2Cover, SU2, dist_to_identity, group_exp, one_param_period, sl2_matrix_of
from transalg.lattice import CentralLattice, lattice_discreteness
from test_lie import su2_matrix

SEED = 20261018


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def gdist(b, g, h):
    return float(b.dist(b.mul(b.inv(np.asarray(g, float)), np.asarray(h, float))))


def class_lattice(p):
    return CentralLattice(p.backend, (H.classify_c(p),))


PRESETS = ["abelian-bump(1)", "su2-clutch", "sl2-clutch", "trivial"]


# 1 -----------------------------------------------------------------------------------


def test_criterion_1_abelian_classification():
    errs, slowest = [], 0.0
    for lam in (0.0, 0.5, 1.0, 2.7):
        p = A.abelian_bump(lam)
        t0 = time.perf_counter()
        c = H.classify_c(p, steps=400, samples=101)
        slowest = max(slowest, time.perf_counter() - t0)
        errs.append(abs(float(c.array[0]) - lam))
    report(1, max(errs) <= 1e-6 and slowest < 2.0, f"max |c - lam| = {max(errs):.2e}, slowest run {slowest:.3f} s")


# 2 -----------------------------------------------------------------------------------


def test_criterion_2_su2_classification():
    b = SU2()
    c = H.classify_c(A.su2_clutch())
    cc = H.classify_c(A.connect_sum(A.su2_clutch(), A.su2_clutch()))
    d1 = gdist(b, c.array, [-1, 0, 0, 0])
    d2 = float(b.dist(cc.array))
    report(2, d1 <= 1e-6 and d2 <= 1e-6, f"|c - (-1)| = {d1:.2e}, |c(P#P) - e| = {d2:.2e}")


# 3 -----------------------------------------------------------------------------------


def test_criterion_3_douady_witness():
    z = [0.0, 0.0, 1.0]
    period_err = max(abs(one_param_period(DouadyFiber(s), z) - 4 * math.pi) for s in (0.1, 1.0, 4.0))
    flat = dist_to_identity(group_exp(DouadyFiber(0.0), np.multiply(4 * math.pi, z)))
    phi = float(group_exp(DouadyFiber(0.0), np.multiply(4 * math.pi, z)).array[0])
    closed = max(dist_to_identity(group_exp(DouadyFiber(s), np.multiply(4 * math.pi, z))) for s in (0.1, 1.0, 4.0))
    ok = period_err <= 1e-8 and flat >= 1 and abs(phi - 4 * math.pi) <= 1e-12 and closed <= 1e-8
    report(3, ok, f"period error {period_err:.1e}, s=0 distance {flat:.4f} (phi = {phi:.6f}), s>0 distance {closed:.1e}")


# 4 -----------------------------------------------------------------------------------


def random_gauge(alg, rng, inner_psi):
    env = "bump((s-0.15)/0.7)*bump((t-0.15)/0.7)"
    mu = []
    for _ in range(alg.dim):
        c = [float(x) for x in rng.normal(scale=0.4, size=3)]
        mu.append(f"{env}*({c[0]!r}+{c[1]!r}*s+{c[2]!r}*t)")
    psi = lie.adjoint_exp(alg, rng.normal(size=alg.dim)) if inner_psi else np.eye(alg.dim)
    return A.GaugeTransformation(alg, psi, tuple(mu), support_margin=0.1)


def test_criterion_4_gauge_invariance():
    rng = np.random.default_rng(SEED)
    worst, count = 0.0, 0
    for name in ("abelian-bump(1.3)", "su2-clutch", "sl2-clutch"):
        p = A.load_presentation(name)
        c0 = H.classify_c(p).array
        for _ in range(10):
            q = A.apply_gauge(p, random_gauge(p.algebra, rng, inner_psi=p.algebra.dim > 1))
            worst = max(worst, gdist(p.backend, c0, H.classify_c(q).array))
            count += 1
    kernel = 0.0
    s, t = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41))
    for name, mu0 in (("su2-clutch", [0, 0, 2 * math.pi]), ("sl2-clutch", [0, 0, 2 * math.pi])):
        p = A.load_presentation(name)
        assert p.backend.dist(p.backend.exp(np.array(mu0, float))) > 1  # a nontrivial central element
        pair = A.GaugeTransformation.constant(p.algebra, -np.array(mu0, float), psi=lie.adjoint_exp(p.algebra, np.array(mu0, float)))
        q = A.apply_gauge(p, pair)
        for a, b in zip(p.theta(s, t), q.theta(s, t)):
            kernel = max(kernel, float(np.max(np.abs(a - b))))
    report(4, worst <= 1e-6 and kernel <= 1e-10, f"{count} gauges, max class change {worst:.2e}; kernel pair moves theta by {kernel:.1e}")


# 5 -----------------------------------------------------------------------------------


def test_criterion_5_homomorphism():
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for _ in range(10):
        l1, l2 = rng.uniform(-3, 3, 2)
        c = H.classify_c(A.connect_sum(A.abelian_bump(l1), A.abelian_bump(l2))).array[0]
        c1 = H.classify_c(A.abelian_bump(l1)).array[0]
        c2 = H.classify_c(A.abelian_bump(l2)).array[0]
        worst = max(worst, abs(float(c - (c1 + c2))))
    b = SU2()
    pieces = {"su2": A.su2_clutch(), "trivial": A.trivial("su2")}
    for k1 in pieces:
        for k2 in pieces:
            p1, p2 = pieces[k1], pieces[k2]
            want = b.mul(H.classify_c(p1).array, H.classify_c(p2).array)
            worst = max(worst, gdist(b, H.classify_c(A.connect_sum(p1, p2)).array, want))
    report(5, worst <= 1e-6, f"10 abelian pairs and 4 su(2) combinations, max defect {worst:.2e}")


# 6 -----------------------------------------------------------------------------------


def test_criterion_6_obstructions():
    b = Abelian(1)
    lat = CentralLattice(b, (GroupElement.of(b, [1.0]), GroupElement.of(b, [math.sqrt(2)])))
    dense = not lattice_discreteness(lat).discrete
    fail = H.local_uniform_check(A.abelian_bump, (-1.0, 1.0), 101)
    ok_scan = H.local_uniform_check(A.abelian_bump, (0.5, 1.0), 101)
    ok = (
        dense
        and not fail.passed
        and fail.witness is not None
        and abs(fail.witness) <= 0.05
        and ok_scan.passed
        and abs(ok_scan.min_gap - 0.5) <= 1e-6
    )
    report(6, ok, f"<1, sqrt2> non-discrete: {dense}; [-1,1] fails at lam = {fail.witness}; [0.5,1] passes, min_gap = {ok_scan.min_gap:.9f}")


# 7 -----------------------------------------------------------------------------------


def test_criterion_7_appendix_suite():
    t0 = time.perf_counter()
    reports = G.appendix_suite()
    elapsed = time.perf_counter() - t0
    fixtures = G.fixtures()
    small = all(d.groupoid.n_arrows <= 50 for d in fixtures.values())
    invalid = next(r for r in reports if r.name == "invalid-a")
    ok = all(r.passed for r in reports) and small and elapsed < 10 and "counterexample" in invalid.detail
    report(7, ok, f"{len(fixtures)} fixtures pass, invalid fixture gives {invalid.detail}, {elapsed:.2f} s")


# 8 -----------------------------------------------------------------------------------


def test_criterion_8_hol_properties():
    p = A.abelian_bump(1.0)
    trivial = CentralLattice(Abelian(1), ())
    loop = H.rectangle_loop(0.3, 0.6, 0.25, 0.7, 100)
    radial = H.hol_contractible(p, loop, H.SampledHomotopy.radial(loop), trivial).raw
    sweep = H.hol_contractible(p, loop, H.SampledHomotopy.sweep_rectangle(0.3, 0.6, 0.25, 0.7, 100), trivial).raw
    diff = float(radial.array[0] - sweep.array[0])
    int_dist = abs(diff - round(diff))
    rng = np.random.default_rng(SEED + 8)
    worst = 0.0
    for name in PRESETS:
        q = A.load_presentation(name)
        lat = class_lattice(q)
        for _ in range(20):
            m, x, y, e = (I.random_point(rng) for _ in range(4))
            lp = H.concat(I.random_path(rng, y, m), H.concat(I.random_path(rng, x, y), I.random_path(rng, m, x)))
            worst = max(worst, H.hol_equivariance_check(q, lp, I.random_path(rng, m, e), lat))
    ok = int_dist <= 1e-6 and worst <= 1e-6
    report(8, ok, f"contractions differ by {diff:.9f} (distance to Z {int_dist:.1e}); equivariance defect {worst:.1e} over 80 pairs")


# 9 -----------------------------------------------------------------------------------


def box_integral(lam, s0, s1, t0, t1):
    b = lambda u: float(bump((u - 0.1) / 0.8) / 0.8)
    mass = lambda u0, u1: quad(b, u0, u1, epsabs=1e-13, limit=200)[0]
    return lam * mass(s0, s1) * mass(t0, t1)


def curve(u):
    u = np.asarray(u, float)
    return np.stack([0.15 + 0.7 * u, 0.3 + 0.25 * np.sin(math.pi * u)], -1)


def dcurve(u):
    return np.array([0.7, 0.25 * math.pi * math.cos(math.pi * u)])


def exact_transport(p):
    """Transport along ``curve`` by a tight matrix ODE solve (or a line integral in the abelian case)."""
    if isinstance(p.backend, Abelian):
        f = lambda u: float(np.dot([p.theta(*curve(u))[0][0], p.theta(*curve(u))[1][0]], dcurve(u)))
        return np.array([quad(f, 0, 1, epsabs=1e-14, limit=400)[0]])
    rep = su2_matrix if isinstance(p.backend, SU2) else sl2_matrix_of

    def rhs(u, y):
        g = y.view(complex).reshape(2, 2)
        ths, tht = p.theta(*curve(u))
        v = dcurve(u)
        return (g @ rep(ths * v[0] + tht * v[1])).reshape(-1).view(float)

    y0 = np.eye(2, dtype=complex).reshape(-1).view(float)
    sol = solve_ivp(rhs, (0, 1), y0, method="DOP853", rtol=1e-13, atol=1e-14)
    return sol.y[:, -1].view(complex).reshape(2, 2)


def transport_defect(p, exact, n):
    g = H.transport(p, H.SampledPath(curve(np.linspace(0, 1, n + 1)))).array
    if isinstance(p.backend, Abelian):
        return abs(float(g[0] - exact[0]))
    if isinstance(p.backend, SU2):
        w, x, y, z = g
        m = w * np.eye(2) + su2_matrix(2 * np.array([x, y, z]))
    else:
        m = SL2Cover.matrix(g)
    return float(np.max(np.abs(m - exact)))


def test_criterion_9_stokes_and_convergence():
    rng = np.random.default_rng(SEED + 9)
    lam = 1.7
    p = A.abelian_bump(lam)
    lat = CentralLattice(Abelian(1), ())
    stokes = 0.0
    for _ in range(10):
        s0, s1 = np.sort(rng.uniform(0.05, 0.95, 2))
        t0, t1 = np.sort(rng.uniform(0.05, 0.95, 2))
        got = float(H.hol(p, H.rectangle_loop(s0, s1, t0, t1, 400), lat).array[0])
        stokes = max(stokes, abs(got - box_integral(lam, s0, s1, t0, t1)))
    ratios = []
    smooth = [A.abelian_bump(1.0), A.su2_clutch(), A.sl2_clutch(), A.random_polynomial_presentation("su2", rng)]
    for q in smooth:
        exact = exact_transport(q)
        d = [transport_defect(q, exact, n) for n in (100, 200, 400)]
        ratios += [d[0] / d[1], d[1] / d[2]]
    ok = stokes <= 1e-6 and all(3.5 <= r <= 4.5 for r in ratios)
    report(9, ok, f"Stokes defect {stokes:.1e} on 10 rectangles; halving ratios {min(ratios):.3f}..{max(ratios):.3f}")


# 10 ----------------------------------------------------------------------------------


def test_criterion_10_integrator_laws():
    rng = np.random.default_rng(SEED + 10)
    laws, cocycle, triples = 0.0, 0.0, 0
    charts = [
        I.LocalChart(((0.2, 0.5), (0.2, 0.5)), ((0.5, 0.8), (0.5, 0.8)), bend, name=f"c{i}")
        for i, bend in enumerate([(0.0, 0.0), (0.05, -0.05), (-0.04, 0.06)])
    ]
    for name in PRESETS:
        p = A.load_presentation(name)
        lat = class_lattice(p)
        laws = max(laws, I.groupoid_laws(p, lat, rng, triples=100).worst())
        pairs = [(rng.uniform(0.52, 0.78, 2), rng.uniform(0.22, 0.48, 2)) for _ in range(5)]
        r = I.cocycle_check(p, lat, charts, pairs)
        cocycle, triples = max(cocycle, r.max_defect), triples + r.triples
    flat = I.flat_degeneration_defect(A.trivial("su2"), [(0.3, 0.3), (0.6, 0.4), (0.5, 0.7)], [[0, 1.0, 0, 0], [0, 0, 1.0, 0]])
    ok = laws <= 1e-6 and flat == 0 and cocycle <= 1e-6
    report(10, ok, f"law defect {laws:.1e} over 400 triples; flat mismatches {flat}; cocycle defect {cocycle:.1e} over {triples} chart triples")


# 11 ----------------------------------------------------------------------------------


def _b(u):
    return bump((np.asarray(u, float) - 0.1) / 0.8)


def _db(u):
    # d/du of bump((u - 0.1)/0.8), from the closed form of the derivative of exp(-1/(x(1-x)))
    x = (np.asarray(u, float) - 0.1) / 0.8
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    return np.where(inside, bump(xs) * (1 - 2 * xs) / (xs * (1 - xs)) ** 2 / 0.8, 0.0)


def test_criterion_11_induced_connection():
    rng = np.random.default_rng(SEED + 11)
    alg = lie.direct_sum(lie.abelian(1), lie.su2())
    cs, ct = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    expr = lambda c: f"bump((s-0.1)/0.8)*bump((t-0.1)/0.8)*({float(c[0])!r}+{float(c[1])!r}*s+{float(c[2])!r}*t)"
    p = A.presentation_from_exprs(alg, [expr(c) for c in cs], [expr(c) for c in ct])
    assert p.backend is None
    s, t = A.interior_grid(101)
    env, ds_env, dt_env = _b(s) * _b(t), _db(s) * _b(t), _b(s) * _db(t)
    lin = lambda c: c[:, 0] + c[:, 1] * s[..., None] + c[:, 2] * t[..., None]
    ths = env[..., None] * lin(cs)
    tht = env[..., None] * lin(ct)
    d_s_tht = ds_env[..., None] * lin(ct) + env[..., None] * ct[:, 1]
    d_t_ths = dt_env[..., None] * lin(cs) + env[..., None] * cs[:, 2]
    f = d_s_tht - d_t_ths + alg.bracket(ths, tht)
    d = A.induced_connection(p)
    r = d.connection_curvature(s, t)
    bracket_defect = 0.0
    for sigma in np.eye(4):
        bracket_defect = max(bracket_defect, float(np.max(np.linalg.norm(r @ sigma - alg.bracket(f, sigma), axis=-1))))
    center = A.center_flatness_defect(d, [1.0, 0, 0, 0], 101)
    ok = center <= 5e-6 and bracket_defect <= 5e-6
    report(11, ok, f"center-flatness defect {center:.1e}; |R sigma - [F, sigma]| = {bracket_defect:.1e} on {s.size} interior points")
