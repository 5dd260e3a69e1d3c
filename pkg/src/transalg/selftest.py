"""Quick built-in checks of the invariants of every module (seeded, deterministic)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import algebroid as alg
from . import groupoid as fg
from . import holonomy as hol
from . import integrator as itg
from . import lie
from .field import parse, evaluate
from .groups import Abelian, EuclideanCover, GroupElement, SL2Cover, SU2, DouadyFiber, one_param_period
from .lattice import CentralLattice, lattice_discreteness


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _check(name, fn):
    try:
        ok, detail = fn()
        return Check(name, bool(ok), detail)
    except Exception as exc:  # a crash is a failed check, reported rather than raised
        return Check(name, False, f"{type(exc).__name__}: {exc}")


def appendix_checks(extra=None) -> list:
    out = [Check(f"appendix:{r.name}", r.passed, r.detail or f"{r.product_arrows} -> {r.quotient_arrows} arrows") for r in fg.appendix_suite()]
    if extra is not None:
        r = fg.run_fixture(extra)
        out.append(Check(f"appendix:{extra.name or 'config'}", r.passed, r.detail or f"{r.product_arrows} -> {r.quotient_arrows} arrows"))
    return out


def module_checks(seed=0, steps=400, tol=1e-6) -> list:
    rng = np.random.default_rng(seed)
    checks = []

    def lie_check():
        d = max(lie.jacobi_defect(a) for a in (lie.su2(), lie.douady(-1.0), lie.douady(0.0)))
        return d <= 1e-12, f"jacobi defect {d:.2e}"

    def group_check():
        worst = 0.0
        for b in (SU2(), SL2Cover(), EuclideanCover(), Abelian(2)):
            x, y, z = (b.exp(rng.uniform(-1, 1, size=(8, b.algebra().dim))) for _ in range(3))
            lhs = b.mul(b.mul(x, y), z)
            rhs = b.mul(x, b.mul(y, z))
            worst = max(worst, float(np.max(b.dist(b.mul(b.inv(lhs), rhs)))))
        return worst <= 1e-9, f"associativity defect {worst:.2e}"

    def douady_check():
        errs = [abs(one_param_period(DouadyFiber(s), [0, 0, 1.0]) - 4 * math.pi) for s in (0.1, 1.0, 4.0)]
        return max(errs) <= 1e-8, f"period error {max(errs):.2e}"

    def lattice_check():
        b = Abelian(1)
        lat = CentralLattice(b, (GroupElement.of(b, [1.0]), GroupElement.of(b, [math.sqrt(2)])))
        return not lattice_discreteness(lat).discrete, "<1, sqrt2> non-discrete"

    def field_check():
        v = evaluate(parse("lam*bump(s)"), 0.5, 0.0, 2.0)
        return abs(v - 2 * math.exp(-4) / 0.007029858406609657) < 1e-6, f"lam*bump(s) = {v:.8f}"

    def classify_check():
        vals = {lam: float(hol.classify_c(alg.abelian_bump(lam), steps).array[0]) for lam in (0.0, 0.5, 2.7)}
        su = hol.classify_c(alg.su2_clutch(), steps)
        ok = all(abs(v - k) <= tol for k, v in vals.items()) and float(SU2().dist(su.array * [-1, 1, 1, 1])) <= tol
        return ok, f"abelian {vals}, su2 {np.round(su.array, 9).tolist()}"

    def gauge_kernel_check():
        p = alg.random_polynomial_presentation("su2", rng)
        mu0 = np.array([0.0, 0.0, 2 * math.pi])  # exp(mu0) = -1, central
        g = alg.GaugeTransformation.constant(p.algebra, -mu0, psi=lie.adjoint_exp(p.algebra, mu0))
        q = alg.apply_gauge(p, g)
        s, t = np.meshgrid(np.linspace(0, 1, 21), np.linspace(0, 1, 21))
        d = max(float(np.max(np.abs(a - b))) for a, b in zip(p.theta(s, t), q.theta(s, t)))
        return d <= 1e-10, f"kernel pair moves theta by {d:.2e}"

    def transport_check():
        p = alg.random_polynomial_presentation("su2", rng)
        b = p.backend
        g1 = hol.SampledPath.segment((0.2, 0.3), (0.7, 0.6), steps)
        g2 = hol.SampledPath.segment((0.7, 0.6), (0.4, 0.8), steps)
        t12 = hol.transport(p, hol.concat(g2, g1)).array
        prod = b.mul(hol.transport(p, g1).array, hol.transport(p, g2).array)
        rev = b.mul(hol.transport(p, g1).array, hol.transport(p, g1.reverse()).array)
        d = max(float(b.dist(b.mul(b.inv(t12), prod))), float(b.dist(rev)))
        return d <= 1e-7, f"composition/reversal defect {d:.2e}"

    def integrator_check():
        p = alg.random_polynomial_presentation("su2", rng)
        lat = CentralLattice(p.backend, (GroupElement.of(p.backend, [-1.0, 0, 0, 0]),))
        r = itg.groupoid_laws(p, lat, rng, triples=5)
        return r.worst() <= tol, f"law defect {r.worst():.2e}"

    for name, fn in [
        ("lie:jacobi", lie_check),
        ("groups:associativity", group_check),
        ("groups:douady-period", douady_check),
        ("lattice:non-discrete", lattice_check),
        ("field:evaluate", field_check),
        ("holonomy:classify", classify_check),
        ("algebroid:gauge-kernel", gauge_kernel_check),
        ("holonomy:composition", transport_check),
        ("integrator:laws", integrator_check),
    ]:
        checks.append(_check(name, fn))
    return checks


def run_selftest(seed=0, appendix_only=False, extra=None, steps=400, tol=1e-6) -> list:
    checks = [] if appendix_only else module_checks(seed, steps, tol)
    return checks + appendix_checks(extra)
