"""Arrow calculus for the integrating groupoid over the sphere.

An arrow is a sampled path ``gamma`` in the square chart together with a
representative ``u`` in the simply connected group; it stands for the class
of ``(gamma, u)`` in ``(Path |x U) / Loop^0``.  Multiplication is
``(g', u') o (g, u) = (g' * g, (g^{-1})_* u' . u)`` and two arrows are equal
when their endpoints agree and ``u1 = Hol(g1^{-1} * g0) u0`` modulo the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import groupoid as fg
from .algebroid import SquarePresentation
from .groups import GroupElement
from .holonomy import (
    DEFAULT_STEPS,
    PathError,
    SampledHomotopy,
    SampledPath,
    concat,
    hol_contractible,
    sitting_profile,
    transport,
    u_distance,
)
from .lattice import CentralLattice


class IntegratorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ArrowRep:
    path: SampledPath
    u: GroupElement

    @property
    def source(self):
        return self.path.source

    @property
    def target(self):
        return self.path.target


def unit_arrow(p: SquarePresentation, m, n=DEFAULT_STEPS // 4) -> ArrowRep:
    return ArrowRep(SampledPath.constant(m, n), p.identity())


def _conj(b, t, u):
    """``t u t^{-1}``."""
    return b.mul(t, b.mul(u, b.inv(t)))


def arrow_mul(p: SquarePresentation, a2: ArrowRep, a1: ArrowRep, tol=1e-9) -> ArrowRep:
    """``a2 o a1`` (first ``a1``)."""
    if np.linalg.norm(a1.target - a2.source) > tol:
        raise IntegratorError("arrows are not composable")
    b = p.require_backend()
    t1 = transport(p, a1.path).array
    u = b.mul(_conj(b, t1, a2.u.array), a1.u.array)
    return ArrowRep(concat(a2.path, a1.path), GroupElement.of(b, u))


def arrow_inv(p: SquarePresentation, a: ArrowRep) -> ArrowRep:
    """``(gamma^{-1}, gamma_*(u^{-1}))``."""
    b = p.require_backend()
    t = transport(p, a.path).array
    return ArrowRep(a.path.reverse(), GroupElement.of(b, _conj(b, b.inv(t), b.inv(a.u.array))))


def hol_loop(p: SquarePresentation, loop: SampledPath, lattice: CentralLattice, homotopy=None):
    """Hol of a loop in the chart, by the canonical contraction unless a homotopy is given."""
    return hol_contractible(p, loop, homotopy, lattice).value


def arrow_eq(p: SquarePresentation, lattice: CentralLattice, a1: ArrowRep, a0: ArrowRep, tol=1e-6, homotopy=None) -> bool:
    if np.linalg.norm(a1.source - a0.source) > 1e-9 or np.linalg.norm(a1.target - a0.target) > 1e-9:
        return False
    return arrow_defect(p, lattice, a1, a0, homotopy) <= tol


def arrow_defect(p: SquarePresentation, lattice: CentralLattice, a1: ArrowRep, a0: ArrowRep, homotopy=None) -> float:
    """U-distance between ``u1`` and ``Hol(g1^{-1} * g0) u0`` (endpoints assumed equal)."""
    b = p.require_backend()
    loop = concat(a1.path.reverse(), a0.path)
    h = hol_loop(p, loop, lattice, homotopy)
    return u_distance(lattice, a1.u, GroupElement.of(b, b.mul(h.array, a0.u.array)))


# -- local charts --------------------------------------------------------------------


Box = tuple  # ((s_lo, s_hi), (t_lo, t_hi))


def _in_box(box, m) -> bool:
    (a, b), (c, d) = box
    return a < m[0] < b and c < m[1] < d


@dataclass(frozen=True, eq=False)
class LocalChart:
    """Paths ``sigma(m', m)`` from ``m`` to ``m'`` for ``m`` in ``source_box`` and ``m'`` in ``target_box``.

    ``bend`` displaces the midpoint of a quadratic Bezier curve; ``bend = 0``
    gives the straight segment.
    """

    source_box: Box
    target_box: Box
    bend: tuple = (0.0, 0.0)
    steps: int = DEFAULT_STEPS // 2
    name: str = ""

    def contains(self, m_to, m_from) -> bool:
        return _in_box(self.source_box, m_from) and _in_box(self.target_box, m_to)

    def sigma(self, m_to, m_from) -> SampledPath:
        if not self.contains(m_to, m_from):
            raise IntegratorError(f"point pair outside chart {self.name or ''}")
        a = np.asarray(m_from, float)
        c = np.asarray(m_to, float)
        ctrl = 0.5 * (a + c) + 2.0 * np.asarray(self.bend, float)

        def curve(u):
            u = np.asarray(u)[:, None]
            return (1 - u) ** 2 * a + 2 * u * (1 - u) * ctrl + u**2 * c

        return SampledPath.from_function(curve, self.steps)

    def continuity_modulus(self, pairs, h=1e-3) -> float:
        """Max of ``|sigma(pair + d) - sigma(pair)| / |d|`` over sampled pairs and coordinate nudges."""
        worst = 0.0
        for m_to, m_from in pairs:
            base = self.sigma(m_to, m_from).points
            for k in range(4):
                d = np.zeros(4)
                d[k] = h
                nt, nf = np.asarray(m_to) + d[:2], np.asarray(m_from) + d[2:]
                if not self.contains(nt, nf):
                    continue
                moved = self.sigma(nt, nf).points
                worst = max(worst, float(np.max(np.linalg.norm(moved - base, axis=1))) / h)
        return worst


def chart_arrow(p: SquarePresentation, chart: LocalChart, m_to, m_from, u: GroupElement) -> ArrowRep:
    """The local trivialization ``(m', m, u) -> [(sigma(m', m), u)]``."""
    return ArrowRep(chart.sigma(m_to, m_from), u)


def transition_map(p: SquarePresentation, lattice: CentralLattice, c1: LocalChart, c2: LocalChart, m_to, m_from) -> GroupElement:
    """``f(m', m) = Hol(sigma_2^{-1} * sigma_1)``; chart 1 coordinates ``u`` become ``f u`` in chart 2."""
    s1 = c1.sigma(m_to, m_from)
    s2 = c2.sigma(m_to, m_from)
    return hol_loop(p, concat(s2.reverse(), s1), lattice)


@dataclass(frozen=True)
class CocycleReport:
    max_defect: float
    triples: int
    max_slope: float


def cocycle_check(p: SquarePresentation, lattice: CentralLattice, charts: Sequence[LocalChart], pairs, h=1e-3) -> CocycleReport:
    """Max over pairs and chart triples of the U-distance between ``f13`` and ``f23 f12``.

    Also reports the largest sampled slope ``|f(x + h) f(x)^{-1}| / h`` as a smoothness surrogate.
    """
    b = p.require_backend()
    worst, count, slope = 0.0, 0, 0.0
    for m_to, m_from in pairs:
        live = [c for c in charts if c.contains(m_to, m_from)]
        f = {}
        for i, ci in enumerate(live):
            for j, cj in enumerate(live):
                if i != j:
                    f[i, j] = transition_map(p, lattice, ci, cj, m_to, m_from)
        for i in range(len(live)):
            for j in range(len(live)):
                for k in range(len(live)):
                    if len({i, j, k}) < 3:
                        continue
                    prod = GroupElement.of(b, b.mul(f[j, k].array, f[i, j].array))
                    worst = max(worst, u_distance(lattice, f[i, k], prod))
                    count += 1
        for (i, j), fij in f.items():
            nt = np.asarray(m_to, float) + h
            if live[i].contains(nt, m_from) and live[j].contains(nt, m_from):
                g = transition_map(p, lattice, live[i], live[j], nt, m_from)
                slope = max(slope, u_distance(lattice, g, fij) / h)
    return CocycleReport(worst, count, slope)


# -- isotropy ------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropyReport:
    elements: tuple
    table_defect: float


def isotropy_sample(p: SquarePresentation, lattice: CentralLattice, m, loops: Sequence[SampledPath]) -> IsotropyReport:
    """Hol of loops at ``m`` and the defect of ``Hol(a * b) = Hol(a) Hol(b)`` over all pairs."""
    b = p.require_backend()
    m = np.asarray(m, float)
    for lp in loops:
        if np.linalg.norm(lp.source - m) > 1e-9 or not lp.is_closed():
            raise PathError("isotropy loops must be closed at m")
    vals = [hol_loop(p, lp, lattice) for lp in loops]
    worst = 0.0
    for i, li in enumerate(loops):
        for j, lj in enumerate(loops):
            both = hol_loop(p, concat(li, lj), lattice)
            worst = max(worst, u_distance(lattice, both, GroupElement.of(b, b.mul(vals[i].array, vals[j].array))))
    return IsotropyReport(tuple(vals), worst)


# -- random arrows and the flat cross-check ------------------------------------------------


def random_point(rng, lo=0.15, hi=0.85):
    return rng.uniform(lo, hi, size=2)


def random_path(rng, a, b, steps=DEFAULT_STEPS // 2) -> SampledPath:
    """Quadratic Bezier from ``a`` to ``b`` through a random control point (kept inside the square)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ctrl = np.clip(0.5 * (a + b) + rng.normal(scale=0.15, size=2), 0.05, 0.95)

    def curve(u):
        u = np.asarray(u)[:, None]
        return (1 - u) ** 2 * a + 2 * u * (1 - u) * ctrl + u**2 * b

    return SampledPath.from_function(curve, steps)


def random_element(p: SquarePresentation, rng, scale=1.5) -> GroupElement:
    b = p.require_backend()
    return GroupElement.of(b, b.exp(rng.uniform(-scale, scale, size=p.algebra.dim)))


def random_arrow(p: SquarePresentation, rng, start=None, steps=DEFAULT_STEPS // 2) -> ArrowRep:
    a = random_point(rng) if start is None else np.asarray(start, float)
    return ArrowRep(random_path(rng, a, random_point(rng), steps), random_element(p, rng))


@dataclass(frozen=True)
class LawReport:
    unit: float
    inverse: float
    associativity: float
    double_inverse: float
    triples: int

    def worst(self) -> float:
        return max(self.unit, self.inverse, self.associativity, self.double_inverse)


def groupoid_laws(p: SquarePresentation, lattice: CentralLattice, rng, triples=100, steps=DEFAULT_STEPS // 4) -> LawReport:
    """Unit, inverse and associativity defects (U-distances) on random composable triples."""
    worst = dict(unit=0.0, inverse=0.0, associativity=0.0, double_inverse=0.0)
    for _ in range(triples):
        a1 = random_arrow(p, rng, steps=steps)
        a2 = random_arrow(p, rng, a1.target, steps)
        a3 = random_arrow(p, rng, a2.target, steps)
        left = arrow_mul(p, arrow_mul(p, a3, a2), a1)
        right = arrow_mul(p, a3, arrow_mul(p, a2, a1))
        worst["associativity"] = max(worst["associativity"], arrow_defect(p, lattice, left, right))
        e = unit_arrow(p, a1.target, steps)
        worst["unit"] = max(worst["unit"], arrow_defect(p, lattice, arrow_mul(p, e, a1), a1))
        e0 = unit_arrow(p, a1.source, steps)
        worst["unit"] = max(worst["unit"], arrow_defect(p, lattice, arrow_mul(p, a1, e0), a1))
        inv = arrow_inv(p, a1)
        worst["inverse"] = max(worst["inverse"], arrow_defect(p, lattice, arrow_mul(p, a1, inv), e))
        worst["inverse"] = max(worst["inverse"], arrow_defect(p, lattice, arrow_mul(p, inv, a1), e0))
        worst["double_inverse"] = max(worst["double_inverse"], arrow_defect(p, lattice, arrow_inv(p, inv), a1))
    return LawReport(triples=triples, **worst)


def finite_subgroup(backend, generators, cap=200):
    """Closure of ``generators`` under multiplication, keyed by rounded coordinates."""
    key = lambda g: tuple(np.round(np.asarray(g, float), 9) + 0.0)
    elems = {key(backend.identity()): backend.identity()}
    frontier = list(elems.values())
    while frontier:
        nxt = []
        for g in frontier:
            for h in generators:
                x = backend.mul(g, np.asarray(h, float))
                k = key(x)
                if k not in elems:
                    elems[k] = x
                    nxt.append(x)
                    if len(elems) > cap:
                        raise IntegratorError("generated subgroup is not small and finite")
        frontier = nxt
    ordered = [elems[k] for k in sorted(elems)]
    return fg.FiniteGroup.from_elements(ordered, backend.mul, key=key, name="finite"), key


def flat_degeneration_defect(p: SquarePresentation, points, generators) -> int:
    """Count of mismatches between ``arrow_mul`` and the exact product in ``Pair(points) x K_f``.

    For flat ``theta`` and trivial lattice the arrow calculus is the pair groupoid
    times the structure group; ``K_f`` is the finite subgroup spanned by ``generators``.
    """
    b = p.require_backend()
    group, key = finite_subgroup(b, generators)
    index = {key(g): i for i, g in enumerate(group.labels)}
    pts = [tuple(float(x) for x in q) for q in points]
    pair = fg.pair_groupoid(tuple(range(len(pts))))
    exact = fg.product_groupoid(pair, group)
    lookup = {lab: i for i, lab in enumerate(exact.labels)}
    pair_index = {lab: i for i, lab in enumerate(pair.labels)}
    mism = 0
    seg = {(y, x): SampledPath.segment(pts[x], pts[y], DEFAULT_STEPS // 4) for x in range(len(pts)) for y in range(len(pts))}
    for (y, x), path in seg.items():
        for z in range(len(pts)):
            for i, gi in enumerate(group.labels):
                for j, gj in enumerate(group.labels):
                    a1 = ArrowRep(path, GroupElement.of(b, gi))
                    a2 = ArrowRep(seg[(z, y)], GroupElement.of(b, gj))
                    got = arrow_mul(p, a2, a1)
                    k = index.get(key(got.u.array))
                    want = exact.compose(lookup[(pair_index[(z, y)], j)], lookup[(pair_index[(y, x)], i)])
                    if k is None or exact.labels[want] != (pair_index[(z, x)], k):
                        mism += 1
    return mism
