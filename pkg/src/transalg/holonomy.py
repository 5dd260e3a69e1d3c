"""Parallel transport in the structure group, the class c(A), and holonomy of contractible loops.

Conventions (see README): transport solves ``g' = g . theta(gamma')`` by
exponential steps ``g_{n+1} = g_n exp(xi_n)``, so ``T(b * a) = T(a) T(b)`` when
``a`` is traversed first.  The holonomy of a contractible loop is
``Hol(lam) = T(lam)^{-1}``, which makes ``Hol`` multiplicative and turns
parallel transport on U into ``gamma_* u = T(gamma)^{-1} u T(gamma)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import field as fdsl
from .algebroid import SquarePresentation
from .groups import Backend, GroupElement, is_central
from .lattice import CentralLattice, Discreteness, lattice_discreteness

DEFAULT_STEPS = 400
SIT = 0.1
MAX_JUMP = 0.05
CONTINUITY = 0.5
_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


class HolonomyError(RuntimeError):
    pass


class PathError(HolonomyError, ValueError):
    pass


class NonCentralEndpoint(HolonomyError):
    pass


class ContinuityError(HolonomyError):
    pass


# -- sampled paths -------------------------------------------------------------


def sitting_profile(tau, sit=SIT):
    """Smooth reparametrization of [0, 1] that is constant on [0, sit] and [1 - sit, 1]."""
    return fdsl.ramp((np.asarray(tau, float) - sit) / (1.0 - 2.0 * sit))


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Points ``gamma(i/N)``, ``i = 0..N``, in the unit square."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise PathError(f"points must have shape (N+1, 2) with N >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise PathError("non-finite path point")
        if np.any(pts < -1e-12) or np.any(pts > 1 + 1e-12):
            raise PathError("path leaves the square")
        jumps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.max(jumps) >= MAX_JUMP:
            raise PathError(f"consecutive samples {np.max(jumps):.3g} apart; refine the path")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    @property
    def source(self):
        return self.points[0]

    @property
    def target(self):
        return self.points[-1]

    def is_sitting(self, sit=SIT) -> bool:
        k = math.ceil(sit * self.steps - 1e-9)
        p = self.points
        return bool(np.all(p[: k + 1] == p[0]) and np.all(p[-k - 1 :] == p[-1]))

    def is_closed(self, tol=1e-9) -> bool:
        return float(np.linalg.norm(self.source - self.target)) <= tol

    def reverse(self) -> "SampledPath":
        return SampledPath(self.points[::-1])

    def reparametrize(self, phi: Callable) -> "SampledPath":
        """``gamma o phi`` for an increasing ``phi`` of [0, 1] onto itself (linear interpolation)."""
        tau = np.linspace(0.0, 1.0, self.steps + 1)
        new = np.clip(phi(tau), 0.0, 1.0)
        pts = np.stack([np.interp(new, tau, self.points[:, k]) for k in range(2)], -1)
        return SampledPath(pts)

    # constructors

    @classmethod
    def constant(cls, p, n=DEFAULT_STEPS):
        return cls(np.tile(np.asarray(p, float), (n + 1, 1)))

    @classmethod
    def from_function(cls, fn: Callable, n=DEFAULT_STEPS, sit=SIT):
        """Sample ``fn`` (vectorized, [0,1] -> points) after a sitting reparametrization."""
        tau = np.linspace(0.0, 1.0, n + 1)
        u = sitting_profile(tau, sit) if sit else tau
        return cls(np.asarray(fn(u), float).reshape(n + 1, 2))

    @classmethod
    def segment(cls, a, b, n=DEFAULT_STEPS, sit=SIT):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        return cls.from_function(lambda u: a + np.outer(u, b - a), n, sit)

    @classmethod
    def polyline(cls, vertices, n_per_leg=DEFAULT_STEPS, sit=SIT):
        legs = [cls.segment(vertices[i], vertices[i + 1], n_per_leg, sit) for i in range(len(vertices) - 1)]
        out = legs[0]
        for leg in legs[1:]:
            out = concat(leg, out)
        return out


def concat(second: SampledPath, first: SampledPath, tol=1e-9) -> SampledPath:
    """``second * first``: traverse ``first``, then ``second``."""
    if np.linalg.norm(first.target - second.source) > tol:
        raise PathError("paths are not composable")
    return SampledPath(np.concatenate([first.points, second.points[1:]]))


def rectangle_loop(s0, s1, t0, t1, n_per_leg=DEFAULT_STEPS) -> SampledPath:
    """Boundary of ``[s0,s1] x [t0,t1]`` from ``(s0,t0)``, t-direction first.

    With this orientation ``Hol`` of the loop is ``+int F`` in the abelian case.
    """
    return SampledPath.polyline([(s0, t0), (s0, t1), (s1, t1), (s1, t0), (s0, t0)], n_per_leg)


def horizontal(t, n=DEFAULT_STEPS) -> SampledPath:
    s = np.linspace(0.0, 1.0, n + 1)
    return SampledPath(np.stack([s, np.full_like(s, t)], -1))


# -- transport -------------------------------------------------------------------


def _increments(p: SquarePresentation, pts):
    """Algebra increments ``xi_n`` (two-point Gauss average of theta over each segment)."""
    pts = np.asarray(pts, float)
    a = pts[..., :-1, :]
    d = np.diff(pts, axis=-2)
    xi = 0.0
    for w in _GAUSS:
        q = a + w * d
        ths, tht = p.theta(q[..., 0], q[..., 1])
        xi = xi + 0.5 * (ths * d[..., 0:1] + tht * d[..., 1:2])
    if not np.all(np.isfinite(xi)):
        raise HolonomyError("non-finite connection coefficient on the path")
    return xi


def _check_inside(pts):
    if np.any(pts < -1e-12) or np.any(pts > 1 + 1e-12):
        raise PathError("path leaves the square")


def transport_many(p: SquarePresentation, pts, g0=None, keep=False):
    """Transport along a batch of sampled paths ``pts`` of shape ``(..., N+1, 2)``."""
    b = p.require_backend()
    pts = np.asarray(pts, float)
    _check_inside(pts)
    steps = b.exp(_increments(p, pts))
    g = b.identity(pts.shape[:-2]) if g0 is None else np.broadcast_to(np.asarray(g0, float), pts.shape[:-2] + (b.ncoords,)).copy()
    if not keep:
        return b.mul(g, _ordered_product(b, steps)) if g0 is not None else _ordered_product(b, steps)
    hist = [g]
    for n in range(steps.shape[-2]):
        g = b.mul(g, steps[..., n, :])
        hist.append(g)
    return np.stack(hist, -2)


def _ordered_product(b: Backend, steps):
    """``steps[0] steps[1] ... steps[N-1]`` along axis -2, by pairwise reduction."""
    while steps.shape[-2] > 1:
        if steps.shape[-2] % 2:
            pad = b.identity(steps.shape[:-2])[..., None, :]
            steps = np.concatenate([steps, pad], axis=-2)
        steps = b.mul(steps[..., 0::2, :], steps[..., 1::2, :])
    return steps[..., 0, :]


def transport(p: SquarePresentation, path: SampledPath, g0: GroupElement | None = None) -> GroupElement:
    b = p.require_backend()
    if g0 is not None and g0.backend != b:
        raise HolonomyError("initial value on a different backend")
    out = transport_many(p, path.points, None if g0 is None else g0.array)
    return GroupElement.of(b, out)


def transport_trace(p: SquarePresentation, path: SampledPath, g0: GroupElement | None = None) -> "HolonomyTrace":
    """Partial transports along ``path`` (for CSV output)."""
    b = p.require_backend()
    vals = transport_many(p, path.points, None if g0 is None else g0.array, keep=True)
    return HolonomyTrace(b, np.linspace(0.0, 1.0, path.steps + 1), vals)


# -- the sweep and the class c(A) ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class HolonomyTrace:
    backend: Backend
    taus: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.taus)

    def at(self, i) -> GroupElement:
        return GroupElement.of(self.backend, self.values[i])

    def max_jump(self) -> float:
        b = self.backend
        if len(self.values) < 2:
            return 0.0
        d = b.dist(b.mul(b.inv(self.values[:-1]), self.values[1:]))
        return float(np.max(d))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau"] + [f"g{i}" for i in range(self.backend.ncoords)])
        for tau, v in zip(self.taus, self.values):
            w.writerow([f"{tau:.12g}"] + [f"{x:.15g}" for x in v])
        return buf.getvalue()


def _row_transports(p, taus, steps):
    s = np.linspace(0.0, 1.0, steps + 1)
    pts = np.stack(np.broadcast_arrays(s[None, :], np.asarray(taus, float)[:, None]), -1)
    return transport_many(p, pts)


def holonomy_sweep(p: SquarePresentation, steps=DEFAULT_STEPS, samples=101, refine=4) -> HolonomyTrace:
    """``H(tau)`` = transport along ``s -> (s, tau)``, for tau from 1 down to 0.

    Each value is computed from scratch; consecutive values farther apart than
    the continuity bound trigger local refinement of the tau grid.
    """
    b = p.require_backend()
    taus = np.linspace(1.0, 0.0, samples)
    vals = _row_transports(p, taus, steps)
    for _ in range(refine + 1):
        d = b.dist(b.mul(b.inv(vals[:-1]), vals[1:]))
        bad = np.nonzero(d > CONTINUITY)[0]
        if len(bad) == 0:
            return HolonomyTrace(b, taus, vals)
        if _ == refine:
            break
        mids = 0.5 * (taus[bad] + taus[bad + 1])
        taus = np.insert(taus, bad + 1, mids)
        vals = np.insert(vals, bad + 1, _row_transports(p, mids, steps), axis=0)
    raise ContinuityError(f"holonomy sweep jumps by {float(np.max(d)):.3g} near tau={float(taus[bad[0]]):.4g}; increase resolution")


def classify_c(p: SquarePresentation, steps=DEFAULT_STEPS, samples=101, tol=1e-6, trace=False):
    """The central element c(A) classifying the framed algebroid presented by ``p``."""
    tr = holonomy_sweep(p, steps, samples)
    c = tr.at(-1)
    if not is_central(c, tol):
        raise NonCentralEndpoint(f"non-central sweep endpoint {np.round(c.array, 9).tolist()}")
    return (c, tr) if trace else c


def monodromy_generators(family: Sequence[SquarePresentation], steps=DEFAULT_STEPS, tol=1e-6) -> CentralLattice:
    if not family:
        raise HolonomyError("empty family")
    b = family[0].require_backend()
    for p in family[1:]:
        if p.require_backend() != b or p.algebra.dim != family[0].algebra.dim:
            raise HolonomyError("presentations in a family must share algebra and backend")
    return CentralLattice(b, tuple(classify_c(p, steps, tol=tol) for p in family), tol=tol)


def discreteness_check(lattice: CentralLattice) -> Discreteness:
    return lattice_discreteness(lattice)


# -- holonomy of contractible loops ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampledHomotopy:
    """Loops ``h(., tau_j)``, array of shape ``(M+1, N+1, 2)``; row 0 is the loop, the last row is constant on the sphere."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.array(self.grid, float)
        if g.ndim != 3 or g.shape[2] != 2 or g.shape[0] < 2:
            raise PathError("homotopy must have shape (M+1, N+1, 2)")
        _check_inside(g)
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @classmethod
    def radial(cls, loop: SampledPath, center=None, rows=41):
        """Straight-line contraction to ``center`` (default: the basepoint), sitting in tau."""
        c = loop.source if center is None else np.asarray(center, float)
        w = sitting_profile(np.linspace(0.0, 1.0, rows))[:, None, None]
        return cls((1 - w) * loop.points[None] + w * c)

    @classmethod
    def sweep_rectangle(cls, s0, s1, t0, t1, n_per_leg=DEFAULT_STEPS, rows=41):
        """Grow the rectangle until it fills the square; the final loop is the collapsed boundary."""
        w = sitting_profile(np.linspace(0.0, 1.0, rows))
        loops = [rectangle_loop(s0 * (1 - x), s1 + (1 - s1) * x, t0 * (1 - x), t1 + (1 - t1) * x, n_per_leg).points for x in w]
        return cls(np.array(loops))

    def end_is_trivial(self, tol=1e-9) -> bool:
        end = self.grid[-1]
        const = np.max(np.linalg.norm(end - end[0], axis=1)) <= tol
        edge = np.min(np.stack([end[:, 0], 1 - end[:, 0], end[:, 1], 1 - end[:, 1]]), axis=0)
        return bool(const or np.max(edge) <= tol)


@dataclass(frozen=True)
class HolResult:
    value: GroupElement
    raw: GroupElement
    end_correction: GroupElement
    leak: bool
    leak_distance: float


def hol_contractible(p: SquarePresentation, loop: SampledPath, homotopy: SampledHomotopy | None, lattice: CentralLattice, tol=1e-6) -> HolResult:
    """Hol of a contractible loop along ``homotopy``, as a representative mod ``lattice``.

    The square chart gives ``T(h_tau)`` for every loop of the homotopy; the
    last loop is trivial on the sphere, so its chart transport ``z`` (central)
    is divided out: ``Hol = z T(loop)^{-1}``.  A ``z`` outside the lattice is
    reported as a monodromy leak.
    """
    b = p.require_backend()
    if lattice.backend != b:
        raise HolonomyError("lattice on a different backend")
    if not loop.is_closed():
        raise PathError("loop is not closed")
    if homotopy is None:
        # the straight-line contraction stays in the convex chart and ends at a
        # constant loop, so no correction is needed and the lift is the chart value
        raw = GroupElement.of(b, b.inv(transport_many(p, loop.points)))
        return HolResult(lattice.reduce(raw), raw, GroupElement.of(b, b.identity()), False, 0.0)
    if homotopy.grid.shape[1] != loop.steps + 1 or np.max(np.abs(homotopy.grid[0] - loop.points)) > 1e-9:
        raise PathError("homotopy does not start at the loop")
    if not homotopy.end_is_trivial():
        raise PathError("homotopy does not end at a constant loop")
    vals = transport_many(p, homotopy.grid)
    jumps = b.dist(b.mul(b.inv(vals[:-1]), vals[1:]))
    if np.max(jumps) > CONTINUITY:
        raise ContinuityError(f"loop holonomy jumps by {float(np.max(jumps)):.3g} along the homotopy; use more rows")
    z = GroupElement.of(b, vals[-1])
    raw = GroupElement.of(b, b.mul(z.array, b.inv(vals[0])))
    leak_d = lattice.distance_mod(z) if is_central(z, tol) else math.inf
    return HolResult(lattice.reduce(raw), raw, z, leak_d > tol, float(leak_d))


def hol(p, loop, lattice, homotopy=None, tol=1e-6) -> GroupElement:
    return hol_contractible(p, loop, homotopy, lattice, tol).value


def u_distance(lattice: CentralLattice, g: GroupElement, h: GroupElement) -> float:
    b = lattice.backend
    return lattice.distance_mod(GroupElement.of(b, b.mul(g.array, b.inv(h.array))))


def push_u(p: SquarePresentation, gamma: SampledPath, u: GroupElement) -> GroupElement:
    """Parallel transport of ``u`` in U along ``gamma``: ``T(gamma)^{-1} u T(gamma)``."""
    b = p.require_backend()
    t = transport(p, gamma).array
    return GroupElement.of(b, b.mul(b.inv(t), b.mul(u.array, t)))


def hol_equivariance_check(p: SquarePresentation, loop: SampledPath, gamma: SampledPath, lattice: CentralLattice) -> float:
    """U-distance between ``Hol(gamma * loop * gamma^{-1})`` and ``gamma_* Hol(loop)``."""
    if np.linalg.norm(gamma.source - loop.source) > 1e-9:
        raise PathError("conjugating path must start at the loop's basepoint")
    conj = concat(gamma, concat(loop, gamma.reverse()))
    left = hol(p, conj, lattice)
    right = push_u(p, gamma, hol(p, loop, lattice))
    return u_distance(lattice, left, right)


# -- families ------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformityVerdict:
    passed: bool
    min_gap: float
    witness: float | None
    evaluated: int = 0

    def to_json(self) -> dict:
        gap = None if math.isinf(self.min_gap) else self.min_gap
        return {"verdict": "pass" if self.passed else "fail", "min_gap": gap, "witness": self.witness}


def fiber_gap(p: SquarePresentation, steps=DEFAULT_STEPS, tol=1e-6) -> float:
    d = lattice_discreteness(monodromy_generators([p], steps, tol))
    if not d.discrete:
        return 0.0
    return math.inf if d.min_gap is None else float(d.min_gap)


def local_uniform_check(
    family: Callable[[float], SquarePresentation],
    lam_range=(0.0, 1.0),
    grid: int | Sequence[float] = 101,
    threshold=1e-3,
    refine=16,
    steps=DEFAULT_STEPS,
) -> UniformityVerdict:
    """Scan the fiberwise monodromy gap over a parameter grid.

    After the grid pass, the parameter with the smallest finite gap is
    refined toward its neighbours while the gap keeps shrinking, which
    exposes gaps that close up between grid points (such as at a fiber
    where the lattice degenerates).
    """
    lams = np.asarray(np.linspace(lam_range[0], lam_range[1], grid) if np.isscalar(grid) else grid, float)
    gaps = {float(l): fiber_gap(family(float(l)), steps) for l in lams}

    def worst():
        finite = [(g, l) for l, g in gaps.items() if math.isfinite(g)]
        return min(finite) if finite else (math.inf, None)

    gap, lam = worst()
    for _ in range(refine):
        if lam is None or gap <= threshold:
            break
        keys = sorted(gaps)
        i = keys.index(lam)
        cands = [0.5 * (lam + keys[j]) for j in (i - 1, i + 1) if 0 <= j < len(keys)]
        for c in cands:
            gaps[c] = fiber_gap(family(c), steps)
        new_gap, new_lam = worst()
        if new_gap >= gap:
            break
        gap, lam = new_gap, new_lam
    passed = gap > threshold
    return UniformityVerdict(passed, gap, None if passed else lam, len(gaps))
