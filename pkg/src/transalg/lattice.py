"""Finitely generated central subgroups: membership, distance mod the lattice, discreteness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groups import Backend, GroupElement, is_central


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Discreteness:
    """Verdict of :func:`lattice_discreteness`.

    ``min_gap`` is the norm of the shortest reduced generator (``inf`` for
    the trivial lattice).  A ``False`` verdict means numerically non-discrete:
    reduction produced a nonzero element shorter than ``eps``.
    """

    discrete: bool
    min_gap: float | None = None
    reduced: tuple = ()
    iterations: int = 0

    def to_json(self) -> dict:
        return {
            "verdict": "discrete" if self.discrete else "non-discrete",
            "min_gap": None if self.min_gap is None or math.isinf(self.min_gap) else self.min_gap,
        }


def _reduce_real(vectors, eps, cap, zero_tol):
    """Euclid / continued-fraction style reduction of real generators.

    Returns ``(reduced, small, iterations)``; ``small`` is a nonzero vector
    shorter than ``eps`` if one appeared before the cap.
    """
    gens = [np.array(v, float) for v in vectors if np.linalg.norm(v) > zero_tol]
    for it in range(1, cap + 1):
        gens.sort(key=np.linalg.norm)
        # collapse ties up to sign
        kept = []
        for g in gens:
            if any(min(np.linalg.norm(g - h), np.linalg.norm(g + h)) < eps for h in kept):
                continue
            kept.append(g)
        gens = kept
        changed = False
        for i in range(len(gens)):
            for j in range(i):
                gj = gens[j]
                if np.linalg.norm(gj) <= zero_tol:
                    continue
                q = round(float(gens[i] @ gj) / float(gj @ gj))
                if q:
                    gens[i] = gens[i] - q * gj
                    changed = True
        # generators beyond the rank of their span: reduce into the fundamental cell
        if len(gens) > 1:
            gens.sort(key=np.linalg.norm)
            basis, extra = [], []
            for g in gens:
                cand = basis + [g]
                if np.linalg.matrix_rank(np.array(cand), tol=zero_tol * 10) == len(cand):
                    basis.append(g)
                else:
                    extra.append(g)
            if extra:
                b = np.array(basis).T
                for k, x in enumerate(extra):
                    coef, *_ = np.linalg.lstsq(b, x, rcond=None)
                    r = np.round(coef)
                    if np.any(r != 0):
                        extra[k] = x - b @ r
                        changed = True
                gens = basis + extra
        norms = [float(np.linalg.norm(g)) for g in gens]
        for g, n in zip(gens, norms):
            if zero_tol < n < eps:
                return gens, g, it
        gens = [g for g, n in zip(gens, norms) if n > zero_tol]
        if not changed:
            return gens, None, it
    return gens, None, cap


@dataclass(frozen=True, eq=False)
class CentralLattice:
    """Subgroup of the center generated by ``generators``."""

    backend: Backend
    generators: tuple = ()
    tol: float = 1e-6
    eps: float = 1e-9
    cap: int = 64
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        for g in gens:
            if not isinstance(g, GroupElement):
                raise LatticeError("generators must be GroupElement values")
            if g.backend != self.backend:
                raise LatticeError(f"generator on {g.backend.name}, lattice on {self.backend.name}")
            if not is_central(g, self.tol):
                raise LatticeError(f"non-central generator {g!r}")
        object.__setattr__(self, "generators", gens)

    @property
    def kind(self) -> str:
        return self.backend.center_kind

    def with_generators(self, extra) -> "CentralLattice":
        return CentralLattice(self.backend, self.generators + tuple(extra), self.tol, self.eps, self.cap)

    # -- cyclic centers ----------------------------------------------------

    def _indices(self):
        out = []
        for g in self.generators:
            k = self.backend.central_index(g.array, self.tol)
            if k is None:
                raise LatticeError(f"{g!r} is not in the discrete center of {self.backend.name}")
            out.append(k)
        return out

    def _cyclic_step(self) -> int:
        """Index of the generator of the lattice in the cyclic center (0 if trivial)."""
        if "step" not in self._cache:
            idx = self._indices()
            if self.kind == "Z2":
                d = 1 if any(k % 2 for k in idx) else 0
            else:
                d = 0
                for k in idx:
                    d = math.gcd(d, abs(k))
            self._cache["step"] = d
        return self._cache["step"]

    # -- real centers ------------------------------------------------------

    def _real_reduction(self):
        if "real" not in self._cache:
            vecs = [g.array for g in self.generators]
            scale = max([float(np.linalg.norm(v)) for v in vecs] + [1.0])
            self._cache["real"] = _reduce_real(vecs, self.eps, self.cap, 1e-13 * scale)
        return self._cache["real"]

    def _lattice_points_near(self, g: GroupElement):
        b = self.backend
        if self.kind == "R^n":
            gens, _, _ = self._real_reduction()
            if not gens:
                return [np.zeros(b.ncoords)]
            basis = np.array(gens).T
            coef, *_ = np.linalg.lstsq(basis, g.array, rcond=None)
            base = np.round(coef)
            pts = []
            for delta in np.ndindex(*([3] * len(gens))):
                pts.append(basis @ (base + np.array(delta) - 1))
            return pts
        d = self._cyclic_step()
        if d == 0:
            return [b.identity()]
        if self.kind == "Z2":
            return [b.central_from_index(0), b.central_from_index(1)]
        m = round(b.center_coordinate(g.array) / d)
        return [b.central_from_index((m + j) * d) for j in (-1, 0, 1)]

    def distance_mod(self, g: GroupElement) -> float:
        """Distance from ``g`` to the nearest lattice point, measured at the identity."""
        if g.backend != self.backend:
            raise LatticeError("backend mismatch")
        b = self.backend
        best = math.inf
        for z in self._lattice_points_near(g):
            best = min(best, float(b.dist(b.mul(g.array, b.inv(z)))))
        return best

    def equal_mod(self, g: GroupElement, h: GroupElement) -> bool:
        b = self.backend
        return self.distance_mod(GroupElement.of(b, b.mul(g.array, b.inv(h.array)))) <= self.tol

    def reduce(self, g: GroupElement) -> GroupElement:
        """Representative of ``g`` modulo the lattice closest to the identity."""
        b = self.backend
        best, arg = math.inf, g.array
        for z in self._lattice_points_near(g):
            cand = b.mul(g.array, b.inv(z))
            d = float(b.dist(cand))
            if d < best:
                best, arg = d, cand
        return GroupElement.of(b, arg)


def lattice_membership(lattice: CentralLattice, g: GroupElement) -> bool:
    return lattice.distance_mod(g) <= lattice.tol


def lattice_discreteness(lattice: CentralLattice) -> Discreteness:
    b = lattice.backend
    if lattice.kind == "R^n":
        gens, small, it = lattice._real_reduction()
        if small is not None:
            return Discreteness(False, float(np.linalg.norm(small)), tuple(tuple(float(x) for x in v) for v in gens), it)
        if not gens:
            return Discreteness(True, math.inf, (), it)
        red = tuple(tuple(float(x) for x in v) for v in gens)
        if len(gens) > 1:
            # a dense subgroup drives the covolume of the reduced basis to zero
            # long before any single vector drops below eps in floating point
            m = np.array(gens)
            covol = math.sqrt(max(float(np.linalg.det(m @ m.T)), 0.0))
            if covol < lattice.eps:
                return Discreteness(False, min(float(np.linalg.norm(v)) for v in gens), red, it)
        return Discreteness(True, min(float(np.linalg.norm(v)) for v in gens), tuple(tuple(float(x) for x in v) for v in gens), it)
    d = lattice._cyclic_step()
    if d == 0:
        return Discreteness(True, math.inf)
    z = b.central_from_index(d)
    return Discreteness(True, float(b.dist(z)), (tuple(float(x) for x in z),))
