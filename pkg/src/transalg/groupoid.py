"""Exact finite groupoids: semi-direct products, normal embeddings and quotients.

Everything is integer tables.  Arrows are indexed ``0..n-1``; ``table[i, j]``
is the index of ``arrows[i] o arrows[j]`` (first ``j``, then ``i``) or ``-1``
when ``s(i) != t(j)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np


class GroupoidError(ValueError):
    pass


class ConditionViolation(GroupoidError):
    """A required identity fails; ``witness`` is the first counterexample found."""

    def __init__(self, condition: str, witness: tuple, message: str = ""):
        self.condition = condition
        self.witness = witness
        super().__init__(message or f"condition {condition} fails at {witness}")


# -- groups ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Elements ``0..n-1`` with multiplication table ``mul[a, b] = a b``."""

    mul: np.ndarray
    labels: tuple = ()
    name: str = ""

    def __post_init__(self):
        m = np.array(self.mul, dtype=np.int64)
        n = len(m)
        if m.shape != (n, n) or n == 0 or m.min() < 0 or m.max() >= n:
            raise GroupoidError("multiplication table must be n x n with entries in range")
        m.setflags(write=False)
        object.__setattr__(self, "mul", m)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(n)))
        e = [a for a in range(n) if np.all(m[a] == np.arange(n)) and np.all(m[:, a] == np.arange(n))]
        if len(e) != 1:
            raise GroupoidError(f"{self.name or 'group'}: no unique identity")
        object.__setattr__(self, "_e", e[0])
        inv = np.full(n, -1)
        for a in range(n):
            hit = np.nonzero(m[a] == e[0])[0]
            if len(hit) != 1 or m[hit[0], a] != e[0]:
                raise GroupoidError(f"{self.name or 'group'}: element {a} has no inverse")
            inv[a] = hit[0]
        inv.setflags(write=False)
        object.__setattr__(self, "_inv", inv)
        bad = np.argwhere(m[m, :] != m[:, m])  # (ab)c vs a(bc) -> indices a,b,c
        if len(bad):
            a, b, c = (int(x) for x in bad[0])
            raise ConditionViolation("associativity", (a, b, c), f"{self.name or 'group'} is not associative at {(a, b, c)}")

    @property
    def order(self) -> int:
        return len(self.mul)

    @property
    def e(self) -> int:
        return self._e

    def inv(self, a) -> int:
        return int(self._inv[a])

    def __call__(self, a, b) -> int:
        return int(self.mul[a, b])

    def is_abelian(self) -> bool:
        return bool(np.all(self.mul == self.mul.T))

    @classmethod
    def from_elements(cls, elements: Sequence, op: Callable, key: Callable = lambda x: x, name=""):
        elems = list(elements)
        index = {key(x): i for i, x in enumerate(elems)}
        table = [[index[key(op(a, b))] for b in elems] for a in elems]
        return cls(np.array(table), tuple(elems), name)

    def to_json(self):
        return {"name": self.name, "mul": self.mul.tolist()}


def cyclic(n: int) -> FiniteGroup:
    a = np.arange(n)
    return FiniteGroup((a[:, None] + a[None, :]) % n, tuple(range(n)), f"Z{n}")


def symmetric3() -> FiniteGroup:
    perms = sorted(itertools.permutations(range(3)))
    return FiniteGroup.from_elements(perms, lambda p, q: tuple(p[q[i]] for i in range(3)), name="S3")


def perm_sign(p) -> int:
    inversions = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inversions % 2 else 1


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    pairs = [(a, b) for a in range(g.order) for b in range(h.order)]
    return FiniteGroup.from_elements(pairs, lambda x, y: (g(x[0], y[0]), h(x[1], y[1])), name=f"{g.name}x{h.name}")


def trivial_group() -> FiniteGroup:
    return FiniteGroup(np.zeros((1, 1), int), (0,), "1")


# -- groupoids --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    objects: tuple
    labels: tuple
    source: np.ndarray
    target: np.ndarray
    table: np.ndarray
    name: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        for k in ("source", "target", "table"):
            arr = np.array(getattr(self, k), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, k, arr)
        if self.source.shape != (n,) or self.target.shape != (n,) or self.table.shape != (n, n):
            raise GroupoidError("inconsistent table shapes")
        composable = self.source[:, None] == self.target[None, :]
        if np.any(composable & (self.table < 0)) or np.any(~composable & (self.table >= 0)):
            raise GroupoidError("composition must be defined exactly on composable pairs")
        object.__setattr__(self, "_units", self._find_units())
        object.__setattr__(self, "_inverses", self._find_inverses())
        if self.check:
            violations = self.axiom_violations()
            if violations:
                cond, wit = violations[0]
                raise ConditionViolation(cond, wit, f"{self.name or 'groupoid'}: {cond} fails at {wit}")

    # structure

    @property
    def n_arrows(self) -> int:
        return len(self.labels)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def compose(self, i, j) -> int:
        k = int(self.table[i, j])
        if k < 0:
            raise GroupoidError(f"arrows {i} and {j} are not composable")
        return k

    def unit(self, x) -> int:
        return int(self._units[x])

    def inverse(self, i) -> int:
        return int(self._inverses[i])

    def isotropy(self, x) -> list:
        return [i for i in range(self.n_arrows) if self.source[i] == x and self.target[i] == x]

    def arrows_between(self, x, y) -> list:
        return [i for i in range(self.n_arrows) if self.source[i] == x and self.target[i] == y]

    def _find_units(self):
        units = np.full(self.n_objects, -1)
        for x in range(self.n_objects):
            for i in self.isotropy(x):
                into = np.nonzero(self.target == x)[0]
                out = np.nonzero(self.source == x)[0]
                if np.all(self.table[i, into] == into) and np.all(self.table[out, i] == out):
                    units[x] = i
                    break
        return units

    def _find_inverses(self):
        inv = np.full(self.n_arrows, -1)
        if np.any(self._units < 0):
            return inv
        for i in range(self.n_arrows):
            for j in self.arrows_between(self.target[i], self.source[i]):
                if self.table[j, i] == self._units[self.source[i]] and self.table[i, j] == self._units[self.target[i]]:
                    inv[i] = j
                    break
        return inv

    def axiom_violations(self, first_only=True) -> list:
        """Exhaustive check of the groupoid axioms; list of ``(condition, witness)``."""
        out = []

        def hit(cond, wit):
            out.append((cond, wit))
            return first_only

        s, t, T = self.source, self.target, self.table
        n = self.n_arrows
        for x in range(self.n_objects):
            if self._units[x] < 0 and hit("unit", (x,)):
                return out
        for i in range(n):
            if self._inverses[i] < 0 and hit("inverse", (i,)):
                return out
        for i, j in zip(*np.nonzero(T >= 0)):
            k = T[i, j]
            if (s[k] != s[j] or t[k] != t[i]) and hit("source-target", (int(i), int(j))):
                return out
        # associativity over composable triples: (i o j) o k == i o (j o k)
        for j in range(n):
            ks = np.nonzero(s[j] == t)[0]
            is_ = np.nonzero(s == t[j])[0]
            if len(ks) == 0 or len(is_) == 0:
                continue
            left = T[np.ix_(T[is_, j], ks)]
            right = T[np.ix_(is_, T[j, ks])]
            bad = np.argwhere(left != right)
            if len(bad):
                a, c = bad[0]
                if hit("associativity", (int(is_[a]), j, int(ks[c]))):
                    return out
        return out

    def is_group(self) -> bool:
        return self.n_objects == 1

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "objects": [_jsonable(o) for o in self.objects],
            "arrows": [[_jsonable(l), int(a), int(b)] for l, a, b in zip(self.labels, self.source, self.target)],
            "table": self.table.tolist(),
        }

    @classmethod
    def from_json(cls, data) -> "FiniteGroupoid":
        if isinstance(data, str):
            data = json.loads(data)
        extra = set(data) - {"name", "objects", "arrows", "table"}
        if extra:
            raise GroupoidError(f"unknown keys {sorted(extra)}")
        arrows = data["arrows"]
        return cls(
            tuple(_hashable(o) for o in data["objects"]),
            tuple(_hashable(a[0]) for a in arrows),
            [a[1] for a in arrows],
            [a[2] for a in arrows],
            data["table"],
            data.get("name", ""),
        )

    @classmethod
    def build(cls, objects, arrows, source: Callable, target: Callable, compose: Callable, key=lambda a: a, name="", check=True):
        """Tabulate a groupoid given by functions on arrow labels."""
        objects = tuple(objects)
        arrows = tuple(arrows)
        oidx = {o: i for i, o in enumerate(objects)}
        aidx = {key(a): i for i, a in enumerate(arrows)}
        src = [oidx[source(a)] for a in arrows]
        tgt = [oidx[target(a)] for a in arrows]
        n = len(arrows)
        table = np.full((n, n), -1, dtype=np.int64)
        for i, a in enumerate(arrows):
            for j, b in enumerate(arrows):
                if src[i] == tgt[j]:
                    table[i, j] = aidx[key(compose(a, b))]
        return cls(objects, arrows, src, tgt, table, name, check)


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def _hashable(x):
    if isinstance(x, list):
        return tuple(_hashable(v) for v in x)
    return x


def group_as_groupoid(g: FiniteGroup, obj="*") -> FiniteGroupoid:
    n = g.order
    return FiniteGroupoid((obj,), g.labels, [0] * n, [0] * n, g.mul, g.name)


def pair_groupoid(objects) -> FiniteGroupoid:
    objs = tuple(objects)
    arrows = [(y, x) for x in objs for y in objs]
    return FiniteGroupoid.build(objs, arrows, lambda a: a[1], lambda a: a[0], lambda a, b: (a[0], b[1]), name=f"Pair{len(objs)}")


def product_groupoid(g: FiniteGroupoid, h: FiniteGroup) -> FiniteGroupoid:
    """``G x H`` with ``H`` a group: arrows ``(gamma, z)``."""
    arrows = [(i, z) for i in range(g.n_arrows) for z in range(h.order)]
    return FiniteGroupoid.build(
        g.objects,
        arrows,
        lambda a: g.objects[g.source[a[0]]],
        lambda a: g.objects[g.target[a[0]]],
        lambda a, b: (g.compose(a[0], b[0]), h(a[1], b[1])),
        name=f"{g.name}x{h.name}",
    )


# -- bundles, actions, morphisms ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteGroupBundle:
    fibers: tuple

    @classmethod
    def constant(cls, g: FiniteGroupoid, group: FiniteGroup):
        return cls(tuple(group for _ in range(g.n_objects)))

    def __getitem__(self, x) -> FiniteGroup:
        return self.fibers[x]


@dataclass(frozen=True, eq=False)
class GroupoidAction:
    """``act[gamma][u]`` is ``gamma . u`` in the fiber over ``t(gamma)``."""

    groupoid: FiniteGroupoid
    bundle: FiniteGroupBundle
    act: tuple

    def __call__(self, gamma, u) -> int:
        return int(self.act[gamma][u])

    @classmethod
    def trivial(cls, g: FiniteGroupoid, bundle: FiniteGroupBundle):
        return cls(g, bundle, tuple(tuple(range(bundle[g.source[i]].order)) for i in range(g.n_arrows)))

    @classmethod
    def from_function(cls, g: FiniteGroupoid, bundle: FiniteGroupBundle, fn: Callable):
        return cls(g, bundle, tuple(tuple(int(fn(i, u)) for u in range(bundle[g.source[i]].order)) for i in range(g.n_arrows)))

    def violations(self, first_only=True) -> list:
        g, U = self.groupoid, self.bundle
        out = []
        for i in range(g.n_arrows):
            src, tgt = U[g.source[i]], U[g.target[i]]
            if len(self.act[i]) != src.order or any(not (0 <= v < tgt.order) for v in self.act[i]):
                out.append(("action-shape", (i,)))
                if first_only:
                    return out
        for x in range(g.n_objects):
            e = g.unit(x)
            for u in range(U[x].order):
                if self(e, u) != u:
                    out.append(("action-unit", (x, u)))
                    if first_only:
                        return out
        for i in range(g.n_arrows):
            src = U[g.source[i]]
            tgt = U[g.target[i]]
            for a in range(src.order):
                for b in range(src.order):
                    if self(i, src(a, b)) != tgt(self(i, a), self(i, b)):
                        out.append(("action-automorphism", (i, a, b)))
                        if first_only:
                            return out
        for i, j in zip(*np.nonzero(g.table >= 0)):
            k = g.table[i, j]
            for u in range(U[g.source[j]].order):
                if self(k, u) != self(i, self(j, u)):
                    out.append(("action-composition", (int(i), int(j), u)))
                    if first_only:
                        return out
        return out


def semidirect(g: FiniteGroupoid, bundle: FiniteGroupBundle, act: GroupoidAction) -> FiniteGroupoid:
    """``G |x U`` with ``(g', u') o (g, u) = (g' g, (g^{-1} . u') u)``."""
    bad = act.violations()
    if bad:
        cond, wit = bad[0]
        raise ConditionViolation(cond, wit, f"invalid action: {cond} fails at {wit}")
    arrows = [(i, u) for i in range(g.n_arrows) for u in range(bundle[g.source[i]].order)]

    def comp(a, b):
        (i2, u2), (i1, u1) = a, b
        fib = bundle[g.source[i1]]
        return (g.compose(i2, i1), fib(act(g.inverse(i1), u2), u1))

    return FiniteGroupoid.build(
        g.objects,
        arrows,
        lambda a: g.objects[g.source[a[0]]],
        lambda a: g.objects[g.target[a[0]]],
        comp,
        name=f"{g.name}|x U",
    )


@dataclass(frozen=True, eq=False)
class NormalSubgroupoid:
    """A bundle of isotropy subgroups ``L_x`` of ``G``, as sets of arrow indices."""

    groupoid: FiniteGroupoid
    members: frozenset

    def __post_init__(self):
        g = self.groupoid
        m = frozenset(int(i) for i in self.members)
        object.__setattr__(self, "members", m)
        for i in sorted(m):
            if g.source[i] != g.target[i]:
                raise ConditionViolation("isotropy", (i,), f"arrow {i} is not a loop")
        for x in range(g.n_objects):
            if g.unit(x) not in m:
                raise ConditionViolation("contains-units", (x,))
        for i in sorted(m):
            if g.inverse(i) not in m:
                raise ConditionViolation("closed-inverse", (i,))
            for j in sorted(m):
                if g.table[i, j] >= 0 and int(g.table[i, j]) not in m:
                    raise ConditionViolation("closed-composition", (i, j))
        for gam in range(g.n_arrows):
            for lam in sorted(m):
                if g.source[gam] == g.source[lam]:
                    c = g.compose(g.compose(gam, lam), g.inverse(gam))
                    if c not in m:
                        raise ConditionViolation("normal", (gam, lam))

    def at(self, x) -> list:
        return sorted(i for i in self.members if self.groupoid.source[i] == x)

    @classmethod
    def trivial(cls, g: FiniteGroupoid):
        return cls(g, frozenset(g.unit(x) for x in range(g.n_objects)))


@dataclass(frozen=True, eq=False)
class BundleMorphism:
    """Fiberwise homomorphism ``f: L_x -> U_x`` given on arrow indices of ``L``."""

    L: NormalSubgroupoid
    bundle: FiniteGroupBundle
    f: dict

    def __call__(self, lam) -> int:
        return int(self.f[lam])

    @classmethod
    def trivial(cls, L: NormalSubgroupoid, bundle: FiniteGroupBundle):
        g = L.groupoid
        return cls(L, bundle, {i: bundle[g.source[i]].e for i in L.members})

    def homomorphism_violations(self):
        g = self.L.groupoid
        for i in sorted(self.L.members):
            for j in sorted(self.L.members):
                if g.table[i, j] >= 0:
                    U = self.bundle[g.source[i]]
                    if self(g.compose(i, j)) != U(self(i), self(j)):
                        return [("homomorphism", (i, j))]
        return []

    def condition_a(self, act: GroupoidAction):
        """``lam . u = f(lam) u f(lam)^{-1}``; first counterexample ``(lam, u)`` or None."""
        g = self.L.groupoid
        for lam in sorted(self.L.members):
            U = self.bundle[g.source[lam]]
            fl = self(lam)
            for u in range(U.order):
                if act(lam, u) != U(U(fl, u), U.inv(fl)):
                    return (lam, u)
        return None

    def condition_b(self, act: GroupoidAction):
        """``f(gamma lam gamma^{-1}) = gamma . f(lam)``; first counterexample ``(gamma, lam)`` or None."""
        g = self.L.groupoid
        for gam in range(g.n_arrows):
            for lam in self.L.at(g.source[gam]):
                conj = g.compose(g.compose(gam, lam), g.inverse(gam))
                if self(conj) != act(gam, self(lam)):
                    return (gam, lam)
        return None


@dataclass(frozen=True, eq=False)
class SemidirectData:
    """Everything needed to form ``(G |x U) / L``."""

    groupoid: FiniteGroupoid
    bundle: FiniteGroupBundle
    action: GroupoidAction
    L: NormalSubgroupoid
    f: BundleMorphism
    name: str = ""

    def product(self) -> FiniteGroupoid:
        return semidirect(self.groupoid, self.bundle, self.action)


def _arrow_index(product: FiniteGroupoid):
    return {lab: i for i, lab in enumerate(product.labels)}


def embed_L(product: FiniteGroupoid, data: SemidirectData) -> dict:
    """Map ``lam -> (lam, f(lam^{-1}))`` into the semi-direct product, verified exhaustively.

    Returns ``{lam: arrow index in product}``.
    """
    g, U, act, f = data.groupoid, data.bundle, data.action, data.f
    bad = f.homomorphism_violations()
    if bad:
        raise ConditionViolation(*bad[0])
    wit = f.condition_a(act)
    if wit is not None:
        raise ConditionViolation("a", wit, f"condition (a) fails at (lambda, u) = {wit}")
    wit = f.condition_b(act)
    if wit is not None:
        raise ConditionViolation("b", wit, f"condition (b) fails at (gamma, lambda) = {wit}")
    idx = _arrow_index(product)
    emb = {lam: idx[(lam, f(g.inverse(lam)))] for lam in sorted(data.L.members)}
    image = set(emb.values())
    for l1 in sorted(emb):
        for l2 in sorted(emb):
            if g.table[l1, l2] >= 0:
                prod = product.compose(emb[l1], emb[l2])
                if prod != emb[g.compose(l1, l2)]:
                    raise ConditionViolation("embedding-morphism", (l1, l2))
        if product.inverse(emb[l1]) not in image:
            raise ConditionViolation("embedding-inverse", (l1,))
    for x in range(product.n_arrows):
        for lam, y in emb.items():
            if product.source[x] == product.source[y]:
                c = product.compose(product.compose(x, y), product.inverse(x))
                if c not in image:
                    raise ConditionViolation("embedding-normal", (x, lam))
    return emb


@dataclass(frozen=True, eq=False)
class Quotient:
    groupoid: FiniteGroupoid
    classes: tuple
    q: np.ndarray

    def project(self, arrow) -> int:
        return int(self.q[arrow])


def quotient(product: FiniteGroupoid, emb: dict, data: SemidirectData) -> Quotient:
    """Classes of ``(g1,u1) ~ (g0,u0)`` iff ``g1^{-1} g0 in L`` and ``u1 = f(g1^{-1} g0) u0``."""
    g, U, f = data.groupoid, data.bundle, data.f
    members = data.L.members
    labels = product.labels
    n = product.n_arrows
    cls_of = np.full(n, -1)
    classes = []
    for a in range(n):
        if cls_of[a] >= 0:
            continue
        g1, u1 = labels[a]
        members_a = []
        for b in range(n):
            g0, u0 = labels[b]
            if g.target[g0] != g.target[g1]:
                continue
            d = g.table[g.inverse(g1), g0]
            if d >= 0 and int(d) in members and u1 == U[g.source[g1]](f(int(d)), u0):
                members_a.append(b)
        for b in members_a:
            if cls_of[b] >= 0:
                raise GroupoidError("equivalence classes overlap (relation not transitive)")
            cls_of[b] = len(classes)
        classes.append(tuple(members_a))
    # classes are also the orbits of right multiplication by the image of L
    for a in range(n):
        for y in emb.values():
            if product.table[a, y] >= 0 and cls_of[product.table[a, y]] != cls_of[a]:
                raise GroupoidError("relation disagrees with the L-orbits")
    m = len(classes)
    reps = [c[0] for c in classes]
    src = [product.source[r] for r in reps]
    tgt = [product.target[r] for r in reps]
    table = np.full((m, m), -1, dtype=np.int64)
    for i in range(m):
        for j in range(m):
            if src[i] != tgt[j]:
                continue
            results = {int(cls_of[product.table[x, y]]) for x in classes[i] for y in classes[j]}
            if len(results) != 1:
                raise GroupoidError(f"ill-defined composition on classes {i}, {j}")
            table[i, j] = results.pop()
    qg = FiniteGroupoid(product.objects, tuple(labels[r] for r in reps), src, tgt, table, f"({product.name})/L")
    for x, y in zip(*np.nonzero(product.table >= 0)):
        if qg.table[cls_of[x], cls_of[y]] != cls_of[product.table[x, y]]:
            raise GroupoidError("quotient map is not a morphism")
    cls_of.setflags(write=False)
    return Quotient(qg, tuple(classes), cls_of)


# -- isomorphism search ----------------------------------------------------------------


def find_isomorphism(a: FiniteGroupoid, b: FiniteGroupoid, cap=50):
    """Arrow bijection ``phi`` with ``phi(x o y) = phi(x) o phi(y)``, or None."""
    if a.n_arrows != b.n_arrows or a.n_objects != b.n_objects:
        return None
    if a.n_arrows > cap:
        raise GroupoidError(f"isomorphism search capped at {cap} arrows")
    n = a.n_arrows

    def orders(g):
        out = []
        for i in range(g.n_arrows):
            if g.source[i] != g.target[i]:
                out.append(0)
                continue
            k, x = 1, i
            while x != g.unit(g.source[i]):
                x = g.compose(x, i)
                k += 1
            out.append(k)
        return out

    oa, ob = orders(a), orders(b)
    iso_a = [len(a.isotropy(a.source[i])) for i in range(n)]
    iso_b = [len(b.isotropy(b.source[i])) for i in range(n)]
    sig_a = [(oa[i], iso_a[i], a.source[i] == a.target[i]) for i in range(n)]
    sig_b = [(ob[i], iso_b[i], b.source[i] == b.target[i]) for i in range(n)]
    if sorted(sig_a) != sorted(sig_b):
        return None

    def extend(phi, obj, x, y):
        """Assign ``x -> y`` and close under composition; None on conflict."""
        phi = dict(phi)
        obj = dict(obj)
        stack = [(x, y)]
        while stack:
            x, y = stack.pop()
            if x in phi:
                if phi[x] != y:
                    return None
                continue
            if sig_a[x] != sig_b[y]:
                return None
            for u, v in ((a.source[x], b.source[y]), (a.target[x], b.target[y])):
                if obj.get(u, v) != v:
                    return None
                obj[u] = v
            if len(set(obj.values())) != len(obj):
                return None
            phi[x] = y
            for z in list(phi):
                w = phi[z]
                if a.table[x, z] >= 0:
                    if b.table[y, w] < 0:
                        return None
                    stack.append((int(a.table[x, z]), int(b.table[y, w])))
                if a.table[z, x] >= 0:
                    if b.table[w, y] < 0:
                        return None
                    stack.append((int(a.table[z, x]), int(b.table[w, y])))
        if len(set(phi.values())) != len(phi):
            return None
        return phi, obj

    def search(phi, obj):
        if len(phi) == n:
            return phi
        x = next(i for i in range(n) if i not in phi)
        used = set(phi.values())
        for y in range(n):
            if y in used:
                continue
            nxt = extend(phi, obj, x, y)
            if nxt is not None:
                res = search(*nxt)
                if res is not None:
                    return res
        return None

    return search({}, {})


def is_isomorphic(a, b, cap=50) -> bool:
    return find_isomorphism(a, b, cap) is not None


# -- fixtures -------------------------------------------------------------------------


def _fixture(g, U_group, act_fn=None, L_members=None, f_fn=None, name=""):
    bundle = FiniteGroupBundle.constant(g, U_group)
    act = GroupoidAction.trivial(g, bundle) if act_fn is None else GroupoidAction.from_function(g, bundle, act_fn)
    L = NormalSubgroupoid.trivial(g) if L_members is None else NormalSubgroupoid(g, frozenset(L_members))
    f = BundleMorphism.trivial(L, bundle) if f_fn is None else BundleMorphism(L, bundle, {i: f_fn(i) for i in L.members})
    return SemidirectData(g, bundle, act, L, f, name)


def fixtures() -> dict:
    """Named Appendix-style test instances (all with at most 72 product arrows)."""
    out = {}
    pair2 = pair_groupoid((1, 2))
    out["pair2-z2-trivial"] = _fixture(pair2, cyclic(2), name="pair2-z2-trivial")
    z4 = group_as_groupoid(cyclic(4))
    out["z4-z2-trivial"] = _fixture(z4, cyclic(2), name="z4-z2-trivial")
    s3 = group_as_groupoid(symmetric3())
    sign = {i: perm_sign(p) for i, p in enumerate(symmetric3().labels)}
    out["s3-z3-sign"] = _fixture(s3, cyclic(3), act_fn=lambda i, u: (sign[i] * u) % 3, name="s3-z3-sign")
    out["z4-L2-z2"] = _fixture(z4, cyclic(2), L_members={0, 2}, f_fn=lambda i: i // 2, name="z4-L2-z2")
    pair3z2 = product_groupoid(pair_groupoid((1, 2, 3)), cyclic(2))
    loops = [i for i in range(pair3z2.n_arrows) if pair3z2.source[i] == pair3z2.target[i]]
    out["pair3xz2-L-z4"] = _fixture(pair3z2, cyclic(4), L_members=loops, f_fn=lambda i: 2 * pair3z2.labels[i][1], name="pair3xz2-L-z4")
    pair2z4 = product_groupoid(pair2, cyclic(4))
    l2 = [i for i in range(pair2z4.n_arrows) if pair2z4.source[i] == pair2z4.target[i] and pair2z4.labels[i][1] in (0, 2)]
    out["pair2xz4-L2-z2"] = _fixture(pair2z4, cyclic(2), L_members=l2, f_fn=lambda i: pair2z4.labels[i][1] // 2, name="pair2xz4-L2-z2")
    return out


def invalid_fixture() -> SemidirectData:
    """U = S3 over a point, L = Z2 = G, f sends the generator to a transposition, trivial action."""
    z2 = group_as_groupoid(cyclic(2))
    s3 = symmetric3()
    transposition = s3.labels.index((1, 0, 2))
    return _fixture(z2, s3, L_members={0, 1}, f_fn=lambda i: transposition if i == 1 else s3.e, name="invalid-a")


@dataclass(frozen=True)
class SuiteReport:
    name: str
    product_arrows: int
    quotient_arrows: int
    passed: bool
    detail: str = ""


def run_fixture(data: SemidirectData) -> SuiteReport:
    """semidirect, embed_L and quotient with every exhaustive check."""
    prod = data.product()
    expected = sum(data.bundle[data.groupoid.source[i]].order for i in range(data.groupoid.n_arrows))
    if prod.n_arrows != expected:
        return SuiteReport(data.name, prod.n_arrows, 0, False, "arrow count")
    emb = embed_L(prod, data)
    q = quotient(prod, emb, data)
    qg = q.groupoid
    sizes = {len(c) for c in q.classes}
    if any(len(c) != len(data.L.at(prod.source[c[0]])) for c in q.classes):
        return SuiteReport(data.name, prod.n_arrows, qg.n_arrows, False, f"class sizes {sorted(sizes)}")
    for x in range(qg.n_objects):
        want = data.bundle[x].order * len(data.groupoid.isotropy(x)) // len(data.L.at(x))
        if len(qg.isotropy(x)) != want:
            return SuiteReport(data.name, prod.n_arrows, qg.n_arrows, False, "isotropy order")
    return SuiteReport(data.name, prod.n_arrows, qg.n_arrows, True)


def appendix_suite() -> list:
    reports = [run_fixture(d) for d in fixtures().values()]
    try:
        run_fixture(invalid_fixture())
        reports.append(SuiteReport("invalid-a", 0, 0, False, "no counterexample found"))
    except ConditionViolation as exc:
        ok = exc.condition == "a"
        reports.append(SuiteReport("invalid-a", 0, 0, ok, f"counterexample {exc.witness}"))
    return reports


def semidirect_data_to_json(d: SemidirectData) -> dict:
    g = d.groupoid
    return {
        "name": d.name,
        "groupoid": g.to_json(),
        "fibers": [d.bundle[x].mul.tolist() for x in range(g.n_objects)],
        "action": [list(row) for row in d.action.act],
        "L": sorted(d.L.members),
        "f": [[i, d.f(i)] for i in sorted(d.L.members)],
    }


def semidirect_data_from_json(data) -> SemidirectData:
    """Inverse of :func:`semidirect_data_to_json`; an omitted action, L or f means trivial."""
    if isinstance(data, str):
        data = json.loads(data)
    extra = set(data) - {"name", "groupoid", "fibers", "action", "L", "f"}
    if extra:
        raise GroupoidError(f"unknown keys {sorted(extra)}")
    g = FiniteGroupoid.from_json(data["groupoid"])
    fibers = data["fibers"]
    if len(fibers) != g.n_objects:
        raise GroupoidError("need one fiber table per object")
    bundle = FiniteGroupBundle(tuple(FiniteGroup(np.array(m)) for m in fibers))
    act = GroupoidAction(g, bundle, tuple(tuple(int(v) for v in row) for row in data["action"])) if "action" in data else GroupoidAction.trivial(g, bundle)
    L = NormalSubgroupoid(g, frozenset(data["L"])) if "L" in data else NormalSubgroupoid.trivial(g)
    f = BundleMorphism(L, bundle, {int(i): int(v) for i, v in data["f"]}) if "f" in data else BundleMorphism.trivial(L, bundle)
    if set(f.f) != set(L.members):
        raise GroupoidError("f must be given on every arrow of L")
    return SemidirectData(g, bundle, act, L, f, data.get("name", ""))
