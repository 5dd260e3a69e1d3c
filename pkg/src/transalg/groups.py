"""Simply connected group backends: exp, products, adjoint action and centers.

Every backend works on coordinate arrays with arbitrary leading batch axes,
so a sweep over many loops can advance all of them in one numpy call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lie

TWO_PI = 2.0 * math.pi


class BackendError(ValueError):
    pass


def wrap_angle(x):
    """Reduce to ``[-pi, pi)``."""
    return x - TWO_PI * np.floor((x + math.pi) / TWO_PI)


def _rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise BackendError("non-finite input")
    return x


class Backend:
    """Base class; subclasses are frozen dataclasses so they compare by value."""

    name: str
    dim: int
    ncoords: int
    #: one of "trivial", "Z2", "Z", "R^n"
    center_kind: str

    def algebra(self) -> lie.LieAlgebra:
        raise NotImplementedError

    def identity(self, shape=()) -> np.ndarray:
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def exp(self, xi):
        raise NotImplementedError

    def log(self, g):
        """Algebra element near zero; only meaningful near the identity."""
        raise NotImplementedError

    def adjoint(self, g, xi):
        raise NotImplementedError

    def dist(self, g):
        raise NotImplementedError

    def period(self, xi) -> float | None:
        raise NotImplementedError

    def central_index(self, g, tol: float = 1e-8):
        """Integer index of a central element in the discrete center, or None."""
        return None

    def central_from_index(self, k: int):
        raise BackendError(f"{self.name} has no cyclic center")

    def center_coordinate(self, g) -> float:
        """Real coordinate along the discrete center in which generator k sits at k."""
        return 0.0


@dataclass(frozen=True)
class Abelian(Backend):
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise BackendError("Abelian(n) needs n >= 1")

    name = property(lambda self: f"Abelian({self.n})")
    dim = property(lambda self: self.n)
    ncoords = property(lambda self: self.n)
    center_kind = "R^n"

    def algebra(self):
        return lie.abelian(self.n)

    def identity(self, shape=()):
        return np.zeros(tuple(shape) + (self.n,))

    def mul(self, a, b):
        return np.asarray(a, float) + np.asarray(b, float)

    def inv(self, a):
        return -np.asarray(a, float)

    def exp(self, xi):
        return _check_finite(xi).copy()

    def log(self, g):
        return np.asarray(g, float).copy()

    def adjoint(self, g, xi):
        return np.broadcast_to(np.asarray(xi, float), np.broadcast_shapes(np.shape(g), np.shape(xi))).copy()

    def dist(self, g):
        return np.linalg.norm(np.asarray(g, float), axis=-1)

    def period(self, xi):
        return None


def _qmul(a, b):
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        -1,
    )


def _qnormalize(q):
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


@dataclass(frozen=True)
class SU2(Backend):
    """Unit quaternions ``(w, x, y, z)``; algebra basis ``e_a = q_a / 2``."""

    name = "SU2"
    dim = 3
    ncoords = 4
    center_kind = "Z2"

    def algebra(self):
        return lie.su2()

    def identity(self, shape=()):
        out = np.zeros(tuple(shape) + (4,))
        out[..., 0] = 1.0
        return out

    def mul(self, a, b):
        return _qnormalize(_qmul(np.asarray(a, float), np.asarray(b, float)))

    def inv(self, a):
        a = np.asarray(a, float)
        return a * np.array([1.0, -1.0, -1.0, -1.0])

    def exp(self, xi):
        xi = _check_finite(xi)
        r = np.linalg.norm(xi, axis=-1, keepdims=True)
        # sin(r/2)/r written through numpy's normalized sinc
        k = 0.5 * np.sinc(r / TWO_PI)
        return np.concatenate([np.cos(r / 2), k * xi], -1)

    def log(self, g):
        g = np.asarray(g, float)
        v = g[..., 1:]
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        ang = 2.0 * np.arctan2(nv, g[..., :1])
        fac = np.where(nv > 1e-15, ang / np.where(nv > 1e-15, nv, 1.0), 2.0)
        return fac * v

    def rotation(self, g):
        q = np.asarray(g, float)
        w, x, y, z = np.moveaxis(q, -1, 0)
        return np.stack(
            [
                np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
                np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
                np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
            ],
            -2,
        )

    def adjoint(self, g, xi):
        return np.einsum("...ij,...j->...i", self.rotation(g), np.asarray(xi, float))

    def dist(self, g):
        g = np.asarray(g, float)
        return 2.0 * np.arctan2(np.linalg.norm(g[..., 1:], axis=-1), g[..., 0])

    def period(self, xi):
        r = float(np.linalg.norm(_check_finite(xi)))
        return None if r == 0.0 else 2.0 * TWO_PI / r

    def central_index(self, g, tol=1e-8):
        g = np.asarray(g, float)
        if np.linalg.norm(g[1:]) > tol:
            return None
        return 0 if g[0] > 0 else 1

    def central_from_index(self, k):
        out = self.identity()
        out[0] = -1.0 if k % 2 else 1.0
        return out


# sl(2, R) basis: e1 = diag(1,-1)/2, e2 = [[0,1],[1,0]]/2, e3 = [[0,-1],[1,0]]/2,
# so that [e1,e2] = -e3, [e3,e1] = e2, [e3,e2] = -e1.
_SL2_BASIS = 0.5 * np.array(
    [[[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [1.0, 0.0]], [[0.0, -1.0], [1.0, 0.0]]]
)


def sl2_matrix_of(xi):
    return np.einsum("...a,aij->...ij", np.asarray(xi, float), _SL2_BASIS)


def sl2_coords_of(x):
    p, q, r = x[..., 0, 0], x[..., 0, 1], x[..., 1, 0]
    return np.stack([2 * p, q + r, r - q], -1)


def sl2_algebra() -> lie.LieAlgebra:
    c = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            m = _SL2_BASIS[i] @ _SL2_BASIS[j] - _SL2_BASIS[j] @ _SL2_BASIS[i]
            c[:, i, j] = sl2_coords_of(m)
    return lie.LieAlgebra(c, label="sl2")


def _sl2_exp_matrix(x):
    # x^2 = delta * I for traceless 2x2 x
    delta = -np.linalg.det(x)
    r = np.sqrt(np.abs(delta))
    c = np.where(delta >= 0, np.cosh(r), np.cos(r))
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > 1e-8, np.where(delta >= 0, np.sinh(r), np.sin(r)) / np.where(r > 1e-8, r, 1.0), 1.0 + delta / 6.0)
    eye = np.broadcast_to(np.eye(2), x.shape)
    return c[..., None, None] * eye + s[..., None, None] * x


@dataclass(frozen=True)
class SL2Cover(Backend):
    """Universal cover of SL(2, R) in Iwasawa coordinates ``(angle lift, a, n)``.

    The projection is ``K(angle) diag(a, 1/a) [[1, n], [0, 1]]``; the angle is
    the argument of the first column of the matrix, lifted to the real line.
    """

    name = "SL2Cover"
    dim = 3
    ncoords = 3
    center_kind = "Z"

    def algebra(self):
        return sl2_algebra()

    def identity(self, shape=()):
        out = np.zeros(tuple(shape) + (3,))
        out[..., 1] = 1.0
        return out

    @staticmethod
    def matrix(g):
        g = np.asarray(g, float)
        th, a, n = g[..., 0], g[..., 1], g[..., 2]
        an = np.stack([np.stack([a, a * n], -1), np.stack([np.zeros_like(a), 1.0 / a], -1)], -2)
        return _rot(th) @ an

    @staticmethod
    def _iwasawa(m):
        a = np.hypot(m[..., 0, 0], m[..., 1, 0])
        th = np.arctan2(m[..., 1, 0], m[..., 0, 0])
        n = (np.cos(th) * m[..., 0, 1] + np.sin(th) * m[..., 1, 1]) / a
        return th, a, n

    def mul(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        th, r, n = self._iwasawa(self.matrix(a) @ self.matrix(b))
        base = a[..., 0] + b[..., 0]
        lift = base + wrap_angle(th - base)
        return np.stack([lift, r, n], -1)

    def inv(self, a):
        a = np.asarray(a, float)
        th, r, n = self._iwasawa(np.linalg.inv(self.matrix(a)))
        lift = -a[..., 0] - wrap_angle(-th - a[..., 0])
        return np.stack([lift, r, n], -1)

    def exp(self, xi):
        xi = _check_finite(xi)
        norm = float(np.max(np.linalg.norm(xi, axis=-1), initial=0.0))
        k = max(0, math.ceil(math.log2(norm / 0.25))) if norm > 0.25 else 0
        m = _sl2_exp_matrix(sl2_matrix_of(xi / 2.0**k))
        th, r, n = self._iwasawa(m)
        g = np.stack([th, r, n], -1)
        for _ in range(k):
            g = self.mul(g, g)
        return g

    def log(self, g):
        m = self.matrix(g)
        c = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            rh = np.arccosh(np.maximum(c, 1.0))
            rc = np.arccos(np.clip(c, -1.0, 1.0))
            fac = np.where(
                c > 1.0 + 1e-12,
                rh / np.where(rh > 0, np.sinh(rh), 1.0),
                np.where(c < 1.0 - 1e-12, rc / np.where(rc > 0, np.sin(rc), 1.0), 1.0),
            )
        x = fac[..., None, None] * (m - c[..., None, None] * np.eye(2))
        return sl2_coords_of(x)

    def adjoint(self, g, xi):
        m = self.matrix(g)
        x = sl2_matrix_of(xi)
        return sl2_coords_of(m @ x @ np.linalg.inv(m))

    def dist(self, g):
        g = np.asarray(g, float)
        return np.sqrt(g[..., 0] ** 2 + np.log(g[..., 1]) ** 2 + g[..., 2] ** 2)

    def period(self, xi):
        _check_finite(xi)
        return None

    def central_index(self, g, tol=1e-8):
        g = np.asarray(g, float)
        k = round(g[0] / math.pi)
        if abs(g[0] - k * math.pi) > tol or abs(g[1] - 1.0) > tol or abs(g[2]) > tol:
            return None
        return int(k)

    def central_from_index(self, k):
        return np.array([k * math.pi, 1.0, 0.0])

    def center_coordinate(self, g):
        return float(np.asarray(g, float)[0] / math.pi)


def euclid_algebra() -> lie.LieAlgebra:
    # basis (x, y, z): translations e1, e2 and the rotation generator
    return lie.douady(0.0)


def _euclid_v(omega):
    # V(w) = [[sin w, -(1 - cos w)], [1 - cos w, sin w]] / w
    small = np.abs(omega) < 1e-6
    w = np.where(small, 1.0, omega)
    a = np.where(small, 1.0 - omega**2 / 6.0, np.sin(w) / w)
    b = np.where(small, omega / 2.0 - omega**3 / 24.0, (1.0 - np.cos(w)) / w)
    return np.stack([np.stack([a, -b], -1), np.stack([b, a], -1)], -2)


@dataclass(frozen=True)
class EuclideanCover(Backend):
    """Universal cover of SE(2): coordinates ``(phi, v1, v2)``, algebra ``(x, y, z)``."""

    name = "EuclideanCover"
    dim = 3
    ncoords = 3
    center_kind = "Z"

    def algebra(self):
        return euclid_algebra()

    def identity(self, shape=()):
        return np.zeros(tuple(shape) + (3,))

    def mul(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        v = a[..., 1:] + np.einsum("...ij,...j->...i", _rot(a[..., 0]), b[..., 1:])
        return np.concatenate([(a[..., 0] + b[..., 0])[..., None], v], -1)

    def inv(self, a):
        a = np.asarray(a, float)
        v = -np.einsum("...ij,...j->...i", _rot(-a[..., 0]), a[..., 1:])
        return np.concatenate([-a[..., :1], v], -1)

    def exp(self, xi):
        xi = _check_finite(xi)
        om = xi[..., 2]
        v = np.einsum("...ij,...j->...i", _euclid_v(om), xi[..., :2])
        return np.concatenate([om[..., None], v], -1)

    def log(self, g):
        g = np.asarray(g, float)
        u = np.linalg.solve(_euclid_v(g[..., 0]), g[..., 1:, None])[..., 0]
        return np.concatenate([u, g[..., :1]], -1)

    def adjoint(self, g, xi):
        g = np.asarray(g, float)
        xi = np.asarray(xi, float)
        u = np.einsum("...ij,...j->...i", _rot(g[..., 0]), xi[..., :2])
        jv = np.stack([-g[..., 2], g[..., 1]], -1)
        u = u - xi[..., 2:3] * jv
        return np.concatenate([u, xi[..., 2:3] * np.ones_like(g[..., :1])], -1)

    def dist(self, g):
        return np.linalg.norm(np.asarray(g, float), axis=-1)

    def period(self, xi):
        _check_finite(xi)
        return None

    def central_index(self, g, tol=1e-8):
        g = np.asarray(g, float)
        k = round(g[0] / TWO_PI)
        if abs(g[0] - k * TWO_PI) > tol or np.linalg.norm(g[1:]) > tol:
            return None
        return int(k)

    def central_from_index(self, k):
        return np.array([k * TWO_PI, 0.0, 0.0])

    def center_coordinate(self, g):
        return float(np.asarray(g, float)[0] / TWO_PI)


@dataclass(frozen=True)
class DouadyFiber(Backend):
    """Simply connected group of the fiber h_s at parameter ``s``.

    Delegates to SU2 (s > 0), EuclideanCover (s = 0) or SL2Cover (s < 0)
    through ``x = sqrt|s| e1, y = sqrt|s| e2, z = e3``.
    """

    s: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.s):
            raise BackendError("DouadyFiber parameter must be finite")

    name = property(lambda self: f"DouadyFiber({self.s:g})")
    dim = 3
    ncoords = property(lambda self: self.under.ncoords)
    center_kind = property(lambda self: self.under.center_kind)

    @property
    def under(self) -> Backend:
        if self.s > 0:
            return SU2()
        if self.s == 0:
            return EuclideanCover()
        return SL2Cover()

    @property
    def _scale(self):
        r = math.sqrt(abs(self.s)) if self.s != 0 else 1.0
        return np.array([r, r, 1.0])

    def to_under(self, xi):
        return np.asarray(xi, float) * self._scale

    def from_under(self, xi):
        return np.asarray(xi, float) / self._scale

    def algebra(self):
        return lie.douady(self.s)

    def identity(self, shape=()):
        return self.under.identity(shape)

    def mul(self, a, b):
        return self.under.mul(a, b)

    def inv(self, a):
        return self.under.inv(a)

    def exp(self, xi):
        return self.under.exp(self.to_under(_check_finite(xi)))

    def log(self, g):
        return self.from_under(self.under.log(g))

    def adjoint(self, g, xi):
        return self.from_under(self.under.adjoint(g, self.to_under(xi)))

    def dist(self, g):
        return self.under.dist(g)

    def period(self, xi):
        return self.under.period(self.to_under(_check_finite(xi)))

    def central_index(self, g, tol=1e-8):
        return self.under.central_index(g, tol)

    def central_from_index(self, k):
        return self.under.central_from_index(k)

    def center_coordinate(self, g):
        return self.under.center_coordinate(g)


def backend_from_name(spec) -> Backend:
    """Parse ``"SU2"``, ``"SL2Cover"``, ``"EuclideanCover"``, ``"Abelian(n)"``/``"abelian:n"``, ``"DouadyFiber(s)"``/``"douady:s"``."""
    if isinstance(spec, Backend):
        return spec
    text = str(spec).strip()
    low = text.lower().replace(" ", "")
    if low in ("su2",):
        return SU2()
    if low in ("sl2cover", "sl2"):
        return SL2Cover()
    if low in ("euclideancover", "euclid"):
        return EuclideanCover()
    for prefix, cls, conv in (("abelian", Abelian, int), ("douadyfiber", DouadyFiber, float), ("douady", DouadyFiber, float)):
        if low.startswith(prefix):
            arg = low[len(prefix):].strip("():")
            try:
                return cls(conv(arg)) if arg else cls()
            except ValueError as exc:
                raise BackendError(f"bad backend {text!r}") from exc
    raise BackendError(f"unknown backend {text!r}")


def default_backend(alg: lie.LieAlgebra) -> Backend | None:
    """The simply connected backend for a preset algebra, or ``None`` if there is none."""
    label = alg.label
    head, _, arg = label.partition(":")
    try:
        if head == "abelian" and arg.isdigit():
            cand = Abelian(int(arg))
        elif label == "su2":
            cand = SU2()
        elif label == "sl2":
            cand = SL2Cover()
        elif head == "douady" and arg:
            cand = DouadyFiber(float(arg))
        else:
            return None
    except ValueError:
        return None
    ref = cand.algebra()
    if ref.dim != alg.dim or np.max(np.abs(ref.c - alg.c)) > 1e-12:
        return None
    return cand


# -- single elements -------------------------------------------------------


@dataclass(frozen=True)
class GroupElement:
    backend: Backend
    coords: tuple

    @classmethod
    def of(cls, backend: Backend, coords) -> "GroupElement":
        arr = np.asarray(coords, float)
        if arr.shape != (backend.ncoords,):
            raise BackendError(f"{backend.name} needs {backend.ncoords} coordinates, got shape {arr.shape}")
        return cls(backend, tuple(float(x) for x in arr))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return group_mul(self, other)

    def inverse(self) -> "GroupElement":
        return group_inv(self)

    def __repr__(self):
        body = ", ".join(f"{x:.6g}" for x in self.coords)
        return f"{self.backend.name}[{body}]"


def identity(backend: Backend) -> GroupElement:
    return GroupElement.of(backend, backend.identity())


def _same(g: GroupElement, h: GroupElement):
    if g.backend != h.backend:
        raise BackendError(f"backend mismatch: {g.backend.name} vs {h.backend.name}")


def group_mul(g: GroupElement, h: GroupElement) -> GroupElement:
    _same(g, h)
    return GroupElement.of(g.backend, g.backend.mul(g.array, h.array))


def group_inv(g: GroupElement) -> GroupElement:
    return GroupElement.of(g.backend, g.backend.inv(g.array))


def group_exp(backend: Backend, xi) -> GroupElement:
    xi = np.asarray(xi, float)
    if xi.shape != (backend.dim,):
        raise BackendError(f"{backend.name} algebra has dim {backend.dim}, got shape {xi.shape}")
    return GroupElement.of(backend, backend.exp(xi))


def one_param_period(backend: Backend, xi) -> float | None:
    return backend.period(np.asarray(xi, float))


def adjoint(g: GroupElement, xi) -> np.ndarray:
    return g.backend.adjoint(g.array, np.asarray(xi, float))


def dist_to_identity(g: GroupElement) -> float:
    return float(g.backend.dist(g.array))


def distance(g: GroupElement, h: GroupElement) -> float:
    return dist_to_identity(group_mul(group_inv(g), h))


def is_central(g: GroupElement, tol: float = 1e-8) -> bool:
    eye = np.eye(g.backend.dim)
    ad = g.backend.adjoint(np.broadcast_to(g.array, (g.backend.dim, g.backend.ncoords)), eye)
    return bool(np.max(np.abs(ad - eye)) <= tol)
