"""Framed transitive Lie algebroids over the square, stored as connection forms.

A presentation is a k-valued 1-form ``theta = theta_s ds + theta_t dt`` on the
unit square, written in a trivialization that agrees with the framing near the
left, bottom (t = 1) and right sides.  It must therefore vanish on a margin
around those three sides; the top side ``t = 0`` carries the clutching data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import field as fdsl
from .groups import Backend, GroupElement, backend_from_name, default_backend, identity, is_central
from .lie import LieAlgebra, expm_batch, is_automorphism, load_algebra

DEFAULT_MARGIN = 0.1
DEFAULT_GRID = 101


class PresentationError(ValueError):
    pass


class GaugeError(ValueError):
    pass


# -- connection-form providers ----------------------------------------------


class ConnectionField:
    """Vectorized ``(s, t) -> (theta_s, theta_t)``, each of shape ``s.shape + (dim,)``."""

    dim: int

    def __call__(self, s, t):
        raise NotImplementedError

    def to_json(self):
        return None


@dataclass(frozen=True)
class ZeroField(ConnectionField):
    dim: int

    def __call__(self, s, t):
        shape = np.broadcast_shapes(np.shape(s), np.shape(t)) + (self.dim,)
        return np.zeros(shape), np.zeros(shape)

    def to_json(self):
        return {"theta_s": ["0"] * self.dim, "theta_t": ["0"] * self.dim}


@dataclass(frozen=True)
class ExprField(ConnectionField):
    theta_s: tuple
    theta_t: tuple
    lam: float = 0.0

    @property
    def dim(self):
        return len(self.theta_s)

    def __call__(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        shape = np.broadcast_shapes(s.shape, t.shape)

        def stack(exprs):
            cols = [np.zeros(shape) if e.is_zero() else np.broadcast_to(fdsl.evaluate(e, s, t, self.lam), shape) for e in exprs]
            return np.stack(cols, -1)

        return stack(self.theta_s), stack(self.theta_t)

    def to_json(self):
        return {"theta_s": [e.source or str(e) for e in self.theta_s], "theta_t": [e.source or str(e) for e in self.theta_t]}


@dataclass(frozen=True)
class CallableField(ConnectionField):
    dim: int
    fn: Callable = field(repr=False)

    def __call__(self, s, t):
        return self.fn(np.asarray(s, float), np.asarray(t, float))


@dataclass(frozen=True)
class GaugedField(ConnectionField):
    """``theta -> Ad_f(Psi theta) - f^* theta^R`` with ``f = exp(mu)``."""

    base: ConnectionField
    gauge: "GaugeTransformation"

    @property
    def dim(self):
        return self.base.dim

    def __call__(self, s, t):
        g = self.gauge
        ths, tht = self.base(s, t)
        mu, dmu_s, dmu_t = g.mu_and_derivatives(s, t)
        ad_f, dexp = g.exp_blocks(mu)
        new_s = np.einsum("...ij,jk,...k->...i", ad_f, g.psi, ths) - np.einsum("...ij,...j->...i", dexp, dmu_s)
        new_t = np.einsum("...ij,jk,...k->...i", ad_f, g.psi, tht) - np.einsum("...ij,...j->...i", dexp, dmu_t)
        return new_s, new_t


@dataclass(frozen=True)
class ConnectSumField(ConnectionField):
    """``left`` squeezed into s in [0, 1/2], ``right`` into [1/2, 1]."""

    left: ConnectionField
    right: ConnectionField

    @property
    def dim(self):
        return self.left.dim

    def __call__(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        s, t = np.broadcast_arrays(s, t)
        ls, lt = self.left(np.clip(2 * s, 0.0, 1.0), t)
        rs, rt = self.right(np.clip(2 * s - 1, 0.0, 1.0), t)
        use_left = (s < 0.5)[..., None]
        return np.where(use_left, 2 * ls, 2 * rs), np.where(use_left, lt, rt)


@dataclass(frozen=True)
class ClutchField(ConnectionField):
    """``theta = chi(t) omega(s) ds`` with ``omega = k^{-1} dk`` the left velocity of the clutching path."""

    dim: int
    omega: Callable = field(repr=False)
    margin: float = DEFAULT_MARGIN

    def chi(self, t):
        d = self.margin
        return 1.0 - fdsl.ramp((np.asarray(t, float) - d) / (1.0 - 2.0 * d))

    def __call__(self, s, t):
        s = np.asarray(s, float)
        t = np.asarray(t, float)
        s, t = np.broadcast_arrays(s, t)
        om = np.asarray(self.omega(s.ravel()), float).reshape(s.shape + (self.dim,))
        ths = self.chi(t)[..., None] * om
        return ths, np.zeros_like(ths)


# -- presentations ------------------------------------------------------------


def _margin_points(delta: float, grid: int):
    u = np.linspace(0.0, 1.0, grid)
    s, t = np.meshgrid(u, u, indexing="ij")
    eps = 1e-12
    mask = (s <= delta + eps) | (s >= 1 - delta - eps) | (t >= 1 - delta - eps)
    return s[mask], t[mask]


@dataclass(frozen=True, eq=False)
class SquarePresentation:
    algebra: LieAlgebra
    backend: Backend | None
    field: ConnectionField
    lam: float = 0.0
    flat_margin: float = DEFAULT_MARGIN
    grid: int = DEFAULT_GRID
    vanish_tol: float = 1e-9
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.flat_margin < 0.25):
            raise PresentationError(f"flat_margin must lie in (0, 0.25), got {self.flat_margin}")
        if self.field.dim != self.algebra.dim:
            raise PresentationError(f"field has dim {self.field.dim}, algebra has dim {self.algebra.dim}")
        if self.backend is not None and self.backend.dim != self.algebra.dim:
            raise PresentationError(f"backend {self.backend.name} does not match algebra dim {self.algebra.dim}")
        validate_presentation(self)

    def theta(self, s, t):
        return self.field(s, t)

    def with_field(self, new_field: ConnectionField, **kw) -> "SquarePresentation":
        args = dict(
            algebra=self.algebra,
            backend=self.backend,
            field=new_field,
            lam=self.lam,
            flat_margin=self.flat_margin,
            grid=self.grid,
            vanish_tol=self.vanish_tol,
            label=self.label,
        )
        args.update(kw)
        return SquarePresentation(**args)

    def identity(self) -> GroupElement:
        return identity(self.require_backend())

    def require_backend(self) -> Backend:
        if self.backend is None:
            raise PresentationError("this operation needs a group backend")
        return self.backend

    def to_json(self) -> dict:
        body = self.field.to_json()
        if body is None:
            raise PresentationError("only expression-based presentations are serializable")
        from .lie import algebra_to_json

        out = {"algebra": algebra_to_json(self.algebra)}
        if self.backend is not None:
            out["backend"] = self.backend.name
        out.update(body)
        out["lam"] = self.lam
        out["flat_margin"] = self.flat_margin
        return out


def validate_presentation(p: SquarePresentation) -> None:
    u = np.linspace(0.0, 1.0, p.grid)
    s, t = np.meshgrid(u, u, indexing="ij")
    try:
        ths, tht = p.field(s, t)
    except fdsl.EvalError as exc:
        raise PresentationError(f"coefficients fail to evaluate: {exc}") from exc
    if not (np.all(np.isfinite(ths)) and np.all(np.isfinite(tht))):
        raise PresentationError("coefficients are not finite on the sample grid")
    ms, mt = _margin_points(p.flat_margin, p.grid)
    a, b = p.field(ms, mt)
    worst = float(np.max(np.hypot(np.linalg.norm(a, axis=-1), np.linalg.norm(b, axis=-1)), initial=0.0))
    if worst > p.vanish_tol:
        raise PresentationError(
            f"theta does not vanish near the left, bottom and right sides (max norm {worst:.3g} within margin {p.flat_margin})"
        )


def presentation_from_exprs(
    algebra,
    theta_s: Sequence[str],
    theta_t: Sequence[str],
    lam: float = 0.0,
    backend=None,
    flat_margin: float = DEFAULT_MARGIN,
    **kw,
) -> SquarePresentation:
    alg = load_algebra(algebra)
    if len(theta_s) != alg.dim or len(theta_t) != alg.dim:
        raise PresentationError(f"need {alg.dim} coefficients for theta_s and theta_t")
    fld = ExprField(tuple(fdsl.parse(e) for e in theta_s), tuple(fdsl.parse(e) for e in theta_t), float(lam))
    be = backend_from_name(backend) if backend is not None else default_backend(alg)
    return SquarePresentation(alg, be, fld, float(lam), float(flat_margin), **kw)


# -- standard presets ---------------------------------------------------------


def _profiles(margin):
    w = 1.0 - 2.0 * margin
    b = lambda v: f"bump(({v}-{margin!r})/{w!r})/{w!r}"
    chi = f"(1-ramp((t-{margin!r})/{w!r}))"
    return b, chi


def trivial(algebra="abelian:1", backend=None, flat_margin=DEFAULT_MARGIN) -> SquarePresentation:
    alg = load_algebra(algebra)
    be = backend_from_name(backend) if backend is not None else default_backend(alg)
    return SquarePresentation(alg, be, ZeroField(alg.dim), 0.0, flat_margin, label="trivial")


def abelian_bump(lam: float, flat_margin: float = DEFAULT_MARGIN, **kw) -> SquarePresentation:
    """The line-bundle model with total curvature ``lam``: ``F = lam b(s) b(t) ds^dt``, ``b`` of unit mass."""
    b, chi = _profiles(flat_margin)
    p = presentation_from_exprs("abelian:1", [f"lam*{b('s')}*{chi}"], ["0"], lam, flat_margin=flat_margin, **kw)
    return p.with_field(p.field, label=f"abelian-bump({lam:g})")


def su2_clutch(flat_margin: float = DEFAULT_MARGIN, **kw) -> SquarePresentation:
    """Clutching path ``k(tau) = exp(2 pi ramp(tau) e3)`` from e to -1, realized on the square."""
    b, chi = _profiles(flat_margin)
    p = presentation_from_exprs("su2", ["0", "0", f"2*pi*{b('s')}*{chi}"], ["0", "0", "0"], flat_margin=flat_margin, **kw)
    return p.with_field(p.field, label="su2-clutch")


def sl2_clutch(flat_margin: float = DEFAULT_MARGIN, **kw) -> SquarePresentation:
    """``k(tau) = exp(2 pi ramp(tau) e3)`` in the universal cover of SL(2, R); ends at the generator of the center."""
    b, chi = _profiles(flat_margin)
    p = presentation_from_exprs(
        {"dim": 3, "c": _sl2_constants(), "label": "sl2"},
        ["0", "0", f"2*pi*{b('s')}*{chi}"],
        ["0", "0", "0"],
        backend="SL2Cover",
        flat_margin=flat_margin,
        **kw,
    )
    return p.with_field(p.field, label="sl2-clutch")


def _sl2_constants():
    from .groups import sl2_algebra

    return sl2_algebra().c.tolist()


PRESETS = {
    "trivial": lambda lam=0.0, **kw: trivial(**kw),
    "abelian-bump": lambda lam=1.0, **kw: abelian_bump(lam, **kw),
    "su2-clutch": lambda lam=0.0, **kw: su2_clutch(**kw),
    "sl2-clutch": lambda lam=0.0, **kw: sl2_clutch(**kw),
}


def load_presentation(spec) -> SquarePresentation:
    """Build a presentation from a JSON-like dict, a preset string like ``"abelian-bump(2.7)"``, or a path."""
    if isinstance(spec, SquarePresentation):
        return spec
    if isinstance(spec, (str, Path)):
        text = str(spec)
        if text.endswith(".json") and Path(text).exists():
            return load_presentation(json.loads(Path(text).read_text()))
        name, _, arg = text.partition("(")
        name = name.strip()
        if name not in PRESETS:
            raise PresentationError(f"unknown preset {name!r}")
        arg = arg.rstrip(")").strip()
        return PRESETS[name](float(arg)) if arg else PRESETS[name]()
    if not isinstance(spec, dict):
        raise PresentationError(f"cannot build a presentation from {type(spec).__name__}")
    spec = dict(spec)
    if "preset" in spec:
        name = spec.pop("preset")
        allowed = {"lam", "flat_margin"} | ({"algebra", "backend"} if name == "trivial" else set())
        extra = set(spec) - allowed
        if extra:
            raise PresentationError(f"unknown keys {sorted(extra)} for preset {name!r}")
        if name not in PRESETS:
            raise PresentationError(f"unknown preset {name!r}")
        lam = spec.pop("lam", None)
        return PRESETS[name](**({"lam": float(lam)} if lam is not None else {}), **spec)
    if "clutch" in spec:
        extra = set(spec) - {"clutch", "flat_margin"}
        if extra:
            raise PresentationError(f"unknown keys {sorted(extra)}")
        return clutch_to_square(load_clutching(spec["clutch"], spec.get("flat_margin", DEFAULT_MARGIN)))
    allowed = {"algebra", "backend", "theta_s", "theta_t", "lam", "flat_margin"}
    extra = set(spec) - allowed
    if extra:
        raise PresentationError(f"unknown keys {sorted(extra)}")
    missing = {"algebra", "theta_s", "theta_t"} - set(spec)
    if missing:
        raise PresentationError(f"missing keys {sorted(missing)}")
    return presentation_from_exprs(
        spec["algebra"],
        spec["theta_s"],
        spec["theta_t"],
        float(spec.get("lam", 0.0)),
        backend=spec.get("backend"),
        flat_margin=float(spec.get("flat_margin", DEFAULT_MARGIN)),
    )


# -- curvature -----------------------------------------------------------------


def _partials(fld: ConnectionField, s, t, h=1e-5):
    ds_t = fdsl.central_difference(lambda x: fld(x, t)[1], s, h)
    dt_s = fdsl.central_difference(lambda x: fld(s, x)[0], t, h)
    return ds_t, dt_s


def curvature_of_field(alg: LieAlgebra, fld: ConnectionField, s, t, h=1e-5):
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    s, t = np.broadcast_arrays(s, t)
    ds_t, dt_s = _partials(fld, s, t, h)
    ths, tht = fld(s, t)
    return ds_t - dt_s + alg.bracket(ths, tht)


def curvature(p: SquarePresentation, s, t, h=1e-5):
    """Coefficient of ``ds^dt`` in ``d theta + [theta, theta]/2``."""
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    if np.any((s < 0) | (s > 1) | (t < 0) | (t > 1)):
        raise PresentationError("curvature is only evaluated on the closed unit square")
    return curvature_of_field(p.algebra, p.field, s, t, h)


# -- gauge transformations ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeTransformation:
    """The pair ``(f = exp(mu), Psi)`` acting by ``theta -> Ad_f(Psi theta) - f^* theta^R``."""

    algebra: LieAlgebra
    psi: np.ndarray
    mu: tuple
    lam: float = 0.0
    support_margin: float = 0.0
    h: float = 1e-5

    def __post_init__(self):
        psi = np.asarray(self.psi, float)
        object.__setattr__(self, "psi", psi)
        if not is_automorphism(self.algebra, psi):
            raise GaugeError("psi is not a Lie algebra automorphism")
        mu = tuple(m if isinstance(m, fdsl.FieldExpr) else fdsl.parse(str(m)) for m in self.mu)
        if len(mu) != self.algebra.dim:
            raise GaugeError(f"mu needs {self.algebra.dim} components")
        object.__setattr__(self, "mu", mu)
        if self.support_margin > 0:
            ms, mt = _all_side_points(self.support_margin)
            if np.max(np.abs(self.mu_values(ms, mt)), initial=0.0) > 1e-12:
                raise GaugeError(f"f is not the identity within {self.support_margin} of the boundary")

    @classmethod
    def identity(cls, algebra):
        return cls(algebra, np.eye(algebra.dim), ("0",) * algebra.dim)

    @classmethod
    def constant(cls, algebra, mu0, psi=None):
        psi = np.eye(algebra.dim) if psi is None else psi
        return cls(algebra, psi, tuple(repr(float(x)) for x in mu0))

    def mu_values(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        return np.stack([np.broadcast_to(fdsl.evaluate(m, s, t, self.lam), s.shape) for m in self.mu], -1)

    def mu_and_derivatives(self, s, t):
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        mu = self.mu_values(s, t)
        d_s = fdsl.central_difference(lambda x: self.mu_values(x, t), s, self.h)
        d_t = fdsl.central_difference(lambda x: self.mu_values(s, x), t, self.h)
        return mu, d_s, d_t

    def exp_blocks(self, mu):
        """``(Ad_f, dexp_mu)`` from one exponential of ``[[ad mu, 1], [0, 0]]``."""
        return _exp_blocks(self.algebra, mu)

    def ad_f(self, mu):
        return _exp_blocks(self.algebra, mu)[0]

    def right_mc(self, mu, dmu):
        """``df f^{-1}`` along one coordinate direction."""
        return np.einsum("...ij,...j->...i", _exp_blocks(self.algebra, mu)[1], dmu)

    def group_value(self, backend: Backend, s, t):
        return backend.exp(self.mu_values(s, t))


def _exp_blocks(alg: LieAlgebra, mu):
    a = alg.ad(mu)
    n = alg.dim
    block = np.zeros(a.shape[:-2] + (2 * n, 2 * n))
    block[..., :n, :n] = a
    block[..., :n, n:] = np.eye(n)
    e = expm_batch(block)
    return e[..., :n, :n], e[..., :n, n:]


def _all_side_points(delta, grid=DEFAULT_GRID):
    u = np.linspace(0.0, 1.0, grid)
    s, t = np.meshgrid(u, u, indexing="ij")
    eps = 1e-12
    mask = (s <= delta + eps) | (s >= 1 - delta - eps) | (t <= delta + eps) | (t >= 1 - delta - eps)
    return s[mask], t[mask]


def apply_gauge(p: SquarePresentation, g: GaugeTransformation) -> SquarePresentation:
    if g.algebra.dim != p.algebra.dim or np.max(np.abs(g.algebra.c - p.algebra.c)) > 0:
        raise GaugeError("gauge transformation is for a different algebra")
    try:
        return p.with_field(GaugedField(p.field, g))
    except PresentationError as exc:
        raise GaugeError(f"support violation: {exc}") from exc


# -- connected sums and clutching ---------------------------------------------


def connect_sum(p1: SquarePresentation, p2: SquarePresentation) -> SquarePresentation:
    """``p1 # p2``: ``p2`` on the left half, ``p1`` on the right; classes multiply as ``c(p1) c(p2)``."""
    if p1.algebra.dim != p2.algebra.dim or np.max(np.abs(p1.algebra.c - p2.algebra.c)) > 0:
        raise PresentationError("connected sum needs the same structure algebra")
    if p1.backend != p2.backend:
        raise PresentationError("connected sum needs the same backend")
    margin = min(p1.flat_margin, p2.flat_margin) / 2
    if margin < 1.0 / (max(p1.grid, p2.grid) - 1):
        raise PresentationError("flat margins too small to glue")
    fld = ConnectSumField(p2.field, p1.field)
    # the seam is flat because each half vanishes near its own vertical sides
    seam_t = np.linspace(0.0, 1.0, p1.grid)
    seam_s = 0.5 + np.linspace(-margin, margin, 9)
    ss, tt = np.meshgrid(seam_s, seam_t, indexing="ij")
    a, b = fld(ss, tt)
    if max(np.max(np.abs(a)), np.max(np.abs(b))) > max(p1.vanish_tol, p2.vanish_tol):
        raise PresentationError("seam not flat")
    lbl = f"({p1.label or '?'})#({p2.label or '?'})"
    return p1.with_field(fld, flat_margin=margin, lam=0.0, label=lbl)


@dataclass(frozen=True, eq=False)
class ClutchingPresentation:
    """A sitting path ``k: [0,1] -> K~`` from ``e``, given by its left velocity ``k^{-1} dk``."""

    algebra: LieAlgebra
    backend: Backend
    omega: Callable = field(repr=False)
    margin: float = DEFAULT_MARGIN
    samples: int = 2001
    label: str = ""

    def __post_init__(self):
        tau = np.linspace(0.0, 1.0, self.samples)
        om = np.asarray(self.omega(tau), float)
        if om.shape != (self.samples, self.algebra.dim):
            raise PresentationError("omega must map an array of taus to shape (n, dim)")
        ends = (tau <= self.margin + 1e-12) | (tau >= 1 - self.margin - 1e-12)
        if np.max(np.abs(om[ends]), initial=0.0) > 1e-9:
            raise PresentationError("k not sitting at the ends")

    def path(self, taus=None):
        """Group values ``k(tau)`` on a grid, integrated with the exponential midpoint rule."""
        b = self.backend
        taus = np.linspace(0.0, 1.0, self.samples) if taus is None else np.asarray(taus, float)
        mids = 0.5 * (taus[1:] + taus[:-1])
        steps = b.exp(np.asarray(self.omega(mids)) * np.diff(taus)[:, None])
        out = [b.identity()]
        for st in steps:
            out.append(b.mul(out[-1], st))
        return np.array(out)

    def endpoint(self) -> GroupElement:
        return GroupElement.of(self.backend, self.path()[-1])


def clutching_from_samples(backend: Backend, ks, margin=DEFAULT_MARGIN, algebra=None) -> ClutchingPresentation:
    """Clutching data from group samples on a uniform grid (piecewise one-parameter interpolation)."""
    ks = np.asarray(ks, float)
    n = len(ks) - 1
    if n < 2:
        raise PresentationError("need at least three samples")
    if backend.dist(ks[0]) > 1e-9:
        raise PresentationError("k(0) must be the identity")
    vel = np.array([backend.log(backend.mul(backend.inv(ks[i]), ks[i + 1])) * n for i in range(n)])

    def omega(tau):
        tau = np.asarray(tau, float)
        idx = np.clip(np.floor(tau * n).astype(int), 0, n - 1)
        return vel[idx]

    return ClutchingPresentation(algebra or backend.algebra(), backend, omega, margin, samples=n + 1, label="samples")


def load_clutching(spec, margin=DEFAULT_MARGIN) -> ClutchingPresentation:
    if isinstance(spec, ClutchingPresentation):
        return spec
    if not isinstance(spec, dict) or "k" not in spec:
        raise PresentationError('clutch spec must look like {"k": preset-or-samples}')
    extra = set(spec) - {"k", "backend"}
    if extra:
        raise PresentationError(f"unknown keys {sorted(extra)}")
    k = spec["k"]
    if isinstance(k, str):
        name, _, arg = k.partition(":")
        w = 1.0 - 2.0 * margin
        prof = lambda tau: fdsl.bump((np.asarray(tau) - margin) / w) / w
        if name == "su2":
            from .groups import SU2

            return ClutchingPresentation(SU2().algebra(), SU2(), lambda tau: np.outer(2 * np.pi * prof(tau), [0, 0, 1.0]), margin, label="su2")
        if name == "sl2":
            from .groups import SL2Cover

            return ClutchingPresentation(SL2Cover().algebra(), SL2Cover(), lambda tau: np.outer(2 * np.pi * prof(tau), [0, 0, 1.0]), margin, label="sl2")
        if name == "abelian":
            from .groups import Abelian

            lam = float(arg) if arg else 1.0
            return ClutchingPresentation(Abelian(1).algebra(), Abelian(1), lambda tau: (lam * prof(tau))[:, None], margin, label=f"abelian:{lam:g}")
        raise PresentationError(f"unknown clutching preset {k!r}")
    if "backend" not in spec:
        raise PresentationError("sampled clutching data needs a backend")
    return clutching_from_samples(backend_from_name(spec["backend"]), k, margin)


def clutch_to_square(c: ClutchingPresentation) -> SquarePresentation:
    fld = ClutchField(c.algebra.dim, c.omega, c.margin)
    return SquarePresentation(c.algebra, c.backend, fld, 0.0, c.margin, label=f"clutch[{c.label}]")


# -- the induced connection on the isotropy bundle -------------------------------


@dataclass(frozen=True, eq=False)
class CouplingData:
    """``nabla = d + ad(theta)`` on the isotropy bundle and the curvature form ``F``."""

    algebra: LieAlgebra
    field: ConnectionField

    def nabla(self, s, t):
        ths, tht = self.field(s, t)
        return self.algebra.ad(ths), self.algebra.ad(tht)

    def R_form(self, s, t):
        return curvature_of_field(self.algebra, self.field, s, t)

    def connection_curvature(self, s, t, h=1e-5):
        """``R^nabla`` as an endomorphism field, by finite differences of the coefficients."""
        s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
        ds_gt = fdsl.central_difference(lambda x: self.nabla(x, t)[1], s, h)
        dt_gs = fdsl.central_difference(lambda x: self.nabla(s, x)[0], t, h)
        gs, gt = self.nabla(s, t)
        return ds_gt - dt_gs + gs @ gt - gt @ gs


def induced_connection(p: SquarePresentation) -> CouplingData:
    return CouplingData(p.algebra, p.field)


def interior_grid(grid=DEFAULT_GRID):
    u = np.linspace(0.0, 1.0, grid)[1:-1]
    return np.meshgrid(u, u, indexing="ij")


def center_flatness_defect(d: CouplingData, section, grid=DEFAULT_GRID) -> float:
    """Max of ``|R^nabla sigma|`` over the interior grid for a constant section."""
    s, t = interior_grid(grid)
    r = d.connection_curvature(s, t)
    return float(np.max(np.linalg.norm(r @ np.asarray(section, float), axis=-1)))


def bracket_curvature_defect(d: CouplingData, section, grid=DEFAULT_GRID) -> float:
    """Max of ``|R^nabla sigma - [F, sigma]|`` over the interior grid."""
    s, t = interior_grid(grid)
    sigma = np.asarray(section, float)
    r = d.connection_curvature(s, t) @ sigma
    f = d.R_form(s, t)
    return float(np.max(np.linalg.norm(r - d.algebra.bracket(f, sigma), axis=-1)))


def random_polynomial_presentation(algebra, rng, degree=2, scale=3.0, backend=None, flat_margin=DEFAULT_MARGIN) -> SquarePresentation:
    """Random polynomial coefficients times a bump envelope supported in the open square.

    The envelope vanishes near the whole boundary, so the class is trivial and
    only the interior geometry (curvature, holonomy) is exercised.
    """
    alg = load_algebra(algebra)
    w = 1.0 - 2.0 * flat_margin
    env = f"bump((s-{flat_margin!r})/{w!r})*bump((t-{flat_margin!r})/{w!r})*{scale / float(fdsl.bump(0.5)) ** 2!r}"

    def poly():
        terms = []
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                terms.append(f"{rng.normal():.6f}*s^{i}*t^{j}")
        return f"{env}*({'+'.join(terms)})"

    return presentation_from_exprs(
        alg,
        [poly() for _ in range(alg.dim)],
        [poly() for _ in range(alg.dim)],
        backend=backend,
        flat_margin=flat_margin,
    )
