"""Finite-dimensional Lie algebras given by structure constants."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg


class LieAlgebraError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Lie algebra with ``[e_i, e_j] = sum_k c[k, i, j] e_k``."""

    c: np.ndarray
    label: str = ""
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise LieAlgebraError(f"structure constants must have shape (n, n, n), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise LieAlgebraError("structure constants must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if self.check:
            if np.max(np.abs(c + c.transpose(0, 2, 1)), initial=0.0) > 1e-12:
                raise LieAlgebraError("structure constants are not antisymmetric")
            if jacobi_defect(self) > 1e-12:
                raise LieAlgebraError(f"Jacobi identity fails for {self.label or 'algebra'}")

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def ad(self, x) -> np.ndarray:
        """Matrix of ``y -> [x, y]``; batched over leading axes of ``x``."""
        return np.einsum("kij,...i->...kj", self.c, np.asarray(x, dtype=float))

    def bracket(self, x, y) -> np.ndarray:
        return bracket(self, x, y)

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim}, label={self.label!r})"


def bracket(alg: LieAlgebra, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != alg.dim or y.shape[-1] != alg.dim:
        raise LieAlgebraError(
            f"dimension mismatch: algebra has dim {alg.dim}, got {x.shape[-1]} and {y.shape[-1]}"
        )
    return np.einsum("kij,...i,...j->...k", alg.c, x, y)


def jacobi_defect(alg: LieAlgebra) -> float:
    c = alg.c
    # J[l, i, j, k] = [[e_i, e_j], e_k]_l
    jij_k = np.einsum("mij,lmk->lijk", c, c)
    total = jij_k + jij_k.transpose(0, 2, 3, 1) + jij_k.transpose(0, 3, 1, 2)
    return float(np.max(np.linalg.norm(total, axis=0), initial=0.0))


def center_basis(alg: LieAlgebra, tol: float = 1e-10) -> list[np.ndarray]:
    # x is central iff c[k, i, j] x_i = 0 for all k, j
    stacked = alg.c.transpose(0, 2, 1).reshape(-1, alg.dim)
    null = scipy.linalg.null_space(stacked, rcond=tol)
    return [null[:, i] for i in range(null.shape[1])]


def expm_batch(a, order=18) -> np.ndarray:
    """Matrix exponential over leading batch axes (Taylor series with scaling and squaring).

    ``scipy.linalg.expm`` handles one matrix per Python-level iteration, which
    dominates when a field needs an exponential at every sample point.
    """
    a = np.asarray(a, dtype=float)
    norm = float(np.max(np.sum(np.abs(a), axis=-2), initial=0.0))
    k = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    x = a / 2.0**k
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    term, out = eye, eye.copy()
    for j in range(1, order + 1):
        term = term @ x / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def adjoint_exp(alg: LieAlgebra, x) -> np.ndarray:
    """``exp(ad_x)``, the inner automorphism induced by ``exp(x)``."""
    return scipy.linalg.expm(alg.ad(x))


def dexp_right(alg: LieAlgebra, x, dx) -> np.ndarray:
    """Right-trivialized derivative: ``d(exp x) exp(-x) = ((e^{ad x} - 1)/ad x) dx``."""
    a = alg.ad(x)
    n = alg.dim
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = a
    block[:n, n:] = np.eye(n)
    phi = scipy.linalg.expm(block)[:n, n:]
    return phi @ np.asarray(dx, dtype=float)


def is_automorphism(alg: LieAlgebra, psi, tol: float = 1e-9) -> bool:
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (alg.dim, alg.dim) or abs(np.linalg.det(psi)) < 1e-12:
        return False
    eye = np.eye(alg.dim)
    lhs = np.einsum("ak,kij->aij", psi, alg.c)
    rhs = np.einsum("kab,ai,bj->kij", alg.c, psi @ eye, psi @ eye)
    return float(np.max(np.abs(lhs - rhs))) <= tol


# -- presets ---------------------------------------------------------------


def abelian(n: int) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)), label=f"abelian:{n}")


def _from_brackets(n: int, rules: dict[tuple[int, int], dict[int, float]], label: str) -> LieAlgebra:
    c = np.zeros((n, n, n))
    for (i, j), out in rules.items():
        for k, v in out.items():
            c[k, i, j] += v
            c[k, j, i] -= v
    return LieAlgebra(c, label=label)


def su2() -> LieAlgebra:
    """Basis with ``[e1, e2] = e3`` cyclically (``e_a`` = quaternion unit / 2)."""
    return _from_brackets(3, {(0, 1): {2: 1.0}, (1, 2): {0: 1.0}, (2, 0): {1: 1.0}}, "su2")


def douady(s: float) -> LieAlgebra:
    """Basis (x, y, z) with ``[x,y] = s z``, ``[z,x] = y``, ``[z,y] = -x``."""
    s = float(s)
    return _from_brackets(3, {(0, 1): {2: s}, (2, 0): {1: 1.0}, (2, 1): {0: -1.0}}, f"douady:{s:g}")


def direct_sum(a: LieAlgebra, b: LieAlgebra) -> LieAlgebra:
    n, m = a.dim, b.dim
    c = np.zeros((n + m,) * 3)
    c[:n, :n, :n] = a.c
    c[n:, n:, n:] = b.c
    return LieAlgebra(c, label=f"{a.label}+{b.label}")


def preset(name: str) -> LieAlgebra:
    name = name.strip()
    if name == "su2":
        return su2()
    head, _, arg = name.partition(":")
    if head == "abelian":
        n = int(arg) if arg else 1
        if n < 1:
            raise LieAlgebraError("abelian dimension must be positive")
        return abelian(n)
    if head == "douady":
        s = float(arg)
        if not math.isfinite(s):
            raise LieAlgebraError("douady parameter must be finite")
        return douady(s)
    raise LieAlgebraError(f"unknown algebra preset {name!r}")


def load_algebra(spec) -> LieAlgebra:
    """Build an algebra from ``{"preset": ...}``, ``{"dim", "c", "label"}``, a preset string or a JSON path."""
    if isinstance(spec, LieAlgebra):
        return spec
    if isinstance(spec, (str, Path)):
        p = Path(spec)
        if str(spec).endswith(".json") and p.exists():
            return load_algebra(json.loads(p.read_text()))
        return preset(str(spec))
    if not isinstance(spec, dict):
        raise LieAlgebraError(f"cannot build a Lie algebra from {type(spec).__name__}")
    if "preset" in spec:
        extra = set(spec) - {"preset"}
        if extra:
            raise LieAlgebraError(f"unknown keys {sorted(extra)}")
        return preset(spec["preset"])
    extra = set(spec) - {"dim", "c", "label"}
    if extra:
        raise LieAlgebraError(f"unknown keys {sorted(extra)}")
    try:
        dim = int(spec["dim"])
        c = np.asarray(spec["c"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise LieAlgebraError(f"malformed algebra: {exc}") from exc
    if c.shape != (dim, dim, dim):
        raise LieAlgebraError(f"c must have shape ({dim}, {dim}, {dim}), got {c.shape}")
    return LieAlgebra(c, label=str(spec.get("label", "")))


def algebra_to_json(alg: LieAlgebra) -> dict:
    return {"dim": alg.dim, "c": alg.c.tolist(), "label": alg.label}
