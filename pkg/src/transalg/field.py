"""A small expression language for scalar fields on the unit square.

Grammar (precedence high to low; ``^`` is right associative, the rest left)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names: ``s``, ``t``, ``lam``, ``pi``.  Functions: ``sin``, ``cos``, ``exp``,
``sqrt``, ``bump``, ``ramp``.  ``bump`` is the normalized smooth bump on
(0, 1) and ``ramp(u)`` its integral from 0 to u, a smooth step from 0 to 1.
Evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.integrate
from scipy.interpolate import CubicHermiteSpline

VARIABLES = ("s", "t", "lam")
CONSTANTS = {"pi": math.pi}


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, expected=()):
        self.pos = pos
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {pos}{detail}")


class UnknownIdentifier(ParseError):
    pass


class EvalError(ArithmeticError):
    pass


# -- the bump and its integral ---------------------------------------------


def _raw_bump(u):
    u = np.asarray(u, float)
    inside = (u > 0) & (u < 1)
    w = np.where(inside, u, 0.5)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(inside, np.exp(-1.0 / (w * (1.0 - w))), 0.0)


@lru_cache(maxsize=None)
def bump_normalizer() -> float:
    val, _ = scipy.integrate.quad(lambda u: float(_raw_bump(u)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def bump(u):
    return _raw_bump(u) / bump_normalizer()


@lru_cache(maxsize=None)
def _ramp_spline():
    n = 4096
    x = np.linspace(0.0, 1.0, n + 1)
    gx, gw = np.polynomial.legendre.leggauss(10)
    h = 1.0 / n
    nodes = x[:-1, None] + (gx[None, :] + 1.0) * (h / 2)
    cells = (bump(nodes) * gw[None, :]).sum(axis=1) * (h / 2)
    y = np.concatenate([[0.0], np.cumsum(cells)])
    y /= y[-1]
    return CubicHermiteSpline(x, y, bump(x))


def ramp(u):
    u = np.asarray(u, float)
    inner = _ramp_spline()(np.clip(u, 0.0, 1.0))
    return np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, inner))


def _checked_sqrt(x):
    if np.any(x < 0):
        raise EvalError("sqrt of a negative number")
    return np.sqrt(x)


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": _checked_sqrt,
    "bump": bump,
    "ramp": ramp,
}


# -- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    arg: object

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: object

    def __str__(self):
        return f"{self.func}({self.arg})"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos, out = 0, []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            out.append(("end", "", pos))
            return out
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, ("number", "name", "operator"))
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.peek()
        if val != value or kind != "op":
            raise ParseError(f"unexpected {val or 'end of input'!r}", pos, (value,))
        self.i += 1

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos, ("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {val!r}", pos, FUNCTIONS)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES or val in CONSTANTS:
                return Var(val)
            raise UnknownIdentifier(f"unknown identifier {val!r}", pos, VARIABLES + tuple(CONSTANTS))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos, ("number", "name", "("))


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, env))
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise EvalError("division by zero")
        return a / b
    return np.power(a, b)


@dataclass(frozen=True)
class FieldExpr:
    """Parsed scalar field; ``str()`` gives a canonical form that reparses."""

    root: object
    source: str = ""

    def __str__(self):
        return str(self.root)

    def is_zero(self) -> bool:
        return isinstance(self.root, Num) and self.root.value == 0.0

    def __call__(self, s, t, lam=0.0):
        return evaluate(self, s, t, lam)


def parse(text: str) -> FieldExpr:
    if not isinstance(text, str):
        text = repr(float(text))
    return FieldExpr(_Parser(text).parse(), text)


def evaluate(expr: FieldExpr, s, t, lam=0.0):
    env = {"s": np.asarray(s, float), "t": np.asarray(t, float), "lam": float(lam), **CONSTANTS}
    with np.errstate(all="ignore"):
        out = _eval(expr.root, env)
    out = np.broadcast_to(np.asarray(out, float), np.broadcast_shapes(env["s"].shape, env["t"].shape))
    if not np.all(np.isfinite(out)):
        raise EvalError(f"non-finite value while evaluating {expr}")
    return out if out.ndim else float(out)


def central_difference(fn, x, h=1e-5):
    """Derivative of ``fn`` at ``x`` by central differences, Richardson-extrapolated once."""
    d1 = (fn(x + h) - fn(x - h)) / (2 * h)
    h2 = h / 2
    d2 = (fn(x + h2) - fn(x - h2)) / (2 * h2)
    return (4 * d2 - d1) / 3


def partial(expr: FieldExpr, var: str, s, t, lam=0.0, h=1e-5):
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    if var == "s":
        return central_difference(lambda x: evaluate(expr, x, t, lam), s, h)
    if var == "t":
        return central_difference(lambda x: evaluate(expr, s, x, lam), t, h)
    if var == "lam":
        return central_difference(lambda x: evaluate(expr, s, t, x), float(lam), h)
    raise ValueError(f"cannot differentiate with respect to {var!r}")
