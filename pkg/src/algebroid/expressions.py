"""Analytic scalar fields over chart coordinates.

Expressions are parsed from a small text grammar over the variables
``x1 .. x<n>`` and evaluated with second-order forward-mode (hyper-dual)
arithmetic: a single pass yields the value together with the exact gradient
and Hessian.  No finite differences are used anywhere in this module.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;
    atom    = number | variable | function , "(" , expr , ")"
            | "(" , expr , ")" ;

``^`` is right-associative and binds tighter than unary minus; ``*``, ``/``,
``+`` and ``-`` are left-associative.  Variables are ``x1`` .. ``x<n>``
(1-based).  Functions: ``sin cos tan exp log sqrt sinh cosh``.  Numbers are
decimal literals with optional exponent (``2``, ``0.5``, ``1e-3``).

Constant subtrees are folded at parse time, so fields made of literals
evaluate in O(1).  Expressions are immutable and evaluation is pure; they
can be shared freely between threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Expression",
    "EvalResult",
    "ExpressionError",
    "ParseError",
    "EvalDomainError",
    "parse",
]


class ExpressionError(ValueError):
    """Base class for expression parsing and evaluation failures."""


class ParseError(ExpressionError):
    """Raised on malformed input; carries the 0-based text position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvalDomainError(ExpressionError):
    """Raised when an evaluation point leaves the real domain of a node."""

    def __init__(self, message, node):
        super().__init__(f"{message} in subexpression '{node}'")
        self.node = node


# ---------------------------------------------------------------------------
# Second-order forward values.
#
# A _T2 carries f, df (…, n) and d2f (…, n, n) over an arbitrary batch of
# evaluation points; `grad`/`hess` are None when not requested.  All rules
# below are the exact second-order chain rules, and every Hessian update is
# symmetric by construction, so H == H.T holds to the bit.
# ---------------------------------------------------------------------------


class _T2:
    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=None, h=None):
        self.v = v
        self.g = g
        self.h = h


def _outer_sym(a, b):
    # a ⊗ b + b ⊗ a, exactly symmetric in floating point
    return a[..., :, None] * b[..., None, :] + b[..., :, None] * a[..., None, :]


def _t2_add(a, b):
    return _T2(
        a.v + b.v,
        None if a.g is None else a.g + b.g,
        None if a.h is None else a.h + b.h,
    )


def _t2_sub(a, b):
    return _T2(
        a.v - b.v,
        None if a.g is None else a.g - b.g,
        None if a.h is None else a.h - b.h,
    )


def _t2_neg(a):
    return _T2(-a.v, None if a.g is None else -a.g, None if a.h is None else -a.h)


def _t2_mul(a, b):
    v = a.v * b.v
    g = h = None
    if a.g is not None:
        g = a.g * b.v[..., None] + b.g * a.v[..., None]
    if a.h is not None:
        h = (
            a.h * b.v[..., None, None]
            + b.h * a.v[..., None, None]
            + _outer_sym(a.g, b.g)
        )
    return _T2(v, g, h)


def _t2_chain(a, fv, f1=None, f2=None):
    """Apply a scalar function through its value/first/second derivatives."""
    g = h = None
    if a.g is not None:
        g = f1[..., None] * a.g
    if a.h is not None:
        # g ⊗ g is exactly symmetric (float multiplication commutes)
        gg = a.g[..., :, None] * a.g[..., None, :]
        h = f1[..., None, None] * a.h + f2[..., None, None] * gg
    return _T2(fv, g, h)


_FUNCS = {
    "sin": (np.sin, np.cos, lambda v: -np.sin(v)),
    "cos": (np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v)),
    "tan": (np.tan, None, None),  # handled specially below
    "exp": (np.exp, np.exp, np.exp),
    "log": (np.log, None, None),
    "sqrt": (np.sqrt, None, None),
    "sinh": (np.sinh, np.cosh, np.sinh),
    "cosh": (np.cosh, np.sinh, np.cosh),
}


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class _Node:
    def prec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Const(_Node):
    value: float

    def prec(self):
        return _PREC_ATOM if self.value >= 0 else _PREC_NEG

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(_Node):
    index: int  # 1-based

    def prec(self):
        return _PREC_ATOM

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Neg(_Node):
    arg: _Node

    def prec(self):
        return _PREC_NEG

    def __str__(self):
        return f"-{_wrap(self.arg, _PREC_NEG)}"


@dataclass(frozen=True)
class BinOp(_Node):
    op: str  # one of + - * / ^
    lhs: _Node
    rhs: _Node

    def prec(self):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[self.op]

    def __str__(self):
        if self.op in "+-":
            # parse is left-associative: a right operand at the same
            # precedence level must keep its parentheses
            lhs = _wrap(self.lhs, _PREC_ADD)
            rhs = _wrap(self.rhs, _PREC_ADD + 1)
            return f"{lhs} {self.op} {rhs}"
        if self.op in "*/":
            lhs = _wrap(self.lhs, _PREC_MUL)
            rhs = _wrap(self.rhs, _PREC_MUL + 1)
            return f"{lhs} {self.op} {rhs}"
        # power: base must be atomic, exponent parses as a unary
        lhs = _wrap(self.lhs, _PREC_ATOM)
        rhs = self.rhs if self.rhs.prec() >= _PREC_NEG else _paren(self.rhs)
        return f"{lhs} ^ {rhs}"


@dataclass(frozen=True)
class Call(_Node):
    func: str
    arg: _Node

    def prec(self):
        return _PREC_ATOM

    def __str__(self):
        return f"{self.func}({self.arg})"


def _paren(node):
    return _Paren(node)


class _Paren:
    # printing helper only, never part of an AST
    def __init__(self, node):
        self.node = node

    def __str__(self):
        return f"({self.node})"


def _wrap(node, min_prec):
    return _paren(node) if node.prec() < min_prec else node


# ---------------------------------------------------------------------------
# Constant folding
# ---------------------------------------------------------------------------


def _fold_unary(func, arg):
    if isinstance(arg, Const):
        try:
            v = {
                "sin": math.sin,
                "cos": math.cos,
                "tan": math.tan,
                "exp": math.exp,
                "log": math.log,
                "sqrt": math.sqrt,
                "sinh": math.sinh,
                "cosh": math.cosh,
            }[func](arg.value)
        except (ValueError, OverflowError):
            return Call(func, arg)
        if math.isfinite(v):
            return Const(v)
    return Call(func, arg)


def _fold_neg(arg):
    if isinstance(arg, Const):
        return Const(-arg.value)
    return Neg(arg)


def _fold_binop(op, lhs, rhs):
    if isinstance(lhs, Const) and isinstance(rhs, Const):
        try:
            v = {
                "+": lambda a, b: a + b,
                "-": lambda a, b: a - b,
                "*": lambda a, b: a * b,
                "/": lambda a, b: a / b,
                "^": lambda a, b: a**b,
            }[op](lhs.value, rhs.value)
        except (ValueError, OverflowError, ZeroDivisionError):
            return BinOp(op, lhs, rhs)
        if isinstance(v, complex) or not math.isfinite(v):
            return BinOp(op, lhs, rhs)
        return Const(float(v))
    return BinOp(op, lhs, rhs)


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_VAR_RE = re.compile(r"^x(\d+)$")


class _Parser:
    def __init__(self, text, n):
        self.text = text
        self.n = n
        self.pos = 0
        self.tok = None
        self.tok_pos = 0
        self._advance()

    def _advance(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(self.text):
            self.tok = None
            self.tok_pos = self.pos
            return
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None or m.start() != self.pos:
            raise ParseError(f"unexpected character {self.text[self.pos]!r}", self.pos)
        self.tok_pos = m.start(m.lastgroup)
        self.tok = (m.lastgroup, m.group(m.lastgroup))
        self.pos = m.end()

    def _expect_op(self, op):
        if self.tok != ("op", op):
            raise ParseError(f"expected {op!r}", self.tok_pos)
        self._advance()

    def parse(self):
        node = self.expr()
        if self.tok is not None:
            raise ParseError(f"unexpected token {self.tok[1]!r}", self.tok_pos)
        return node

    def expr(self):
        node = self.term()
        while self.tok is not None and self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self._advance()
            node = _fold_binop(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok is not None and self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.tok[1]
            self._advance()
            node = _fold_binop(op, node, self.unary())
        return node

    def unary(self):
        if self.tok == ("op", "-"):
            self._advance()
            return _fold_neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.tok == ("op", "^"):
            self._advance()
            node = _fold_binop("^", node, self.unary())
        return node

    def atom(self):
        if self.tok is None:
            raise ParseError("unexpected end of input", self.tok_pos)
        kind, value = self.tok
        pos = self.tok_pos
        if kind == "num":
            self._advance()
            return Const(float(value))
        if kind == "name":
            self._advance()
            m = _VAR_RE.match(value)
            if m is not None:
                idx = int(m.group(1))
                if not 1 <= idx <= self.n:
                    raise ParseError(
                        f"variable x{idx} out of range for {self.n} variable(s)", pos
                    )
                return Var(idx)
            if value in _FUNCS:
                self._expect_op("(")
                arg = self.expr()
                self._expect_op(")")
                return _fold_unary(value, arg)
            raise ParseError(f"unknown identifier {value!r}", pos)
        if value == "(":
            self._advance()
            node = self.expr()
            self._expect_op(")")
            return node
        raise ParseError(f"unexpected token {value!r}", pos)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _eval_node(node, xcols, order):
    """Evaluate `node` on a batch; xcols is a list of n value arrays."""
    if isinstance(node, Const):
        shape = xcols[0].shape if xcols else ()
        n = len(xcols)
        v = np.full(shape, node.value)
        g = np.zeros(shape + (n,)) if order >= 1 else None
        h = np.zeros(shape + (n, n)) if order >= 2 else None
        return _T2(v, g, h)
    if isinstance(node, Var):
        shape = xcols[0].shape
        n = len(xcols)
        v = xcols[node.index - 1]
        g = h = None
        if order >= 1:
            g = np.zeros(shape + (n,))
            g[..., node.index - 1] = 1.0
        if order >= 2:
            h = np.zeros(shape + (n, n))
        return _T2(np.array(v, copy=True), g, h)
    if isinstance(node, Neg):
        return _t2_neg(_eval_node(node.arg, xcols, order))
    if isinstance(node, Call):
        a = _eval_node(node.arg, xcols, order)
        return _eval_call(node, a, order)
    if isinstance(node, BinOp):
        if node.op == "^":
            return _eval_pow(node, xcols, order)
        a = _eval_node(node.lhs, xcols, order)
        b = _eval_node(node.rhs, xcols, order)
        if node.op == "+":
            return _t2_add(a, b)
        if node.op == "-":
            return _t2_sub(a, b)
        if node.op == "*":
            return _t2_mul(a, b)
        if np.any(b.v == 0.0):
            raise EvalDomainError("division by zero", node)
        return _t2_mul(a, _t2_recip(b))
    raise TypeError(f"unknown node type {type(node)!r}")


def _t2_recip(b):
    inv = 1.0 / b.v
    g = h = None
    if b.g is not None:
        g = -b.g * (inv * inv)[..., None]
    if b.h is not None:
        h = -b.h * (inv * inv)[..., None, None] + _outer_sym(b.g, b.g) * (
            inv * inv * inv
        )[..., None, None]
    return _T2(inv, g, h)


def _eval_call(node, a, order):
    name = node.func
    if name == "tan":
        t = np.tan(a.v)
        sec2 = 1.0 + t * t
        return _t2_chain(a, t, sec2, 2.0 * t * sec2)
    if name == "log":
        if np.any(a.v <= 0.0):
            raise EvalDomainError("log of a non-positive value", node)
        return _t2_chain(a, np.log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v))
    if name == "sqrt":
        if np.any(a.v <= 0.0):
            raise EvalDomainError("sqrt of a non-positive value", node)
        s = np.sqrt(a.v)
        return _t2_chain(a, s, 0.5 / s, -0.25 / (s * a.v))
    fv, f1, f2 = _FUNCS[name]
    return _t2_chain(a, fv(a.v), f1(a.v), f2(a.v))


def _eval_pow(node, xcols, order):
    a = _eval_node(node.lhs, xcols, order)
    if isinstance(node.rhs, Const):
        c = node.rhs.value
        if c == round(c) and abs(c) < 2**31:
            k = int(c)
            if k < 0 and np.any(a.v == 0.0):
                raise EvalDomainError("zero base with negative exponent", node)
            v = np.power(a.v, k)
            f1 = k * np.power(a.v, k - 1) if k != 0 else np.zeros_like(a.v)
            f2 = (
                k * (k - 1) * np.power(a.v, k - 2)
                if k not in (0, 1)
                else np.zeros_like(a.v)
            )
            return _t2_chain(a, v, f1, f2)
        if np.any(a.v <= 0.0):
            raise EvalDomainError("non-positive base with non-integer exponent", node)
        v = np.power(a.v, c)
        return _t2_chain(a, v, c * np.power(a.v, c - 1.0), c * (c - 1.0) * np.power(a.v, c - 2.0))
    # general exponent: a^b = exp(b log a), requires a > 0
    if np.any(a.v <= 0.0):
        raise EvalDomainError("non-positive base with variable exponent", node)
    b = _eval_node(node.rhs, xcols, order)
    loga = _t2_chain(a, np.log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v))
    w = _t2_mul(b, loga)
    e = np.exp(w.v)
    return _t2_chain(w, e, e, e)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


@dataclass
class EvalResult:
    """Value with exact first and second partial derivatives."""

    value: float
    gradient: np.ndarray  # shape (n,)
    hessian: np.ndarray  # shape (n, n), symmetric to the bit


@dataclass(frozen=True)
class Expression:
    """An analytic expression over chart variables ``x1 .. x<n>``.

    Immutable; printing with ``str()`` and re-parsing reproduces the same
    tree (round-trip stability).
    """

    root: _Node
    n: int

    def __str__(self):
        return str(self.root)

    @property
    def is_constant(self):
        return isinstance(self.root, Const)

    def evaluate(self, x) -> EvalResult:
        """Evaluate at a single point with exact gradient and Hessian."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a point of dimension {self.n}, got {x.shape}")
        t = self.eval_raw(x, order=2)
        return EvalResult(float(t.v), t.g, t.h)

    def eval_raw(self, points, order=0):
        """Evaluate on points of shape (..., n); returns a _T2 batch.

        order 0 fills only values, 1 adds gradients (..., n), 2 adds
        Hessians (..., n, n).
        """
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.n:
            raise ValueError(
                f"expected points with last axis {self.n}, got {points.shape}"
            )
        xcols = [points[..., i] for i in range(self.n)]
        return _eval_node(self.root, xcols, order)

    def values(self, points):
        """Values only, on points of shape (..., n)."""
        return self.eval_raw(points, order=0).v


def parse(text: str, n: int) -> Expression:
    """Parse `text` over variables ``x1 .. x<n>``.

    Raises ParseError (with position) on syntax errors, unknown identifiers
    and variable indices above `n`.
    """
    if n < 0:
        raise ValueError("variable count must be nonnegative")
    return Expression(_Parser(text, n).parse(), n)


def const(value: float, n: int) -> Expression:
    """A constant field over n variables."""
    return Expression(Const(float(value)), n)
