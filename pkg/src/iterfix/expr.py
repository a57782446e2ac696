"""Piecewise expressions: the input format for G, F and H.

A definition is a sequence of pieces, each an interval followed by a body::

    piece (0,1]: 1;
    piece [1,2]: 2^(x-1);
    piece [2,inf): 2^(log(2)/log(x))

Bodies use ``+ - * / ^`` (``^`` is right associative), the functions
``exp``, ``log`` (natural), ``abs`` and ``sign``, the named constants
``log2``, ``e`` and ``pi``, numeric literals and a single variable.
``inf`` may only appear as an interval bound.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

CONTINUITY_TOL = 1e-9

NAMED_CONSTANTS = {"log2": math.log(2.0), "e": math.e, "pi": math.pi}
FUNCTIONS = ("exp", "log", "abs", "sign")


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    """Raised on malformed input; ``offset`` is a 1-based column into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class PieceError(ExprError):
    """Overlapping pieces, gaps, or a discontinuity at a shared endpoint."""


class ExprDomainError(ExprError):
    """Evaluation outside the declared domain or of an undefined body."""


class BoundaryError(ExprError):
    """Two-sided derivative requested at a piece boundary."""


# --------------------------------------------------------------------------
# expression tree


@dataclass(frozen=True)
class Num:
    value: float
    text: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Num | Const | Var | Neg | BinOp | Call

ZERO = Num(0.0, "0")
ONE = Num(1.0, "1")


def num(value: float) -> Num:
    return Num(float(value), repr(float(value)))


def _is_num(node: Node, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def add(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _is_num(a, 0.0):
        return ZERO
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a: Node, b: Node) -> Node:
    if _is_num(b, 1.0):
        return a
    if _is_num(b, 0.0):
        return ONE
    return BinOp("^", a, b)


def neg(a: Node) -> Node:
    if _is_num(a, 0.0):
        return ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def depends_on(node: Node, var: str) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, (Neg, Call)):
        return depends_on(node.arg, var)
    return depends_on(node.left, var) or depends_on(node.right, var)


def diff(node: Node, var: str) -> Node:
    """Symbolic derivative of ``node`` with respect to ``var``."""
    if not depends_on(node, var):
        return ZERO
    if isinstance(node, Var):
        return ONE
    if isinstance(node, Neg):
        return neg(diff(node.arg, var))
    if isinstance(node, Call):
        u, du = node.arg, diff(node.arg, var)
        if node.func == "exp":
            return mul(node, du)
        if node.func == "log":
            return div(du, u)
        if node.func == "abs":
            return mul(Call("sign", u), du)
        if node.func == "sign":
            return ZERO
        raise ExprError(f"cannot differentiate {node.func}")
    a, b = node.left, node.right
    if node.op == "+":
        return add(diff(a, var), diff(b, var))
    if node.op == "-":
        return sub(diff(a, var), diff(b, var))
    if node.op == "*":
        return add(mul(diff(a, var), b), mul(a, diff(b, var)))
    if node.op == "/":
        return div(sub(mul(diff(a, var), b), mul(a, diff(b, var))), power(b, num(2)))
    # u^v
    if not depends_on(b, var):
        lowered = num(b.value - 1.0) if isinstance(b, Num) else sub(b, ONE)
        return mul(mul(b, power(a, lowered)), diff(a, var))
    if not depends_on(a, var):
        return mul(mul(node, Call("log", a)), diff(b, var))
    return mul(node, add(mul(diff(b, var), Call("log", a)), div(mul(b, diff(a, var)), a)))


def to_source(node: Node) -> str:
    """Fully parenthesised source text; parsing it returns an identical tree."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def _check(mask, what: str) -> None:
    if np.any(mask):
        raise ExprDomainError(what)


def evaluate_node(node: Node, x: np.ndarray) -> np.ndarray:
    """Evaluate a tree on an array of abscissae.

    Domain violations raise ``ExprDomainError`` instead of producing nan/inf.
    """
    with np.errstate(all="ignore"):
        if isinstance(node, Num):
            return np.full_like(x, node.value)
        if isinstance(node, Const):
            return np.full_like(x, NAMED_CONSTANTS[node.name])
        if isinstance(node, Var):
            return x.copy()
        if isinstance(node, Neg):
            return -evaluate_node(node.arg, x)
        if isinstance(node, Call):
            u = evaluate_node(node.arg, x)
            if node.func == "exp":
                out = np.exp(u)
                _check(~np.isfinite(out), "exp overflow")
                return out
            if node.func == "log":
                _check(u <= 0, "log of a non-positive number")
                return np.log(u)
            if node.func == "abs":
                return np.abs(u)
            return np.sign(u)
        a = evaluate_node(node.left, x)
        b = evaluate_node(node.right, x)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            _check(b == 0, "division by zero")
            out = a / b
        else:
            _check((a < 0) & (b != np.round(b)), "negative base with non-integer exponent")
            _check((a == 0) & (b < 0), "zero to a negative power")
            out = np.power(a, b)
        _check(~np.isfinite(out), f"non-finite result of '{node.op}'")
        return out


# --------------------------------------------------------------------------
# intervals and piecewise definitions


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo_ok = (x > self.lo) | ((x == self.lo) & self.lo_closed)
        hi_ok = (x < self.hi) | ((x == self.hi) & self.hi_closed)
        return lo_ok & hi_ok

    def closure_contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def to_source(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{format_bound(self.lo)},{format_bound(self.hi)}{right}"


def format_bound(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    for name, value in NAMED_CONSTANTS.items():
        if v == value:
            return name
        if v == -value:
            return f"-{name}"
    return repr(float(v))


@dataclass(frozen=True)
class Piece:
    interval: Interval
    body: Node


@dataclass(frozen=True)
class PiecewiseExpr:
    pieces: tuple[Piece, ...]
    variable: str = "x"

    @property
    def domain(self) -> Interval:
        first, last = self.pieces[0].interval, self.pieces[-1].interval
        return Interval(first.lo, last.hi, first.lo_closed, last.hi_closed)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Finite piece endpoints, including the ends of the domain."""
        pts = []
        for p in self.pieces:
            for v in (p.interval.lo, p.interval.hi):
                if math.isfinite(v) and v not in pts:
                    pts.append(v)
        return tuple(sorted(pts))

    @cached_property
    def _derivative_bodies(self) -> tuple[Node, ...]:
        return tuple(diff(p.body, self.variable) for p in self.pieces)

    def to_source(self) -> str:
        return ";\n".join(
            f"piece {p.interval.to_source()}: {to_source(p.body)}" for p in self.pieces
        )

    def _select(self, x: np.ndarray, side: str | None) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (piece index, mask) so that every x gets exactly one piece."""
        remaining = np.ones(x.shape, dtype=bool)
        for i, p in enumerate(self.pieces):
            iv = p.interval
            if side == "right":
                mask = (x >= iv.lo) & (x < iv.hi)
            elif side == "left":
                mask = (x > iv.lo) & (x <= iv.hi)
            else:
                mask = iv.closure_contains(x)
            mask &= remaining
            if np.any(mask):
                remaining &= ~mask
                yield i, mask
        if side is not None and np.any(remaining):
            # at an end of the domain only one side exists
            for i, p in enumerate(self.pieces):
                mask = p.interval.closure_contains(x) & remaining
                if np.any(mask):
                    remaining &= ~mask
                    yield i, mask
        if np.any(remaining):
            bad = x[remaining][0]
            raise ExprDomainError(f"no {side + '-sided ' if side else ''}piece at x={bad!r}")

    def _check_domain(self, x: np.ndarray) -> None:
        outside = ~self.domain.contains(x)
        if np.any(outside):
            raise ExprDomainError(f"x={x[outside][0]!r} outside the domain {self.domain.to_source()}")

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Value at ``x`` (scalar or array); shared endpoints use the left piece."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_domain(arr)
        out = np.empty_like(arr)
        for i, mask in self._select(arr, None):
            out[mask] = evaluate_node(self.pieces[i].body, arr[mask])
        return out if np.ndim(x) else float(out[0])

    def eval_derivative(self, x, side: str | None = None):
        """Exact derivative of the piece body at ``x``.

        At a piece endpoint ``side`` ("left" or "right") selects the one-sided
        value; without it a ``BoundaryError`` is raised.
        """
        if side not in (None, "left", "right"):
            raise ValueError(f"side must be None, 'left' or 'right', got {side!r}")
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_domain(arr)
        if side is None:
            at_edge = np.isin(arr, np.array(self.breakpoints))
            if np.any(at_edge):
                raise BoundaryError(
                    f"x={arr[at_edge][0]!r} is a piece boundary; ask for a one-sided derivative"
                )
        out = np.empty_like(arr)
        bodies = self._derivative_bodies
        for i, mask in self._select(arr, side):
            out[mask] = evaluate_node(bodies[i], arr[mask])
        return out if np.ndim(x) else float(out[0])

    def map_pieces(self, func) -> "PiecewiseExpr":
        return PiecewiseExpr(tuple(func(p) for p in self.pieces), self.variable)


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()\[\],:;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # 1-based


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos + 1)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", len(source) + 1))
    return tokens


class _Parser:
    def __init__(self, source: str, variable: str):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variable = variable

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "eof":
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.tok.offset)
        return self.advance()

    def error(self, message: str):
        raise ExprSyntaxError(message, self.tok.offset)

    # def := piece (";" piece)* [";"]
    def definition(self) -> list[Piece]:
        pieces = [self.piece()]
        while self.tok.text == ";":
            self.advance()
            if self.tok.kind == "eof":
                break
            pieces.append(self.piece())
        if self.tok.kind != "eof":
            self.error(f"expected ';' or end of input, found {self.tok.text!r}")
        return pieces

    def piece(self) -> Piece:
        if self.tok.text != "piece":
            self.error("expected 'piece'")
        self.advance()
        start = self.tok
        if self.tok.text not in ("(", "["):
            self.error("expected '(' or '[' to open an interval")
        lo_closed = self.advance().text == "["
        lo = self.bound()
        self.expect(",")
        hi = self.bound()
        if self.tok.text not in (")", "]"):
            self.error("expected ')' or ']' to close an interval")
        hi_closed = self.advance().text == "]"
        if not lo < hi:
            raise ExprSyntaxError(f"empty interval [{lo}, {hi}]", start.offset)
        if (lo_closed and math.isinf(lo)) or (hi_closed and math.isinf(hi)):
            raise ExprSyntaxError("infinite bounds must be open", start.offset)
        self.expect(":")
        return Piece(Interval(lo, hi, lo_closed, hi_closed), self.expr())

    def bound(self) -> float:
        sign = 1.0
        if self.tok.text in ("-", "+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        t = self.tok
        if t.kind == "number":
            self.advance()
            return sign * float(t.text)
        if t.kind == "ident" and t.text == "inf":
            self.advance()
            return sign * math.inf
        if t.kind == "ident" and t.text in NAMED_CONSTANTS:
            self.advance()
            return sign * NAMED_CONSTANTS[t.text]
        self.error("expected a numeric bound, 'inf' or a named constant")

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text), t.text)
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "ident":
            if t.text in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if t.text in NAMED_CONSTANTS:
                self.advance()
                return Const(t.text)
            if t.text == self.variable:
                self.advance()
                return Var(t.text)
            if t.text == "inf":
                self.error("'inf' is only allowed as an interval bound")
            self.error(f"unknown identifier {t.text!r}")
        found = "end of input" if t.kind == "eof" else repr(t.text)
        self.error(f"expected an operand, found {found}")


def parse_body(source: str, variable: str = "x") -> Node:
    """Parse a bare expression (no pieces)."""
    p = _Parser(source, variable)
    node = p.expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return node


def parse_constant(source: str) -> float:
    """Evaluate a variable-free expression such as ``20*log2/9``."""
    node = parse_body(source, variable="\0")
    return float(evaluate_node(node, np.zeros(1))[0])


def validate_pieces(pieces: Sequence[Piece], tol: float = CONTINUITY_TOL) -> tuple[Piece, ...]:
    """Sort pieces and reject overlaps, gaps and discontinuities."""
    ordered = sorted(pieces, key=lambda p: (p.interval.lo, p.interval.hi))
    for left, right in zip(ordered, ordered[1:]):
        a, b = left.interval, right.interval
        if a.hi > b.lo:
            raise PieceError(f"pieces {a.to_source()} and {b.to_source()} overlap")
        if a.hi < b.lo or not (a.hi_closed or b.lo_closed):
            raise PieceError(f"gap between {a.to_source()} and {b.to_source()}")
        x = np.array([a.hi])
        try:
            va = evaluate_node(left.body, x)[0]
            vb = evaluate_node(right.body, x)[0]
        except ExprDomainError as exc:
            raise PieceError(f"cannot evaluate both sides at x={a.hi!r}: {exc}") from exc
        if abs(va - vb) > tol:
            raise PieceError(
                f"discontinuity at x={a.hi!r}: left {va!r}, right {vb!r} (tolerance {tol:g})"
            )
    return tuple(ordered)


def parse(source: str, variable: str = "x") -> PiecewiseExpr:
    """Parse a piecewise definition."""
    pieces = _Parser(source, variable).definition()
    return PiecewiseExpr(validate_pieces(pieces), variable)
