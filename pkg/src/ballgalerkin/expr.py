"""A small expression language for problem data.

Expressions are parsed into an immutable tree that can be evaluated on
numpy arrays and differentiated symbolically.  Grammar, loosest first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-2^2 == -4`` and
``2^3^2 == 512``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

VARIABLES = ("s", "t", "v", "x", "y", "z", "u")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = ("cos", "sin", "exp", "log", "sqrt", "abs", "sign")


class ExpressionError(ValueError):
    """Raised for syntax errors, unknown names and arity mistakes."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class Expr:
    """Base node.  Subclasses are frozen dataclasses."""

    def evaluate(self, env: Mapping[str, object]):
        with np.errstate(all="ignore"):
            return self._eval(env)

    def __call__(self, **env):
        return self.evaluate(env)

    def variables(self) -> frozenset:
        return frozenset(self._vars())

    def _vars(self) -> Iterable[str]:
        return ()


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def _eval(self, env):
        return self.value

    def __str__(self):
        text = repr(float(self.value))
        if text in ("inf", "-inf", "nan"):
            raise ExpressionError(f"cannot render non-finite constant {text}")
        return f"({text})" if self.value < 0 else text


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def _eval(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise ExpressionError(f"no value bound for variable {self.name!r}") from None

    def _vars(self):
        return (self.name,)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def _eval(self, env):
        return -self.arg._eval(env)

    def _vars(self):
        return self.arg._vars()

    def __str__(self):
        return f"(-{self.arg})"


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def _eval(self, env):
        a = self.left._eval(env)
        b = self.right._eval(env)
        if self.op == "^":
            # float power so negative integer exponents work on integer bases
            return np.power(np.asarray(a, dtype=float), b)
        return _BINARY[self.op](a, b)

    def _vars(self):
        yield from self.left._vars()
        yield from self.right._vars()

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


_UNARY = {
    "cos": np.cos,
    "sin": np.sin,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sign": np.sign,
}


@dataclass(frozen=True)
class Call(Expr):
    name: str
    arg: Expr

    def _eval(self, env):
        return _UNARY[self.name](self.arg._eval(env))

    def _vars(self):
        return self.arg._vars()

    def __str__(self):
        return f"{self.name}({self.arg})"


# -- smart constructors: fold constants and drop neutral elements ---------

def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


def const(value) -> Const:
    return Const(float(value))


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return Const(1.0)
    if _is_const(b, 1.0):
        return a
    return BinOp("^", a, b)


def call(name: str, a: Expr) -> Expr:
    if isinstance(a, Const):
        with np.errstate(all="ignore"):
            value = float(_UNARY[name](a.value))
        if math.isfinite(value):
            return Const(value)
    return Call(name, a)


# -- differentiation ------------------------------------------------------

def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic derivative of ``e`` with respect to variable ``var``."""
    if var not in e.variables():
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Neg):
        return neg(differentiate(e.arg, var))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = differentiate(a, var), differentiate(b, var)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        if e.op == "/":
            return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
        # a^b
        if var not in b.variables():
            return mul(mul(b, power(a, sub(b, Const(1.0)))), da)
        return mul(e, add(mul(db, call("log", a)), div(mul(b, da), a)))
    if isinstance(e, Call):
        a = e.arg
        da = differentiate(a, var)
        outer = {
            "cos": lambda: neg(call("sin", a)),
            "sin": lambda: call("cos", a),
            "exp": lambda: e,
            "log": lambda: div(Const(1.0), a),
            "sqrt": lambda: div(Const(0.5), e),
            "abs": lambda: call("sign", a),
            "sign": lambda: Const(0.0),
        }[e.name]()
        return mul(outer, da)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, rebuilding through the folding constructors."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        ctor = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[e.op]
        return ctor(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return call(e.name, substitute(e.arg, mapping))
    raise TypeError(type(e).__name__)


# -- parsing --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text):
    pos = 0
    tokens = []
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, allowed):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExpressionError(f"expected {value!r}, found {found}", off)

    def parse(self):
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected {text!r}", off)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = BinOp(op, e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = BinOp(op, e, rhs)
        return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {text!r}", off)
                self.take()
                arg = self.expr()
                if self.peek()[1] == ",":
                    raise ExpressionError(
                        f"function {text!r} takes exactly 1 argument", self.peek()[2]
                    )
                self.expect(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ExpressionError(f"function {text!r} needs an argument list", off)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            if text not in self.allowed:
                raise ExpressionError(f"unknown identifier {text!r}", off)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {found}", off)


def parse_expression(text: str, variables: Iterable[str] = VARIABLES) -> Expr:
    """Parse ``text``; identifiers outside ``variables`` are rejected.

    Error offsets count bytes of the UTF-8 encoded text.
    """
    try:
        return _Parser(text, frozenset(variables)).parse()
    except ExpressionError as exc:
        if exc.offset is None or text.isascii():
            raise
        message = str(exc).rsplit(" (at offset", 1)[0]
        raise ExpressionError(message, len(text[: exc.offset].encode("utf-8"))) from None
