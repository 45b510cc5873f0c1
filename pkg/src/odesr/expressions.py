"""Expression trees over state variables, time, and constants.

Trees are immutable and structurally comparable.  Evaluation is
vectorised over sample points and never raises on bad math: any point
where a subexpression leaves the reals (log of a non-positive value,
division by zero, overflow, a fractional power of a negative base)
evaluates to nan, and nan propagates to the root.  Callers treat nan
as "invalid here" rather than catching exceptions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

UNARY_OPS = ("sin", "cos", "log", "exp", "identity")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_SYMBOL_BINARY = {v: k for k, v in _BINARY_SYMBOL.items()}

# exponents treated as exact integers; larger ones fall back to np.power
_MAX_INT_POW = 64


@dataclass(frozen=True, slots=True)
class Const:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, slots=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True, slots=True)
class Time:
    pass


@dataclass(frozen=True, slots=True)
class Unary:
    op: str
    arg: "Expr"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


Expr = Union[Const, Var, Time, Unary, Binary]


# ------------------------------------------------------------------ evaluate


def evaluate_batch(expr: Expr, times: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Evaluate expr at rows of (times, states); invalid points become nan."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states.reshape(-1, 1)
    if times.ndim != 1 or states.ndim != 2 or states.shape[0] != times.shape[0]:
        raise ValueError(
            f"times {times.shape} and states {states.shape} do not align"
        )
    with np.errstate(all="ignore"):
        return _eval(expr, times, states)


def evaluate(expr: Expr, t: float, x: Sequence[float]) -> float:
    """Scalar evaluation; nan marks an invalid point."""
    xs = np.asarray(x, dtype=float).reshape(1, -1)
    return float(evaluate_batch(expr, np.array([float(t)]), xs)[0])


def _contain(out: np.ndarray, *parents: np.ndarray) -> np.ndarray:
    # overflow and domain errors both collapse to nan, and nan inputs
    # always poison the output (np.power(1, nan) would otherwise be 1)
    bad = ~np.isfinite(out)
    for p in parents:
        bad |= ~np.isfinite(p)
    if bad.any():
        out = np.where(bad, np.nan, out)
    return out


def _int_pow(base: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.ones_like(base)
    out = base
    for _ in range(abs(n) - 1):
        out = out * base
    if n < 0:
        out = 1.0 / out
    return out


def _eval(expr: Expr, ts: np.ndarray, xs: np.ndarray) -> np.ndarray:
    if isinstance(expr, Const):
        return np.full(ts.shape, expr.value)
    if isinstance(expr, Var):
        if expr.index >= xs.shape[1]:
            raise ValueError(
                f"variable index {expr.index} out of range for "
                f"state dimension {xs.shape[1]}"
            )
        return xs[:, expr.index]
    if isinstance(expr, Time):
        return ts
    if isinstance(expr, Unary):
        a = _eval(expr.arg, ts, xs)
        if expr.op == "identity":
            return a
        fn = {"sin": np.sin, "cos": np.cos, "log": np.log, "exp": np.exp}[expr.op]
        return _contain(fn(a), a)
    l = _eval(expr.left, ts, xs)
    r = _eval(expr.right, ts, xs)
    if expr.op == "add":
        out = l + r
    elif expr.op == "sub":
        out = l - r
    elif expr.op == "mul":
        out = l * r
    elif expr.op == "div":
        out = l / r
    else:  # pow
        rc = expr.right
        if (
            isinstance(rc, Const)
            and float(rc.value).is_integer()
            and abs(rc.value) <= _MAX_INT_POW
        ):
            out = _int_pow(l, int(rc.value))
        else:
            out = np.power(l, r)
    return _contain(out, l, r)


# ---------------------------------------------------------------- complexity


def complexity(expr: Expr) -> int:
    """Node count; identity is free but its argument still counts."""
    if isinstance(expr, Unary):
        inner = complexity(expr.arg)
        return inner if expr.op == "identity" else 1 + inner
    if isinstance(expr, Binary):
        return 1 + complexity(expr.left) + complexity(expr.right)
    return 1


# --------------------------------------------------------------- print/parse


def print_expr(expr: Expr, variable_names: Sequence[str] | None = None) -> str:
    """Fully parenthesised infix form; parse_expr inverts it exactly."""
    if isinstance(expr, Const):
        s = repr(expr.value)
        # a bare leading minus would rebind as unary minus under ^
        return f"({s})" if s.startswith("-") else s
    if isinstance(expr, Var):
        if variable_names is not None:
            return variable_names[expr.index]
        return f"x{expr.index + 1}"
    if isinstance(expr, Time):
        return "t"
    if isinstance(expr, Unary):
        return f"{expr.op}({print_expr(expr.arg, variable_names)})"
    left = print_expr(expr.left, variable_names)
    right = print_expr(expr.right, variable_names)
    return f"({left} {_BINARY_SYMBOL[expr.op]} {right})"


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            at = pos + len(text[pos:]) - len(text[pos:].lstrip())
            if at >= len(text):
                break
            raise ParseError(f"unexpected character {text[at]!r}", at)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent.  Precedence, tightest first: ^ (left-assoc),
    unary minus, * /, + - (all left-assoc)."""

    def __init__(self, text: str, variable_names: Sequence[str] | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = tuple(variable_names) if variable_names is not None else None

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value, pos = self.peek()
        if kind != "op" or value != symbol:
            raise ParseError(f"expected {symbol!r}", pos)
        self.next()

    def parse(self) -> Expr:
        e = self.sum()
        kind, value, pos = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {value!r}", pos)
        return e

    def sum(self) -> Expr:
        e = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("+", "-"):
                self.next()
                e = Binary(_SYMBOL_BINARY[value], e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.signed()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in ("*", "/"):
                self.next()
                e = Binary(_SYMBOL_BINARY[value], e, self.signed())
            else:
                return e

    def signed(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            inner = self.signed()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Binary("mul", Const(-1.0), inner)
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "^":
                self.next()
                e = Binary("pow", e, self.exponent())
            else:
                return e

    def exponent(self) -> Expr:
        # allow a signed literal or atom directly after ^
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            inner = self.exponent()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Binary("mul", Const(-1.0), inner)
        return self.atom()

    def atom(self) -> Expr:
        kind, value, pos = self.next()
        if kind == "num":
            return Const(float(value))
        if kind == "op" and value == "(":
            e = self.sum()
            self.expect_op(")")
            return e
        if kind == "name":
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in UNARY_OPS:
                    raise ParseError(f"unknown function {value!r}", pos)
                self.next()
                arg = self.sum()
                self.expect_op(")")
                return Unary(value, arg)
            return self.variable(value, pos)
        raise ParseError(
            f"expected expression, got {value!r}" if value else "expected expression",
            pos,
        )

    def variable(self, name: str, pos: int) -> Expr:
        if self.names is not None:
            if name in self.names:
                return Var(self.names.index(name))
            if name == "t":
                return Time()
            raise ParseError(f"unknown identifier {name!r}", pos)
        if name == "t":
            return Time()
        m = re.fullmatch(r"x(\d+)", name)
        if m and int(m.group(1)) >= 1:
            return Var(int(m.group(1)) - 1)
        raise ParseError(f"unknown identifier {name!r}", pos)


def parse_expr(text: str, variable_names: Sequence[str] | None = None) -> Expr:
    """Parse the infix syntax produced by print_expr.

    With variable_names given, bare identifiers resolve to their index in
    that sequence; otherwise x1, x2, ... map to Var(0), Var(1), ...  The
    name t is the time node unless shadowed by a variable name.
    """
    return _Parser(text, variable_names).parse()
