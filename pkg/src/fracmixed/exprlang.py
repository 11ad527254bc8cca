"""A small expression language for coefficient and boundary functions.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``*``/``/``, which bind tighter than ``+``/``-``; ``^`` is right associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | "pi" | VAR | FUNC "(" expr ")" | "(" expr ")"

Expressions are evaluated with numpy, so arrays are accepted wherever a
scalar is.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

from fracmixed.errors import ValidationError

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


# {{{ errors


class ExprError(ValidationError):
    def __init__(self, message: str, offset: int | None = None) -> None:
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}", stage="exprlang")


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifier(ExprError):
    pass


class EvalError(ExprError):
    pass


class UnsupportedDerivative(ExprError):
    pass


# }}}


# {{{ syntax tree


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Pi:
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: Node
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Bin:
    op: str
    left: Node
    right: Node
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: Node
    pos: int = field(default=-1, compare=False)


Node = Union[Num, Var, Pi, Neg, Bin, Call]


# }}}


# {{{ parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variable: str) -> None:
        self.tokens = _tokenize(src)
        self.i = 0
        self.variable = variable

    @property
    def tok(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def accept(self, *ops: str) -> tuple[str, str, int] | None:
        kind, text, pos = self.tok
        if kind == "op" and text in ops:
            self.i += 1
            return self.tokens[self.i - 1]
        return None

    def expect(self, op: str) -> None:
        if self.accept(op) is None:
            kind, text, pos = self.tok
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {op!r}, found {found}", pos)

    def expr(self) -> Node:
        node = self.term()
        while (t := self.accept("+", "-")) is not None:
            node = Bin(t[1], node, self.term(), pos=t[2])
        return node

    def term(self) -> Node:
        node = self.unary()
        while (t := self.accept("*", "/")) is not None:
            node = Bin(t[1], node, self.unary(), pos=t[2])
        return node

    def unary(self) -> Node:
        if (t := self.accept("-")) is not None:
            return Neg(self.unary(), pos=t[2])
        if self.accept("+") is not None:
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if (t := self.accept("^")) is not None:
            return Bin("^", base, self.unary(), pos=t[2])
        return base

    def primary(self) -> Node:
        kind, text, pos = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(text), pos=pos)
        if kind == "name":
            self.i += 1
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos=pos)
            if text == "pi":
                return Pi(pos=pos)
            if text == self.variable:
                return Var(text, pos=pos)
            raise UnknownIdentifier(f"unknown identifier {text!r}", pos)
        if self.accept("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"expected an operand, found {found}", pos)


def parse(src: str, variable: str = "t") -> Node:
    """Parse ``src`` into a syntax tree over the single variable ``variable``."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(src, variable)
    node = p.expr()
    kind, text, pos = p.tok
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {text!r}", pos)
    return node


# }}}


# {{{ evaluation


def _fail(msg: str, node: Node) -> EvalError:
    return EvalError(msg, node.pos if node.pos >= 0 else None)


def evaluate(node: Node, value: Any) -> Any:
    """Evaluate ``node`` with its variable bound to ``value`` (scalar or array)."""
    out = _eval(node, np.asarray(value, dtype=float))
    out = np.broadcast_to(out, np.shape(value)).astype(float)
    return float(out) if out.ndim == 0 else out


def _eval(node: Node, x: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return x
    if isinstance(node, Pi):
        return np.float64(math.pi)
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, Bin):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0):
                raise _fail("division by zero", node)
            return a / b
        if node.op == "^":
            a, b = np.broadcast_arrays(a, b)
            if np.any((a < 0) & (b != np.round(b))):
                raise _fail("negative base with non-integer exponent", node)
            if np.any((a == 0) & (b < 0)):
                raise _fail("zero raised to a negative power", node)
            with np.errstate(over="ignore"):
                return np.power(a, b)
        raise AssertionError(node.op)
    if isinstance(node, Call):
        a = _eval(node.arg, x)
        if node.fn == "log":
            if np.any(a <= 0):
                raise _fail("log of a non-positive value", node)
            return np.log(a)
        if node.fn == "sqrt":
            if np.any(a < 0):
                raise _fail("sqrt of a negative value", node)
            return np.sqrt(a)
        with np.errstate(over="ignore"):
            return getattr(np, node.fn)(a)
    raise TypeError(f"not an expression node: {node!r}")


# }}}


# {{{ differentiation


def is_constant(node: Node) -> bool:
    if isinstance(node, Var):
        return False
    if isinstance(node, (Num, Pi)):
        return True
    if isinstance(node, Neg):
        return is_constant(node.arg)
    if isinstance(node, Bin):
        return is_constant(node.left) and is_constant(node.right)
    return is_constant(node.arg)


def _num(v: float) -> Node:
    return Num(v) if v >= 0 else Neg(Num(-v))


def _const_value(node: Node) -> float | None:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return -node.arg.value
    return None


def _add(a: Node, b: Node) -> Node:
    if _const_value(a) == 0:
        return b
    if _const_value(b) == 0:
        return a
    if isinstance(b, Neg):
        return _sub(a, b.arg)
    return Bin("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if _const_value(b) == 0:
        return a
    if _const_value(a) == 0:
        return _neg(b)
    return Bin("-", a, b)


def _neg(a: Node) -> Node:
    if isinstance(a, Neg):
        return a.arg
    if _const_value(a) == 0:
        return Num(0.0)
    return Neg(a)


def _mul(a: Node, b: Node) -> Node:
    ca, cb = _const_value(a), _const_value(b)
    if ca == 0 or cb == 0:
        return Num(0.0)
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca is not None and cb is not None:
        return _num(ca * cb)
    if ca == -1:
        return _neg(b)
    if cb == -1:
        return _neg(a)
    return Bin("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if _const_value(a) == 0:
        return Num(0.0)
    if _const_value(b) == 1:
        return a
    return Bin("/", a, b)


def differentiate(node: Node) -> Node:
    """Symbolic derivative with respect to the expression's variable."""
    if isinstance(node, (Num, Pi)):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return _neg(differentiate(node.arg))
    if isinstance(node, Bin):
        u, v = node.left, node.right
        if node.op in "+-":
            du, dv = differentiate(u), differentiate(v)
            return _add(du, dv) if node.op == "+" else _sub(du, dv)
        if node.op == "*":
            return _add(_mul(differentiate(u), v), _mul(u, differentiate(v)))
        if node.op == "/":
            num = _sub(_mul(differentiate(u), v), _mul(u, differentiate(v)))
            return _div(num, Bin("^", v, Num(2.0)))
        if node.op == "^":
            if not is_constant(v):
                raise UnsupportedDerivative(
                    "exponent depends on the variable", node.pos if node.pos >= 0 else None
                )
            cv = _const_value(v)
            lowered = _num(cv - 1.0) if cv is not None else Bin("-", v, Num(1.0))
            power = u if cv == 2 else Bin("^", u, lowered)
            return _mul(_mul(v, power), differentiate(u))
    if isinstance(node, Call):
        a = node.arg
        da = differentiate(a)
        if node.fn == "exp":
            outer: Node = node
        elif node.fn == "log":
            return _div(da, a)
        elif node.fn == "sin":
            outer = Call("cos", a)
        elif node.fn == "cos":
            outer = Neg(Call("sin", a))
        elif node.fn == "sqrt":
            return _div(da, Bin("*", Num(2.0), node))
        else:
            raise AssertionError(node.fn)
        return _mul(outer, da)
    raise TypeError(f"not an expression node: {node!r}")


# }}}


# {{{ printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY = 3
_ATOM = 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(node: Node) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _UNARY
    return _ATOM


def _wrap(node: Node, min_prec: int) -> str:
    s = to_string(node)
    return f"({s})" if _prec(node) < min_prec else s


def to_string(node: Node) -> str:
    """Minimal-parenthesis rendering; ``parse(to_string(a)) == a``."""
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _UNARY)
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    p = _PREC[node.op]
    if node.op == "^":
        return f"{_wrap(node.left, _ATOM)}^{_wrap(node.right, _UNARY)}"
    return f"{_wrap(node.left, p)}{node.op}{_wrap(node.right, p + 1)}"


# }}}


class Expression:
    """A parsed expression in one variable, callable on scalars and arrays."""

    def __init__(self, source: str | Node, variable: str = "t") -> None:
        self.variable = variable
        self.ast = parse(source, variable) if isinstance(source, str) else source

    def __call__(self, value: Any) -> Any:
        return evaluate(self.ast, value)

    def derivative(self) -> Expression:
        return Expression(differentiate(self.ast), self.variable)

    def __str__(self) -> str:
        return to_string(self.ast)

    def __repr__(self) -> str:
        return f"Expression({str(self)!r}, variable={self.variable!r})"
