"""Generating-function expressions ``w(z)``: parsing, jet evaluation, holomorphy probes.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' INT)?
    unary  := '-'? atom
    atom   := 'z' | NUMBER | NUMBER 'eps' | '(' expr ')' | FUNC '(' expr ')'
    FUNC   := 'exp' | 'sin' | 'cos' | 'sinh' | 'cosh'

``eps`` is the unit of whichever algebra the expression is evaluated in.
Note that ``-z^2`` means ``(-z)^2``: the grammar binds unary minus tighter
than ``^``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from canonsurf.algebra import (
    ELEMENTARY_FUNCTIONS,
    AlgebraKind,
    TwoComponentNumber,
    elementary,
    mul,
    pow_int,
)
from canonsurf.errors import ExpressionError, SingularDivisor

MAX_DEPTH = 64
MAX_EXPONENT = 10_000


# --- AST ----------------------------------------------------------------------


class ExprNode:
    """Base class of expression tree nodes (immutable)."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(ExprNode):
    pass


@dataclass(frozen=True)
class Const(ExprNode):
    re: float
    im: float = 0.0


@dataclass(frozen=True)
class Neg(ExprNode):
    operand: ExprNode


@dataclass(frozen=True)
class Add(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class Sub(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class Mul(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class Div(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(frozen=True)
class PowInt(ExprNode):
    base: ExprNode
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("PowInt exponent must be >= 0")


@dataclass(frozen=True)
class Call(ExprNode):
    func: str
    arg: ExprNode

    def __post_init__(self):
        if self.func not in ELEMENTARY_FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


@dataclass(frozen=True)
class Conj(ExprNode):
    """Algebra conjugation ``re - eps*im``.

    Not part of the grammar and not holomorphic; it exists so tests can
    build deliberately non-holomorphic trees for the Cauchy-Riemann probe.
    """

    operand: ExprNode


_BINARY = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def to_source(node: ExprNode) -> str:
    """Fully parenthesized source text; ``parse(to_source(t)) == t`` for parsed trees."""
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Const):
        if node.im == 0:
            return _fmt_number(node.re)
        if node.re == 0:
            return f"{_fmt_number(node.im)}eps"
        return f"({_fmt_number(node.re)} + {_fmt_number(node.im)}eps)"
    if isinstance(node, Neg):
        return f"-({to_source(node.operand)})"
    if isinstance(node, PowInt):
        return f"({to_source(node.base)})^{node.n}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Conj):
        return f"conj({to_source(node.operand)})"
    op = _BINARY[type(node)]
    return f"({to_source(node.left)} {op} {to_source(node.right)})"


def _fmt_number(x: float) -> str:
    return repr(float(x))


def format_tree(node: ExprNode, indent: str = "") -> str:
    """Indented one-node-per-line rendering, used by the ``parse`` command."""
    if isinstance(node, Var):
        return f"{indent}Var(z)"
    if isinstance(node, Const):
        return f"{indent}Const({node.re!r}, {node.im!r})"
    if isinstance(node, PowInt):
        head, kids = f"PowInt(n={node.n})", [node.base]
    elif isinstance(node, Call):
        head, kids = f"Call({node.func})", [node.arg]
    elif isinstance(node, (Neg, Conj)):
        head, kids = type(node).__name__, [node.operand]
    else:
        head, kids = type(node).__name__, [node.left, node.right]
    lines = [f"{indent}{head}"]
    lines.extend(format_tree(k, indent + "  ") for k in kids)
    return "\n".join(lines)


# --- tokenizer / parser -----------------------------------------------------------

_NUMBER_RE = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?", re.ASCII)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*", re.ASCII)
_PUNCT = set("+-*/^()")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int  # character offset


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0
        self.depth = 0

    def _byte_offset(self, char_offset: int) -> int:
        return len(self.text[:char_offset].encode("utf-8", "surrogatepass"))

    def _error(self, message, kind, char_offset):
        return ExpressionError(message, kind, self._byte_offset(char_offset))

    def _tokenize(self, text):
        tokens = []
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch in " \t\r\n":
                i += 1
                continue
            if ch in _PUNCT:
                tokens.append(_Token("op", ch, i))
                i += 1
                continue
            m = _NUMBER_RE.match(text, i)
            if m:
                end = m.end()
                if end < n and (text[end] == "." or text[end].isdigit()):
                    raise self._error(f"malformed numeric literal {text[i:end + 1]!r}",
                                      "malformed-literal", i)
                if end < n and text[end] in "eE" and not text.startswith("eps", end):
                    raise self._error(f"incomplete exponent in literal {text[i:end + 1]!r}",
                                      "malformed-literal", i)
                tokens.append(_Token("num", m.group(), i))
                i = end
                continue
            m = _IDENT_RE.match(text, i)
            if m:
                tokens.append(_Token("ident", m.group(), i))
                i = m.end()
                continue
            raise self._error(f"unexpected character {ch!r}", "syntax", i)
        tokens.append(_Token("end", "", n))
        return tokens

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self._error(f"expected {op!r}, found {found}", "syntax", tok.offset)
        return self.advance()

    def parse(self) -> ExprNode:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise self._error(f"unexpected {tok.text!r}", "syntax", tok.offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            right = self.factor()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def factor(self):
        node = self.unary()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exp_tok = self.peek()
            if exp_tok.kind != "num" or not exp_tok.text.isascii() or not exp_tok.text.isdigit():
                raise self._error("exponent must be a non-negative integer literal",
                                  "syntax", exp_tok.offset)
            if int(exp_tok.text) > MAX_EXPONENT:
                raise self._error(f"exponent larger than {MAX_EXPONENT}",
                                  "malformed-literal", exp_tok.offset)
            self.advance()
            node = PowInt(node, int(exp_tok.text))
        return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.atom())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise self._error(f"numeric literal {tok.text!r} overflows",
                                  "malformed-literal", tok.offset)
            nxt = self.peek()
            if nxt.kind == "ident" and nxt.text == "eps":
                self.advance()
                return Const(0.0, value)
            return Const(value, 0.0)
        if tok.kind == "ident":
            if tok.text == "z":
                self.advance()
                return Var()
            if tok.text in ELEMENTARY_FUNCTIONS:
                self.advance()
                self.expect_op("(")
                arg = self._nested()
                self.expect_op(")")
                return Call(tok.text, arg)
            if tok.text == "eps":
                raise self._error("'eps' must follow a numeric literal, e.g. '1eps'",
                                  "syntax", tok.offset)
            raise self._error(f"unknown identifier {tok.text!r}",
                              "unknown-identifier", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self._nested()
            self.expect_op(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self._error(f"expected an operand, found {found}", "syntax", tok.offset)

    def _nested(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self._error(f"parentheses nested deeper than {MAX_DEPTH}",
                              "syntax", self.peek().offset)
        node = self.expr()
        self.depth -= 1
        return node


def parse(text) -> ExprNode:
    """Parse expression text (``str`` or UTF-8 ``bytes``) into an :class:`ExprNode`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExpressionError("input is not valid UTF-8", "syntax", exc.start) from None
    if not text.strip():
        raise ExpressionError("empty expression", "syntax", 0)
    return _Parser(text).parse()


# --- evaluation ---------------------------------------------------------------------


@dataclass(frozen=True)
class Jet:
    """Value of ``w`` and of its derivative ``dw/dz`` at a point."""

    value: TwoComponentNumber
    deriv: TwoComponentNumber


_DERIVATIVES = {
    "exp": lambda z: elementary("exp", z),
    "sin": lambda z: elementary("cos", z),
    "cos": lambda z: -elementary("sin", z),
    "sinh": lambda z: elementary("cosh", z),
    "cosh": lambda z: elementary("sinh", z),
}


class _DivisionGuard:
    """Collects points where a division would fail instead of raising."""

    def __init__(self, shape):
        self.ok = np.ones(shape, dtype=bool)

    def safe_divisor(self, den: TwoComponentNumber) -> TwoComponentNumber:
        bad = np.asarray(den.modulus_sq() == 0) | ~np.isfinite(den.re) | ~np.isfinite(den.im)
        if not bad.any():
            return den
        self.ok &= ~bad
        # placeholder 1 at failed points; those points are reported invalid
        return TwoComponentNumber(np.where(bad, 1.0, den.re), np.where(bad, 0.0, den.im), den.kind)


def _const(node: Const, z: TwoComponentNumber) -> TwoComponentNumber:
    zero = np.zeros(np.shape(z.re)) if np.ndim(z.re) else 0.0
    return TwoComponentNumber(zero + node.re, zero + node.im, z.kind)


def _jet(node, z, guard):
    if isinstance(node, Var):
        return Jet(z, _const(Const(1.0), z))
    if isinstance(node, Const):
        return Jet(_const(node, z), _const(Const(0.0), z))
    if isinstance(node, Neg):
        a = _jet(node.operand, z, guard)
        return Jet(-a.value, -a.deriv)
    if isinstance(node, (Add, Sub)):
        a, b = _jet(node.left, z, guard), _jet(node.right, z, guard)
        if isinstance(node, Add):
            return Jet(a.value + b.value, a.deriv + b.deriv)
        return Jet(a.value - b.value, a.deriv - b.deriv)
    if isinstance(node, Mul):
        a, b = _jet(node.left, z, guard), _jet(node.right, z, guard)
        return Jet(mul(a.value, b.value), mul(a.deriv, b.value) + mul(a.value, b.deriv))
    if isinstance(node, Div):
        a, b = _jet(node.left, z, guard), _jet(node.right, z, guard)
        den = b.value if guard is None else guard.safe_divisor(b.value)
        q = a.value / den
        return Jet(q, (a.deriv - mul(q, b.deriv)) / den)
    if isinstance(node, PowInt):
        a = _jet(node.base, z, guard)
        if node.n == 0:
            return Jet(_const(Const(1.0), z), _const(Const(0.0), z))
        return Jet(pow_int(a.value, node.n), node.n * mul(pow_int(a.value, node.n - 1), a.deriv))
    if isinstance(node, Call):
        a = _jet(node.arg, z, guard)
        return Jet(elementary(node.func, a.value), mul(_DERIVATIVES[node.func](a.value), a.deriv))
    if isinstance(node, Conj):
        raise ValueError("conjugation is not holomorphic; it has no complex derivative")
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet(ast: ExprNode, z: TwoComponentNumber) -> Jet:
    """Evaluate ``w(z)`` and ``w'(z)`` by forward propagation through the tree.

    Raises :class:`SingularDivisor` if any division hits a non-invertible
    element (for array-valued ``z``: at any point).
    """
    return _jet(ast, z, None)


def eval_jet_masked(ast: ExprNode, z: TwoComponentNumber) -> tuple[Jet, np.ndarray]:
    """Array-friendly :func:`eval_jet` returning ``(jet, ok)``.

    ``ok`` is False where a division was singular or a result is not finite;
    jet entries there are meaningless and must not be used.
    """
    guard = _DivisionGuard(np.shape(z.re))
    with np.errstate(over="ignore", invalid="ignore"):
        jet = _jet(ast, z, guard)
    ok = guard.ok.copy()
    for part in (jet.value.re, jet.value.im, jet.deriv.re, jet.deriv.im):
        ok &= np.isfinite(part)
    return jet, ok


def evaluate(ast: ExprNode, z: TwoComponentNumber) -> TwoComponentNumber:
    """Value only; unlike :func:`eval_jet` this also accepts :class:`Conj` nodes."""
    if isinstance(ast, Conj):
        return evaluate(ast.operand, z).conjugate()
    if isinstance(ast, Neg):
        return -evaluate(ast.operand, z)
    if isinstance(ast, (Add, Sub, Mul, Div)):
        a, b = evaluate(ast.left, z), evaluate(ast.right, z)
        return {Add: a.__add__, Sub: a.__sub__, Mul: a.__mul__, Div: a.__truediv__}[type(ast)](b)
    if isinstance(ast, PowInt):
        return pow_int(evaluate(ast.base, z), ast.n)
    if isinstance(ast, Call):
        return elementary(ast.func, evaluate(ast.arg, z))
    return _jet(ast, z, None).value


def cauchy_riemann_residual(ast: ExprNode, kind: AlgebraKind, probe, h: float = 1e-5) -> float:
    """Central-difference defect of the Cauchy-Riemann equations at ``probe``.

    With ``w = u + eps*v`` the equations are ``u_x = v_y`` and
    ``u_y = eps**2 * v_x`` (``-v_x`` circular, ``+v_x`` hyperbolic).
    Returns ``max(|u_x - v_y|, |u_y - eps**2 v_x|)``.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    x, y = (float(c) for c in probe)

    def w(px, py):
        return evaluate(ast, TwoComponentNumber(px, py, kind))

    try:
        wxp, wxm = w(x + h, y), w(x - h, y)
        wyp, wym = w(x, y + h), w(x, y - h)
    except SingularDivisor as exc:
        raise SingularDivisor(f"Cauchy-Riemann stencil at {probe}: {exc}",
                              exc.zero_divisor) from None
    u_x, v_x = (wxp.re - wxm.re) / (2 * h), (wxp.im - wxm.im) / (2 * h)
    u_y, v_y = (wyp.re - wym.re) / (2 * h), (wyp.im - wym.im) / (2 * h)
    s = kind.unit_square
    return float(max(abs(u_x - v_y), abs(u_y - s * v_x)))
