"""Exact symbolic expressions over rationals, state variables, and parameters.

The expression language is deliberately small: rational functions of the
declared symbols, extended with ln and exp.  Everything else (general powers,
trig, piecewise) is rejected at parse time.  Keeping the language rational
makes zero-testing and rank computations exact; ln/exp exist only because
logarithmic first integrals occur in practice, and their gradients fall back
into the rational subset.

Grammar accepted by :func:`parse_expr` (whitespace insignificant)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | atom ('^' integer)?
    atom    := number | identifier | identifier '(' expr ')' | '(' expr ')'

``-`` is left-associative, ``^`` binds tighter than unary minus, implicit
multiplication is not allowed, and the only recognized functions are ``ln``
and ``exp``.  Numbers are decimal integers; fractions are written ``p/q``
and fold to a single rational constant.

Construction goes through the smart constructors (:func:`add`, :func:`mul`,
...), which fold constants and remove neutral elements but perform no other
rewriting.  Semantic comparisons belong to :mod:`odeobs.poly`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

# Exact arithmetic substrate: always lowest terms, positive denominator.
Rational = Fraction

ExprLike = Union["Expr", int, Fraction]

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class ExprError(Exception):
    """Base class for expression-level failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonIntegerExponentError(ExprSyntaxError):
    def __init__(self, position: int):
        super().__init__("exponent must be an integer", position)


class UnknownSymbolError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unknown symbol {name!r}")
        self.name = name


class DivisionByZeroError(ExprError):
    """Division by zero while evaluating, at the recorded subexpression."""

    def __init__(self, subexpr: "Expr"):
        super().__init__(f"division by zero in {subexpr}")
        self.subexpr = subexpr


class TranscendentalNodeError(ExprError):
    """An operation restricted to the rational subset met ln/exp."""

    def __init__(self, subexpr: "Expr"):
        super().__init__(f"transcendental node {subexpr} not supported here")
        self.subexpr = subexpr


class DomainError(ExprError):
    """Float evaluation outside a function's domain (ln of non-positive)."""


@dataclass(frozen=True, slots=True)
class Symbol:
    """A named state variable or parameter."""

    name: str
    kind: str  # "state" | "parameter"

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"invalid symbol name {self.name!r}")
        if self.kind not in ("state", "parameter"):
            raise ValueError(f"invalid symbol kind {self.kind!r}")

    @property
    def sort_key(self) -> tuple:
        # states before parameters, then by name; deterministic everywhere
        return (0 if self.kind == "state" else 1, self.name)

    def __str__(self) -> str:
        return self.name


def state(name: str) -> Symbol:
    return Symbol(name, "state")


def param(name: str) -> Symbol:
    return Symbol(name, "parameter")


class Expr:
    """Immutable expression node; subclasses are the node kinds."""

    __slots__ = ()

    def __add__(self, other: ExprLike) -> "Expr":
        return add(self, as_expr(other))

    def __radd__(self, other: ExprLike) -> "Expr":
        return add(as_expr(other), self)

    def __sub__(self, other: ExprLike) -> "Expr":
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other: ExprLike) -> "Expr":
        return add(as_expr(other), neg(self))

    def __mul__(self, other: ExprLike) -> "Expr":
        return mul(self, as_expr(other))

    def __rmul__(self, other: ExprLike) -> "Expr":
        return mul(as_expr(other), self)

    def __truediv__(self, other: ExprLike) -> "Expr":
        return div(self, as_expr(other))

    def __rtruediv__(self, other: ExprLike) -> "Expr":
        return div(as_expr(other), self)

    def __pow__(self, exponent: int) -> "Expr":
        return pow_int(self, exponent)

    def __neg__(self) -> "Expr":
        return neg(self)

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: Fraction

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Sym(Expr):
    symbol: Symbol

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Add(Expr):
    terms: tuple  # >= 2 children, flattened

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    factors: tuple  # >= 2 children, flattened, sign hoisted

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Div(Expr):
    num: Expr
    den: Expr

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class PowInt(Expr):
    base: Expr
    exponent: int  # never 0 or 1

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Ln(Expr):
    arg: Expr

    def __str__(self) -> str:
        return to_str(self)


@dataclass(frozen=True, slots=True)
class Exp(Expr):
    arg: Expr

    def __str__(self) -> str:
        return to_str(self)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    raise TypeError(f"cannot coerce {value!r} to Expr")


def const(value) -> Const:
    return Const(Fraction(value))


def sym(symbol: Symbol) -> Sym:
    return Sym(symbol)


def add(*terms: ExprLike) -> Expr:
    """Sum with flattening, constant folding, and zero-term removal."""
    flat = []
    c = Fraction(0)
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
        elif isinstance(t, Const):
            c += t.value
        else:
            flat.append(t)
    if c != 0:
        flat.append(Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: ExprLike) -> Expr:
    """Product with flattening, constant folding, and sign hoisting.

    The net sign of Neg children and negative constants is pulled out front,
    so a Mul node never directly contains a Neg child or a negative constant.
    """
    flat = []
    c = Fraction(1)
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
        elif isinstance(f, Neg):
            c = -c
            stack.append(f.arg)
        elif isinstance(f, Const):
            c *= f.value
        else:
            flat.append(f)
    if c == 0:
        return ZERO
    core = flat
    if abs(c) != 1:
        core = [Const(abs(c))] + core
    if not core:
        return Const(c)
    result = core[0] if len(core) == 1 else Mul(tuple(core))
    return neg(result) if c < 0 else result


def neg(e: ExprLike) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def div(num: ExprLike, den: ExprLike) -> Expr:
    num, den = as_expr(num), as_expr(den)
    sign = 1
    if isinstance(num, Neg):
        sign, num = -sign, num.arg
    if isinstance(den, Neg):
        sign, den = -sign, den.arg
    if isinstance(num, Const) and num.value < 0:
        sign, num = -sign, Const(-num.value)
    if isinstance(den, Const) and den.value < 0:
        sign, den = -sign, Const(-den.value)
    if isinstance(den, Const) and den.value != 0:
        if isinstance(num, Const):
            v = num.value / den.value
            return Const(-v if sign < 0 else v)
        if den.value == 1:
            return neg(num) if sign < 0 else num
    if isinstance(num, Const) and num.value == 0 and not (
        isinstance(den, Const) and den.value == 0
    ):
        return ZERO
    result = Div(num, den)
    return Neg(result) if sign < 0 else result


def pow_int(base: ExprLike, exponent: int) -> Expr:
    base = as_expr(base)
    if not isinstance(exponent, int):
        raise NonIntegerExponentError(0)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and not (base.value == 0 and exponent < 0):
        return Const(base.value**exponent)
    if isinstance(base, Neg):
        inner = pow_int(base.arg, exponent)
        return inner if exponent % 2 == 0 else neg(inner)
    if isinstance(base, PowInt):
        return pow_int(base.base, base.exponent * exponent)
    return PowInt(base, exponent)


def ln(arg: ExprLike) -> Expr:
    return Ln(as_expr(arg))


def exp(arg: ExprLike) -> Expr:
    return Exp(as_expr(arg))


def children(e: Expr) -> tuple:
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, PowInt):
        return (e.base,)
    if isinstance(e, (Ln, Exp)):
        return (e.arg,)
    return ()


def free_symbols(e: Expr) -> frozenset:
    """All symbols occurring structurally in the expression."""
    found = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Sym):
            found.add(node.symbol)
        else:
            stack.extend(children(node))
    return frozenset(found)


def contains_transcendental(e: Expr) -> bool:
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, (Ln, Exp)):
            return True
        stack.extend(children(node))
    return False


def diff(e: Expr, v: Symbol) -> Expr:
    """Partial derivative with respect to ``v``, structurally simplified."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.symbol == v else ZERO
    if isinstance(e, Add):
        return add(*[diff(t, v) for t in e.terms])
    if isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.factors):
            d = diff(f, v)
            if isinstance(d, Const) and d.value == 0:
                continue
            terms.append(mul(*e.factors[:i], d, *e.factors[i + 1 :]))
        return add(*terms)
    if isinstance(e, Neg):
        return neg(diff(e.arg, v))
    if isinstance(e, Div):
        dn, dd = diff(e.num, v), diff(e.den, v)
        if isinstance(dd, Const) and dd.value == 0:
            return div(dn, e.den)
        return div(add(mul(dn, e.den), neg(mul(e.num, dd))), pow_int(e.den, 2))
    if isinstance(e, PowInt):
        return mul(Const(Fraction(e.exponent)), pow_int(e.base, e.exponent - 1), diff(e.base, v))
    if isinstance(e, Ln):
        return div(diff(e.arg, v), e.arg)
    if isinstance(e, Exp):
        return mul(e, diff(e.arg, v))
    raise TypeError(f"unhandled node {e!r}")


def substitute(e: Expr, bindings: Mapping[Symbol, Expr]) -> Expr:
    """Simultaneous substitution; replacement expressions are not re-visited."""
    if not bindings:
        return e
    if isinstance(e, (Const,)):
        return e
    if isinstance(e, Sym):
        return bindings.get(e.symbol, e)
    if isinstance(e, Add):
        return add(*[substitute(t, bindings) for t in e.terms])
    if isinstance(e, Mul):
        return mul(*[substitute(f, bindings) for f in e.factors])
    if isinstance(e, Neg):
        return neg(substitute(e.arg, bindings))
    if isinstance(e, Div):
        return div(substitute(e.num, bindings), substitute(e.den, bindings))
    if isinstance(e, PowInt):
        return pow_int(substitute(e.base, bindings), e.exponent)
    if isinstance(e, Ln):
        return ln(substitute(e.arg, bindings))
    if isinstance(e, Exp):
        return exp(substitute(e.arg, bindings))
    raise TypeError(f"unhandled node {e!r}")


def eval_exact(e: Expr, point: Mapping[Symbol, Fraction]) -> Fraction:
    """Exact rational evaluation; rejects ln/exp nodes."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Sym):
        try:
            return Fraction(point[e.symbol])
        except KeyError:
            raise UnknownSymbolError(e.symbol.name) from None
    if isinstance(e, Add):
        total = Fraction(0)
        for t in e.terms:
            total += eval_exact(t, point)
        return total
    if isinstance(e, Mul):
        total = Fraction(1)
        for f in e.factors:
            total *= eval_exact(f, point)
        return total
    if isinstance(e, Neg):
        return -eval_exact(e.arg, point)
    if isinstance(e, Div):
        d = eval_exact(e.den, point)
        if d == 0:
            raise DivisionByZeroError(e)
        return eval_exact(e.num, point) / d
    if isinstance(e, PowInt):
        b = eval_exact(e.base, point)
        if b == 0 and e.exponent < 0:
            raise DivisionByZeroError(e)
        return b**e.exponent
    if isinstance(e, (Ln, Exp)):
        raise TranscendentalNodeError(e)
    raise TypeError(f"unhandled node {e!r}")


def eval_float(e: Expr, point: Mapping[Symbol, float]) -> float:
    """IEEE double evaluation; ln requires a positive argument."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return float(point[e.symbol])
        except KeyError:
            raise UnknownSymbolError(e.symbol.name) from None
    if isinstance(e, Add):
        return math.fsum(eval_float(t, point) for t in e.terms)
    if isinstance(e, Mul):
        total = 1.0
        for f in e.factors:
            total *= eval_float(f, point)
        return total
    if isinstance(e, Neg):
        return -eval_float(e.arg, point)
    if isinstance(e, Div):
        d = eval_float(e.den, point)
        if d == 0.0:
            raise DivisionByZeroError(e)
        return eval_float(e.num, point) / d
    if isinstance(e, PowInt):
        b = eval_float(e.base, point)
        if b == 0.0 and e.exponent < 0:
            raise DivisionByZeroError(e)
        return b**e.exponent
    if isinstance(e, Ln):
        a = eval_float(e.arg, point)
        if a <= 0.0:
            raise DomainError(f"ln of non-positive value {a}")
        return math.log(a)
    if isinstance(e, Exp):
        return math.exp(eval_float(e.arg, point))
    raise TypeError(f"unhandled node {e!r}")


# ---------------------------------------------------------------------------
# printing


def _paren(s: str) -> str:
    return "(" + s + ")"


def to_str(e: Expr) -> str:
    """Render an expression so that parsing the result rebuilds it exactly."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Sym):
        return e.symbol.name
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            if isinstance(t, Neg):
                body = to_str(t.arg)
                if isinstance(t.arg, Add):
                    body = _paren(body)
                parts.append(("-" if i == 0 else " - ") + body)
            elif isinstance(t, Const) and t.value < 0:
                parts.append(("-" if i == 0 else " - ") + str(-t.value))
            else:
                parts.append(("" if i == 0 else " + ") + to_str(t))
        return "".join(parts)
    if isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            s = to_str(f)
            if isinstance(f, (Add, Neg)) or (isinstance(f, Div) and i > 0):
                s = _paren(s)
            parts.append(s)
        return "*".join(parts)
    if isinstance(e, Neg):
        body = to_str(e.arg)
        if isinstance(e.arg, Add):
            body = _paren(body)
        return "-" + body
    if isinstance(e, Div):
        num = to_str(e.num)
        if isinstance(e.num, Add) or (isinstance(e.num, Const) and e.num.value < 0):
            num = _paren(num)
        den = to_str(e.den)
        if isinstance(e.den, (Add, Mul, Div, Neg)) or (
            isinstance(e.den, Const) and (e.den.value < 0 or e.den.value.denominator != 1)
        ):
            den = _paren(den)
        return num + "/" + den
    if isinstance(e, PowInt):
        base = to_str(e.base)
        simple = isinstance(e.base, (Sym, Ln, Exp)) or (
            isinstance(e.base, Const)
            and e.base.value >= 0
            and e.base.value.denominator == 1
        )
        if not simple:
            base = _paren(base)
        return f"{base}^{e.exponent}"
    if isinstance(e, Ln):
        return "ln" + _paren(to_str(e.arg))
    if isinstance(e, Exp):
        return "exp" + _paren(to_str(e.arg))
    raise TypeError(f"unhandled node {e!r}")


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<float>\d+\.\d*|\.\d+)"
    r"|(?P<int>\d+)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list, symbols: Mapping[str, Symbol]):
        self.tokens = tokens
        self.i = 0
        self.symbols = symbols

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.text != op:
            raise ExprSyntaxError(f"expected {op!r}", tok.pos)

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = add(e, rhs) if op == "+" else add(e, neg(rhs))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return neg(self.factor())
        a = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return pow_int(a, self.exponent())
        return a

    def exponent(self) -> int:
        sign = 1
        tok = self.advance()
        if tok.kind == "op" and tok.text == "-":
            sign = -1
            tok = self.advance()
        if tok.kind == "float":
            raise NonIntegerExponentError(tok.pos)
        if tok.kind != "int":
            raise ExprSyntaxError("expected integer exponent", tok.pos)
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "op" and tok.text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if tok.kind == "int":
            return Const(Fraction(int(tok.text)))
        if tok.kind == "float":
            raise ExprSyntaxError(
                "decimal literals are not supported; write a fraction p/q", tok.pos
            )
        if tok.kind == "name":
            nxt = self.peek()
            if tok.text in ("ln", "exp") and nxt.kind == "op" and nxt.text == "(":
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return ln(arg) if tok.text == "ln" else exp(arg)
            if tok.text not in self.symbols:
                raise UnknownSymbolError(tok.text)
            return Sym(self.symbols[tok.text])
        raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.pos)


def parse_expr(text: str, symbols) -> Expr:
    """Parse ``text`` against a symbol table.

    ``symbols`` is either a mapping from name to :class:`Symbol` or an
    iterable of symbols.  Every identifier in the text must be declared.
    """
    if not isinstance(symbols, Mapping):
        symbols = {s.name: s for s in symbols}
    parser = _Parser(_tokenize(text), symbols)
    e = parser.expr()
    tail = parser.peek()
    if tail.kind != "eof":
        raise ExprSyntaxError(f"unexpected trailing input {tail.text!r}", tail.pos)
    return e
