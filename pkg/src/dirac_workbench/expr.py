"""Exact multivariate rational functions with a small expression front-end.

Values are quotients of sparse polynomials with rational coefficients over a
fixed, ordered :class:`SymbolTable`. Monomials are dense exponent tuples in
table order and are compared graded-lexicographically. No multivariate GCD is
attempted: a fraction is only simplified by integer content, common monomial
factors, and exact polynomial division when it happens to succeed, so two
equal values may carry different representations. Use ``==`` (which
cross-multiplies) to compare them.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("-" | "+") , unary | power ;
    power   = atom , [ ("^" | "**") , unary ] ;    (* right associative *)
    atom    = number | identifier | "(" , expr , ")" ;
    number  = digit , { digit } , [ "." , digit , { digit } ] ;

Exponents must fold to integer constants with ``|n| <= 64``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

MAX_EXPONENT = 64

KINDS = (
    "coordinate",
    "momentum",
    "multiplier",
    "multiplier-momentum",
    "parameter",
    "velocity",
    "arbitrary",
)


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UnknownSymbolError(ExprError):
    pass


class ExponentError(ExprError):
    pass


class ZeroDenominatorError(ExprError, ZeroDivisionError):
    pass


class UnboundSymbolError(ExprError):
    pass


# ---------------------------------------------------------------------------
# Symbol table


class SymbolTable:
    """Ordered, immutable set of named symbols with kind tags.

    ``pairs`` maps each momentum name to the coordinate (or multiplier) it is
    conjugate to, ``velocities`` maps a velocity name to its coordinate.
    """

    def __init__(self, entries, pairs=None, velocities=None):
        names = [name for name, _ in entries]
        if len(set(names)) != len(names):
            raise ExprError("symbol names must be unique")
        for name, kind in entries:
            if kind not in KINDS:
                raise ExprError(f"unknown symbol kind {kind!r} for {name!r}")
        self.names = tuple(names)
        self.kinds = {name: kind for name, kind in entries}
        self.index = {name: i for i, name in enumerate(self.names)}
        self.pairs = dict(pairs or {})
        self.velocities = dict(velocities or {})
        momenta = [n for n in names if self.kinds[n] in ("momentum", "multiplier-momentum")]
        for p in momenta:
            q = self.pairs.get(p)
            if q is None or q not in self.index:
                raise ExprError(f"momentum {p!r} is not paired with a declared coordinate")
        if len(set(self.pairs.values())) != len(self.pairs):
            raise ExprError("a coordinate is paired with more than one momentum")
        self._zero_monomial = (0,) * len(self.names)

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __contains__(self, name):
        return name in self.index

    def __repr__(self):
        return f"SymbolTable({list(self.names)!r})"

    def of_kind(self, *kinds):
        return [n for n in self.names if self.kinds[n] in kinds]

    def symbol(self, name) -> "RationalExpr":
        if name not in self.index:
            raise UnknownSymbolError(f"unknown symbol {name!r}")
        mono = [0] * len(self.names)
        mono[self.index[name]] = 1
        return RationalExpr(self, Poly({tuple(mono): Fraction(1)}), Poly.one(len(self.names)))

    def const(self, value) -> "RationalExpr":
        return RationalExpr.constant(self, value)

    def parse(self, text) -> "RationalExpr":
        """Parse and canonicalize in one go."""
        return canonicalize(parse(text, self), self)


# ---------------------------------------------------------------------------
# Polynomials


def grlex_key(mono):
    return (sum(mono), mono)


class Poly:
    """Sparse polynomial: ``{exponent tuple: Fraction}`` with no zero entries."""

    __slots__ = ("terms", "nvars", "_lead")

    def __init__(self, terms, nvars=None):
        self.terms = terms
        if nvars is None:
            nvars = len(next(iter(terms))) if terms else 0
        self.nvars = nvars
        self._lead = None

    @classmethod
    def zero(cls, nvars):
        return cls({}, nvars)

    @classmethod
    def one(cls, nvars):
        return cls({(0,) * nvars: Fraction(1)}, nvars)

    @classmethod
    def constant(cls, value, nvars):
        value = Fraction(value)
        if not value:
            return cls({}, nvars)
        return cls({(0,) * nvars: value}, nvars)

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        if not self.terms:
            return True
        return len(self.terms) == 1 and not any(next(iter(self.terms)))

    def constant_value(self):
        if not self.terms:
            return Fraction(0)
        return self.terms[(0,) * self.nvars]

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()}, self.nvars)

    def __add__(self, other):
        if len(other.terms) > len(self.terms):
            self, other = other, self
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v += c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Poly(out, self.nvars)

    def __sub__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = -c
            else:
                v -= c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Poly(out, self.nvars)

    def __mul__(self, other):
        if not self.terms or not other.terms:
            return Poly({}, self.nvars)
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple([a + b for a, b in zip(m1, m2)])
                v = out.get(m)
                if v is None:
                    out[m] = c1 * c2
                else:
                    v += c1 * c2
                    if v:
                        out[m] = v
                    else:
                        del out[m]
        return Poly(out, self.nvars)

    def scale(self, c):
        c = Fraction(c)
        if not c:
            return Poly({}, self.nvars)
        return Poly({m: v * c for m, v in self.terms.items()}, self.nvars)

    def mul_term(self, mono, c):
        return Poly(
            {tuple([a + b for a, b in zip(m, mono)]): v * c for m, v in self.terms.items()},
            self.nvars,
        )

    def __pow__(self, n):
        result = Poly.one(self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def lead(self):
        """Leading (monomial, coefficient) under graded-lex order."""
        if self._lead is None:
            m = max(self.terms, key=grlex_key)
            self._lead = (m, self.terms[m])
        return self._lead

    def degree(self, i=None):
        if not self.terms:
            return -1
        if i is None:
            return max(sum(m) for m in self.terms)
        return max(m[i] for m in self.terms)

    def variables(self):
        used = set()
        for m in self.terms:
            used.update(i for i, e in enumerate(m) if e)
        return used

    def diff(self, i):
        out = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                mm = list(m)
                mm[i] = e - 1
                out[tuple(mm)] = c * e
        return Poly(out, self.nvars)

    def coefficient_in(self, i, k):
        """Coefficient polynomial of ``v_i**k``."""
        out = {}
        for m, c in self.terms.items():
            if m[i] == k:
                mm = list(m)
                mm[i] = 0
                out[tuple(mm)] = c
        return Poly(out, self.nvars)

    def content(self):
        """Positive rational ``c`` such that ``self / c`` has coprime integer coefficients."""
        if not self.terms:
            return Fraction(1)
        num = 0
        den = 1
        for c in self.terms.values():
            num = math.gcd(num, c.numerator)
            den = den * c.denominator // math.gcd(den, c.denominator)
        return Fraction(num, den)

    def monomial_gcd(self):
        it = iter(self.terms)
        g = list(next(it))
        for m in it:
            g = [min(a, b) for a, b in zip(g, m)]
        return tuple(g)

    def div_monomial(self, mono):
        return Poly(
            {tuple([a - b for a, b in zip(m, mono)]): c for m, c in self.terms.items()},
            self.nvars,
        )

    def exact_div(self, other):
        """Return ``self / other`` if the division leaves no remainder, else ``None``."""
        if not other.terms:
            raise ZeroDenominatorError("polynomial division by zero")
        if not self.terms:
            return Poly({}, self.nvars)
        lm, lc = other.lead()
        rest = dict(self.terms)
        quot = {}
        while rest:
            m = max(rest, key=grlex_key)
            if any(a < b for a, b in zip(m, lm)):
                return None
            qm = tuple([a - b for a, b in zip(m, lm)])
            qc = rest[m] / lc
            quot[qm] = qc
            for om, oc in other.terms.items():
                t = tuple([a + b for a, b in zip(om, qm)])
                v = rest.get(t, 0) - oc * qc
                if v:
                    rest[t] = v
                else:
                    rest.pop(t, None)
        return Poly(quot, self.nvars)

    def evaluate(self, values):
        total = Fraction(0)
        for m, c in self.terms.items():
            t = c
            for v, e in zip(values, m):
                if e:
                    t *= v ** e
            total += t
        return total

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: grlex_key(mc[0]), reverse=True)


# ---------------------------------------------------------------------------
# Rational functions


Number = Union[int, Fraction]


class RationalExpr:
    """Canonical quotient ``num / den`` of polynomials over a symbol table.

    Immutable. Arithmetic accepts ints and Fractions as operands.
    """

    __slots__ = ("table", "num", "den")

    def __init__(self, table, num, den, _canonical=False):
        self.table = table
        if _canonical:
            self.num, self.den = num, den
        else:
            self.num, self.den = _normalize(num, den)

    @classmethod
    def constant(cls, table, value):
        n = len(table)
        return cls(table, Poly.constant(value, n), Poly.one(n), _canonical=True)

    @classmethod
    def from_poly(cls, table, poly):
        return cls(table, poly, Poly.one(len(table)))

    # -- coercion helpers
    def _coerce(self, other):
        if isinstance(other, RationalExpr):
            if other.table is not self.table:
                raise ExprError("expressions live over different symbol tables")
            return other
        if isinstance(other, (int, Fraction)):
            return RationalExpr.constant(self.table, other)
        return NotImplemented

    # -- predicates
    def is_zero(self):
        return not self.num

    def is_constant(self):
        return self.num.is_constant() and self.den.is_constant()

    def is_polynomial(self):
        return self.den.is_constant()

    def constant_value(self):
        if not self.is_constant():
            raise ExprError("expression is not constant")
        return self.num.constant_value() / self.den.constant_value()

    def free_symbols(self):
        used = self.num.variables() | self.den.variables()
        return [self.table.names[i] for i in sorted(used)]

    # -- arithmetic
    def __neg__(self):
        return RationalExpr(self.table, -self.num, self.den, _canonical=True)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            return RationalExpr(self.table, a + c, b)
        if d.is_constant():
            return RationalExpr(self.table, a + c * b.scale(1 / d.constant_value()), b)
        if b.is_constant():
            return RationalExpr(self.table, a * d.scale(1 / b.constant_value()) + c, d)
        k = b.exact_div(d)
        if k is not None:
            return RationalExpr(self.table, a + c * k, b)
        k = d.exact_div(b)
        if k is not None:
            return RationalExpr(self.table, a * k + c, d)
        return RationalExpr(self.table, a * d + c * b, b * d)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.num or not other.num:
            return RationalExpr.constant(self.table, 0)
        if self.den == other.num:
            return RationalExpr(self.table, self.num, other.den)
        if other.den == self.num:
            return RationalExpr(self.table, other.num, self.den)
        return RationalExpr(self.table, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            raise ZeroDenominatorError("division by an expression that is identically zero")
        return self * RationalExpr(self.table, other.den, other.num)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExponentError("exponent must be an integer")
        if abs(n) > MAX_EXPONENT:
            raise ExponentError(f"exponent {n} exceeds the limit of {MAX_EXPONENT}")
        if n < 0:
            if not self.num:
                raise ZeroDenominatorError("zero raised to a negative power")
            return RationalExpr(self.table, self.den ** -n, self.num ** -n)
        return RationalExpr(self.table, self.num ** n, self.den ** n)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.den == other.den:
            return self.num == other.num
        return self.num * other.den == other.num * self.den

    __hash__ = None

    def equals(self, other):
        return self == other

    # -- calculus
    def diff(self, name):
        if name not in self.table.index:
            raise UnknownSymbolError(f"unknown symbol {name!r}")
        i = self.table.index[name]
        dn = self.num.diff(i)
        if self.den.is_constant():
            return RationalExpr(self.table, dn, self.den)
        dd = self.den.diff(i)
        if not dd:
            return RationalExpr(self.table, dn, self.den)
        return RationalExpr(self.table, dn * self.den - self.num * dd, self.den * self.den)

    def evaluate(self, point):
        values = []
        used = self.num.variables() | self.den.variables()
        for i, name in enumerate(self.table.names):
            if i in used:
                if name not in point:
                    raise UnboundSymbolError(f"symbol {name!r} is not bound")
                values.append(Fraction(point[name]))
            else:
                values.append(Fraction(0))
        d = self.den.evaluate(values)
        if not d:
            raise ZeroDenominatorError("denominator vanishes at the evaluation point")
        return self.num.evaluate(values) / d

    def substitute(self, bindings):
        """Simultaneous substitution of whole symbols by expressions."""
        subs = {}
        for name, value in bindings.items():
            if name not in self.table.index:
                raise UnknownSymbolError(f"unknown symbol {name!r}")
            subs[self.table.index[name]] = self._coerce(value)
        if not subs:
            return self
        num = _substitute_poly(self.table, self.num, subs)
        den = _substitute_poly(self.table, self.den, subs)
        if den.is_zero():
            raise ZeroDenominatorError("substitution makes the denominator vanish")
        return num / den

    # -- output
    def to_text(self):
        num = _poly_text(self.num, self.table.names)
        if self.den.is_constant() and self.den.constant_value() == 1:
            return f"({num})"
        return f"({num})/({_poly_text(self.den, self.table.names)})"

    __str__ = to_text

    def __repr__(self):
        return f"RationalExpr({self.to_text()!r})"


def _normalize(num, den):
    if not den:
        raise ZeroDenominatorError("denominator is the zero polynomial")
    n = num.nvars
    if not num:
        return Poly({}, n), Poly.one(n)
    if den.is_constant():
        c = den.constant_value()
        num = num.scale(1 / c)
        den = Poly.one(n)
    else:
        q = num.exact_div(den)
        if q is not None:
            num, den = q, Poly.one(n)
        else:
            q = den.exact_div(num)
            if q is not None:
                num, den = Poly.one(n), q
            else:
                g = tuple(min(a, b) for a, b in zip(num.monomial_gcd(), den.monomial_gcd()))
                if any(g):
                    num, den = num.div_monomial(g), den.div_monomial(g)
    # clear rational coefficients, divide out the common integer content
    cn, cd = num.content(), den.content()
    g_num = math.gcd(cn.numerator, cd.numerator)
    l_den = cn.denominator * cd.denominator // math.gcd(cn.denominator, cd.denominator)
    factor = Fraction(l_den, g_num)
    if den.lead()[1] * factor < 0:
        factor = -factor
    if factor != 1:
        num, den = num.scale(factor), den.scale(factor)
    return num, den


def _substitute_poly(table, poly, subs):
    n = len(table)
    result = RationalExpr.constant(table, 0)
    powers = {}
    for m, c in poly.terms.items():
        keep = [0] * n
        term = RationalExpr.constant(table, c)
        for i, e in enumerate(m):
            if not e:
                continue
            if i in subs:
                key = (i, e)
                if key not in powers:
                    powers[key] = subs[i] ** e
                term = term * powers[key]
            else:
                keep[i] = e
        if any(keep):
            term = term * RationalExpr(table, Poly({tuple(keep): Fraction(1)}, n), Poly.one(n), _canonical=True)
        result = result + term
    return result


def _poly_text(poly, names):
    if not poly:
        return "0"
    parts = []
    for k, (m, c) in enumerate(poly.sorted_terms()):
        factors = []
        for name, e in zip(names, m):
            if e == 1:
                factors.append(name)
            elif e:
                factors.append(f"{name}^{e}")
        mag = abs(c)
        coeff = str(mag.numerator) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
        if not factors:
            body = coeff
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([coeff] + factors)
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------------------
# AST and parser


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


ExprAST = Union[Num, Sym, Neg, BinOp, Pow]

_OPERATORS = "+-*/^()"


def tokenize(text):
    """Split expression text into ``(kind, value, position)`` tokens."""
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < len(text) and text[i + 1].isdigit()):
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            if j < len(text) and text[j] == ".":
                j += 1
                while j < len(text) and text[j].isdigit():
                    j += 1
            tokens.append(("num", Fraction(text[i:j]), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append(("op", "^", i))
            i += 2
            continue
        if c in _OPERATORS:
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text, symbols):
        self.text = text
        self.symbols = symbols
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, v, at = self.advance()
        if v != value:
            found = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, found {found}", at)

    def parse(self):
        node = self.expr()
        kind, v, at = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {v!r}", at)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and v == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, v, at = self.peek()
        if kind == "op" and v == "^":
            self.advance()
            exp_at = self.peek()[2]
            exponent = _fold_exponent(self.unary(), exp_at)
            return Pow(base, exponent)
        return base

    def atom(self):
        kind, v, at = self.advance()
        if kind == "num":
            return Num(v)
        if kind == "name":
            if self.symbols is not None and v not in self.symbols:
                raise UnknownSymbolError(f"unknown symbol {v!r} (at position {at})")
            return Sym(v)
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", at)
        raise ParseError(f"unexpected token {v!r}", at)


def _fold_exponent(node, at):
    def fold(n):
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Neg):
            return -fold(n.operand)
        if isinstance(n, Pow):
            return fold(n.base) ** n.exponent
        if isinstance(n, BinOp):
            a, b = fold(n.left), fold(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            if not b:
                raise ExponentError(f"division by zero in exponent (at position {at})")
            return a / b
        raise ExponentError(f"non-integer exponent (at position {at})")

    value = fold(node)
    if value.denominator != 1:
        raise ExponentError(f"non-integer exponent {value} (at position {at})")
    if abs(value) > MAX_EXPONENT:
        raise ExponentError(f"exponent {value} exceeds the limit of {MAX_EXPONENT} (at position {at})")
    return int(value)


def parse(text, symbols=None):
    """Parse ``text`` into an AST, resolving names against ``symbols``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text, symbols).parse()


def canonicalize(ast, table):
    """Lower an AST into a canonical :class:`RationalExpr` over ``table``."""
    if isinstance(ast, Num):
        return RationalExpr.constant(table, ast.value)
    if isinstance(ast, Sym):
        return table.symbol(ast.name)
    if isinstance(ast, Neg):
        return -canonicalize(ast.operand, table)
    if isinstance(ast, Pow):
        return canonicalize(ast.base, table) ** ast.exponent
    if isinstance(ast, BinOp):
        left = canonicalize(ast.left, table)
        right = canonicalize(ast.right, table)
        if ast.op == "+":
            return left + right
        if ast.op == "-":
            return left - right
        if ast.op == "*":
            return left * right
        return left / right
    raise ExprError(f"not an expression node: {ast!r}")


# Thin functional aliases


def differentiate(e: RationalExpr, name: str) -> RationalExpr:
    return e.diff(name)


def substitute(e: RationalExpr, bindings: Mapping[str, object]) -> RationalExpr:
    return e.substitute(bindings)


def evaluate(e: RationalExpr, point: Mapping[str, Number]) -> Fraction:
    return e.evaluate(point)


def equals(a: RationalExpr, b: RationalExpr) -> bool:
    return a == b


def simple_table(names: Iterable[str], kind="parameter") -> SymbolTable:
    """Table of same-kind symbols; handy for tests and scratch work."""
    return SymbolTable([(n, kind) for n in names])
