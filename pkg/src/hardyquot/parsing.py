"""A small expression language for polynomials and product-form inner symbols.

Grammar (``^`` and ``**`` both mean power)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/')? unary)*    # juxtaposition as in ``2i`` or ``2z1``; '/' by constants only
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') INT)?
    atom   := NUMBER | NUMBER 'i' | 'i' | 'z' | 'zK' | 'b' '(' expr (',' VAR)? ')' | '(' expr ')'

``b(a)`` is the Blaschke factor ``(z - a)/(1 - conj(a) z)`` in ``z1`` (or in
the variable named by the optional second argument).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field


from .errors import ParseError
from .symbols import BlaschkeProduct, InnerSymbol, MPoly

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<var>z\d*)|(?P<name>[A-Za-z_]+)|(?P<op>\*\*|[-+*/^(),]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError("unexpected character", text, pos)
        kind = m.lastgroup
        out.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(Token("end", "", len(text)))
    return out


@dataclass
class Product:
    """``const * z^mono * prod_i B_i(z_i)``; ``factors`` maps variable -> list of zeros."""

    const: complex
    mono: tuple
    factors: dict = field(default_factory=dict)

    @property
    def is_polynomial(self) -> bool:
        return not any(self.factors.values())

    def to_mpoly(self, n) -> MPoly:
        return MPoly(n, {self.mono: self.const})


def _mul(a, b, n):
    if isinstance(a, Product) and isinstance(b, Product):
        f = {k: list(v) for k, v in a.factors.items()}
        for k, v in b.factors.items():
            f.setdefault(k, []).extend(v)
        return Product(a.const * b.const, tuple(x + y for x, y in zip(a.mono, b.mono)), f)
    return _poly(a, n) * _poly(b, n)


def _poly(v, n) -> MPoly:
    if isinstance(v, MPoly):
        return v
    if not v.is_polynomial:
        raise TypeError("Blaschke factors cannot be added")
    return v.to_mpoly(n)


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, self.text, tok.pos)

    def eat(self, text):
        if self.tok.text != text:
            self.error(f"expected {text!r}")
        self.i += 1

    def parse(self):
        v = self.expr()
        if self.tok.kind != "end":
            self.error("unexpected token")
        return v

    def expr(self):
        v = self.term()
        while self.tok.text in ("+", "-"):
            op = self.tok
            self.i += 1
            w = self.term()
            try:
                v = _poly(v, self.n) + _poly(w, self.n) if op.text == "+" else _poly(v, self.n) - _poly(w, self.n)
            except TypeError as e:
                self.error(str(e), op)
        return v

    def _starts_atom(self):
        t = self.tok
        return t.kind in ("num", "var", "name") or t.text == "("

    def term(self):
        v = self.unary()
        while self.tok.text in ("*", "/") or self._starts_atom():
            op = self.tok
            if op.text in ("*", "/"):
                self.i += 1
            w = self.unary()
            if op.text == "/":
                w = _poly(w, self.n)
                c = w[(0,) * self.n]
                if w.degree > 0 or c == 0:
                    self.error("can only divide by a nonzero constant", op)
                w = self.const(1 / c)
            v = _mul(v, w, self.n)
        return v

    def unary(self):
        if self.tok.text in ("-", "+"):
            neg = self.tok.text == "-"
            self.i += 1
            v = self.unary()
            return _mul(self.const(-1.0 if neg else 1.0), v, self.n)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text in ("^", "**"):
            self.i += 1
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                self.error("exponent must be a nonnegative integer")
            self.i += 1
            e = int(t.text)
            out = self.const(1.0)
            for _ in range(e):
                out = _mul(out, base, self.n)
            return out
        return base

    def const(self, c):
        return Product(complex(c), (0,) * self.n)

    def var_index(self, tok) -> int:
        name = tok.text
        if name == "z":
            return 0
        k = int(name[1:])
        if not 1 <= k <= self.n:
            self.error(f"variable {name} outside z1..z{self.n}", tok)
        return k - 1

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            if self.tok.kind == "name" and self.tok.text == "i" and self.tok.pos == t.pos + len(t.text):
                self.i += 1
                return self.const(1j * float(t.text))
            return self.const(float(t.text))
        if t.kind == "var":
            self.i += 1
            mono = [0] * self.n
            mono[self.var_index(t)] = 1
            return Product(1.0, tuple(mono))
        if t.kind == "name":
            if t.text == "i":
                self.i += 1
                return self.const(1j)
            if t.text == "b":
                self.i += 1
                self.eat("(")
                start = self.tok
                a = self.expr()
                a = _poly(a, self.n)
                if a.degree > 0:
                    self.error("Blaschke zero must be a constant", start)
                a = a[(0,) * self.n]
                var = 0
                if self.tok.text == ",":
                    self.i += 1
                    if self.tok.kind != "var":
                        self.error("expected a variable name")
                    var = self.var_index(self.tok)
                    self.i += 1
                self.eat(")")
                if abs(a) >= 1:
                    self.error(f"Blaschke zero {a} is not in the open disc", start)
                return Product(1.0, (0,) * self.n, {var: [complex(a)]})
            self.error(f"unknown name {t.text!r}")
        if t.text == "(":
            self.i += 1
            v = self.expr()
            self.eat(")")
            return v
        self.error("expected a number, variable, b(...) or '('")


def parse_expression(text: str, n: int):
    """Parse into an :class:`MPoly` or a :class:`Product` (if Blaschke factors occur)."""
    if not text or not text.strip():
        raise ParseError("empty expression", text or "", 0)
    return _Parser(text, n).parse()


def parse_polynomial(text: str, n: int) -> MPoly:
    v = parse_expression(text, n)
    if isinstance(v, Product) and not v.is_polynomial:
        raise ParseError("Blaschke factors are not polynomials", text, text.find("b"))
    return _poly(v, n)


def _as_product(v, text, n) -> Product:
    if isinstance(v, Product):
        return v
    terms = list(v.items())
    if len(terms) != 1:
        raise ParseError("inner symbols must be products (no sums)", text, 0)
    k, c = terms[0]
    return Product(c, k)


def parse_inner(text: str, n: int) -> InnerSymbol:
    """Product-form inner symbol ``c z^m prod B_i(z_i)`` with ``|c| = 1``."""
    p = _as_product(parse_expression(text, n), text, n)
    if abs(abs(p.const) - 1) > 1e-12:
        raise ParseError(f"constant {p.const} is not unimodular", text, 0)
    factors = {i: BlaschkeProduct(z) for i, z in p.factors.items() if z}
    return InnerSymbol(n, factors, p.mono, p.const)


def parse_blaschke(text: str) -> BlaschkeProduct:
    """One-variable finite Blaschke product written in ``z`` (or ``z1``)."""
    p = _as_product(parse_expression(text, 1), text, 1)
    if abs(abs(p.const) - 1) > 1e-12:
        raise ParseError(f"constant {p.const} is not unimodular", text, 0)
    zeros = [0j] * p.mono[0] + list(p.factors.get(0, []))
    return BlaschkeProduct(zeros, p.const)


def split_list(text: str, sep: str = ",") -> list:
    """Split on ``sep`` outside parentheses."""
    out, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            out.append(text[start:k])
            start = k + 1
    out.append(text[start:])
    return [s.strip() for s in out if s.strip()]


def parse_complex(text) -> complex:
    if isinstance(text, (int, float, complex)):
        return complex(text)
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    v = parse_expression(str(text), 1)
    p = _poly(v, 1)
    if p.degree > 0:
        raise ParseError("expected a complex constant", str(text), 0)
    return complex(p[(0,)])
