"""Integer-valued polynomial expressions.

Expressions are kept as small ASTs so that ground evaluation can enforce
exact division, while every comparison goes through a canonical polynomial
with rational coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from math import lcm
from typing import Mapping

from ..errors import NonIntegralDivision, UnboundVariable

# A monomial is a sorted tuple of (variable, exponent) pairs.
Monomial = tuple


def _mono_mul(a, b):
    exps = dict(a)
    for v, k in b:
        exps[v] = exps.get(v, 0) + k
    return tuple(sorted(exps.items()))


def _mono_order(m):
    return (-sum(k for _, k in m), m)


class Poly:
    """Immutable polynomial over Q with string-named variables."""

    __slots__ = ("terms", "_key")

    def __init__(self, terms=None):
        clean = {}
        for m, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[m] = c
        self.terms = clean
        self._key = None

    @staticmethod
    def const(c):
        return Poly({(): Fraction(c)})

    @staticmethod
    def var(name):
        return Poly({((name, 1),): Fraction(1)})

    @property
    def key(self):
        if self._key is None:
            self._key = tuple(sorted(self.terms.items(), key=lambda t: _mono_order(t[0])))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Poly({to_expr(self)})"

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def scale(self, c):
        return Poly({m: v * Fraction(c) for m, v in self.terms.items()})

    @property
    def variables(self):
        return frozenset(v for m in self.terms for v, _ in m)

    @property
    def degree(self):
        return max((sum(k for _, k in m) for m in self.terms), default=0)

    def is_const(self):
        return all(m == () for m in self.terms)

    def const_value(self):
        return self.terms.get((), Fraction(0))

    def denominator(self):
        return reduce(lcm, (c.denominator for c in self.terms.values()), 1)

    def evaluate(self, env):
        total = Fraction(0)
        for m, c in self.terms.items():
            t = c
            for v, k in m:
                if v not in env:
                    raise UnboundVariable(v)
                t *= Fraction(env[v]) ** k
            total += t
        return total

    def compose(self, mapping):
        """Simultaneously replace variables by polynomials."""
        total = Poly()
        for m, c in self.terms.items():
            t = Poly.const(c)
            for v, k in m:
                base = mapping.get(v)
                if base is None:
                    base = Poly.var(v)
                for _ in range(k):
                    t = t * base
            total = total + t
        return total

    def affine_in(self, v):
        """Return (a, rest) when self == a*v + rest with a a nonzero constant."""
        a = Fraction(0)
        rest = {}
        for m, c in self.terms.items():
            exps = dict(m)
            k = exps.get(v, 0)
            if k == 0:
                rest[m] = c
            elif k == 1 and len(m) == 1:
                a += c
            else:
                return None
        if a == 0:
            return None
        return a, Poly(rest)


class Expr:
    """Base class of expression nodes."""

    @cached_property
    def poly(self) -> Poly:
        return _to_poly(self)

    def __str__(self):
        return show_expr(self)

    # Structural equality is the dataclass one; canonical equality is
    # ``a.poly == b.poly``.


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: int


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    arg: Expr
    divisor: int

    def __post_init__(self):
        if self.divisor == 0:
            raise ZeroDivisionError("division by literal zero")


def _to_poly(e):
    if isinstance(e, Num):
        return Poly.const(e.value)
    if isinstance(e, Var):
        return Poly.var(e.name)
    if isinstance(e, Neg):
        return -e.arg.poly
    if isinstance(e, Add):
        return e.left.poly + e.right.poly
    if isinstance(e, Sub):
        return e.left.poly - e.right.poly
    if isinstance(e, Mul):
        return e.left.poly * e.right.poly
    if isinstance(e, Div):
        return e.arg.poly.scale(Fraction(1, e.divisor))
    raise TypeError(f"not an expression: {e!r}")


def _mono_expr(m):
    factors = [Var(v) for v, k in m for _ in range(k)]
    return reduce(Mul, factors) if factors else None


def to_expr(p: Poly) -> Expr:
    """Canonical AST for a polynomial: integer numerator over one divisor."""
    d = p.denominator()
    out = None
    for m, c in p.key:
        n = int(c * d)
        mono = _mono_expr(m)
        mag = abs(n)
        if mono is None:
            term = Num(mag)
        elif mag == 1:
            term = mono
        else:
            term = Mul(Num(mag), mono)
        if out is None:
            out = term if n > 0 else Neg(term)
        else:
            out = Add(out, term) if n > 0 else Sub(out, term)
    if out is None:
        out = Num(0)
    return Div(out, d) if d != 1 else out


def normalize_expr(e: Expr) -> Expr:
    return to_expr(e.poly)


def expr_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, (Neg, Div)):
        return expr_vars(e.arg)
    return expr_vars(e.left) | expr_vars(e.right)


def eval_expr(e: Expr, env: Mapping[str, int]) -> int:
    """Evaluate with exact integer division; raises NonIntegralDivision."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundVariable(e.name)
        return env[e.name]
    if isinstance(e, Neg):
        return -eval_expr(e.arg, env)
    if isinstance(e, Add):
        return eval_expr(e.left, env) + eval_expr(e.right, env)
    if isinstance(e, Sub):
        return eval_expr(e.left, env) - eval_expr(e.right, env)
    if isinstance(e, Mul):
        return eval_expr(e.left, env) * eval_expr(e.right, env)
    if isinstance(e, Div):
        v = eval_expr(e.arg, env)
        if v % e.divisor:
            raise NonIntegralDivision(f"{v} is not divisible by {e.divisor}")
        return v // e.divisor
    raise TypeError(f"not an expression: {e!r}")


def eval_rational(e: Expr, env) -> Fraction:
    return e.poly.evaluate(env)


def subst_expr(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions without normalizing."""
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(subst_expr(e.arg, mapping))
    if isinstance(e, Div):
        return Div(subst_expr(e.arg, mapping), e.divisor)
    return type(e)(subst_expr(e.left, mapping), subst_expr(e.right, mapping))


def const(n) -> Expr:
    return Num(n) if n >= 0 else Neg(Num(-n))


# --- printing -------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Neg: 3, Div: 3, Num: 4, Var: 4}


def show_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return str(e.value) if e.value >= 0 else f"-{-e.value}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, Div):
        if e.divisor < 0:
            return "-" + _wrap(Div(e.arg, -e.divisor), 3)
        return f"{_wrap(e.arg, 4)}/{e.divisor}"
    if isinstance(e, Add):
        return f"{_wrap(e.left, 1)} + {_wrap(e.right, 2)}"
    if isinstance(e, Sub):
        return f"{_wrap(e.left, 1)} - {_wrap(e.right, 2)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, 2)}*{_wrap(e.right, 3)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e, level):
    s = show_expr(e)
    if _PREC[type(e)] < level or (isinstance(e, Num) and e.value < 0 and level > 1):
        return f"({s})"
    return s
