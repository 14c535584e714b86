"""Unlabeled formulas: arithmetic atoms, boolean connectives, modalities,
temporal path operators and separating conjunction."""
from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr, expr_vars
from .program import Program, map_program_exprs, program_vars, assigned_vars


class Formula:
    def __str__(self):
        from .printer import show_formula
        return show_formula(self)


CMP_OPS = ("=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cmp(Formula):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Bool(Formula):
    value: bool


TRUE = Bool(True)
FALSE = Bool(False)


@dataclass(frozen=True)
class PointsTo(Formula):
    addr: Expr
    value: Expr


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    prog: Program
    body: Formula


@dataclass(frozen=True)
class Dia(Formula):
    prog: Program
    body: Formula


@dataclass(frozen=True)
class First(Formula):
    arg: Formula


@dataclass(frozen=True)
class Suf(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Star(Formula):
    """Separating conjunction."""
    left: Formula
    right: Formula


BINARY = (And, Or, Imp, Suf, Star)


def next_(f):
    return Suf(FALSE, f)


def eventually(f):
    return Or(f, Suf(TRUE, f))


def conj(fs):
    fs = list(fs)
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs):
    fs = list(fs)
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def is_dynamic(f) -> bool:
    if isinstance(f, (Box, Dia)):
        return True
    if isinstance(f, (Not, First)):
        return is_dynamic(f.arg)
    if isinstance(f, BINARY):
        return is_dynamic(f.left) or is_dynamic(f.right)
    return False


def connectives(f) -> set:
    """Names of the node types used in ``f`` (including nested programs' guards)."""
    out = {type(f).__name__}
    if isinstance(f, (Not, First)):
        out |= connectives(f.arg)
    elif isinstance(f, BINARY):
        out |= connectives(f.left) | connectives(f.right)
    elif isinstance(f, (Box, Dia)):
        out |= connectives(f.body)
    return out


def formula_vars(f) -> frozenset:
    if isinstance(f, Cmp):
        return expr_vars(f.lhs) | expr_vars(f.rhs)
    if isinstance(f, PointsTo):
        return expr_vars(f.addr) | expr_vars(f.value)
    if isinstance(f, Bool):
        return frozenset()
    if isinstance(f, (Not, First)):
        return formula_vars(f.arg)
    if isinstance(f, BINARY):
        return formula_vars(f.left) | formula_vars(f.right)
    if isinstance(f, (Box, Dia)):
        return program_vars(f.prog) | formula_vars(f.body)
    raise TypeError(f)


def formula_assigned(f) -> frozenset:
    """Variables written by programs occurring in ``f``."""
    if isinstance(f, (Box, Dia)):
        return assigned_vars(f.prog) | formula_assigned(f.body)
    if isinstance(f, (Not, First)):
        return formula_assigned(f.arg)
    if isinstance(f, BINARY):
        return formula_assigned(f.left) | formula_assigned(f.right)
    return frozenset()


def map_formula_exprs(f, fe):
    """Apply ``fe`` to every expression, including those inside programs."""
    if isinstance(f, Cmp):
        return Cmp(f.op, fe(f.lhs), fe(f.rhs))
    if isinstance(f, PointsTo):
        return PointsTo(fe(f.addr), fe(f.value))
    if isinstance(f, Bool):
        return f
    if isinstance(f, (Not, First)):
        return type(f)(map_formula_exprs(f.arg, fe))
    if isinstance(f, BINARY):
        return type(f)(map_formula_exprs(f.left, fe), map_formula_exprs(f.right, fe))
    if isinstance(f, (Box, Dia)):
        prog = map_program_exprs(f.prog, fe, lambda g: map_formula_exprs(g, fe))
        return type(f)(prog, map_formula_exprs(f.body, fe))
    raise TypeError(f)


def negate(f):
    """Syntactic negation that strips a leading negation."""
    return f.arg if isinstance(f, Not) else Not(f)
