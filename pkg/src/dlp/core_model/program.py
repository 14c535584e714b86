"""Program terms shared by all instantiations."""
from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr, expr_vars


class Program:
    def __str__(self):
        from .printer import show_program
        return show_program(self)


@dataclass(frozen=True)
class Ter(Program):
    pass


TER = Ter()


@dataclass(frozen=True)
class Assign(Program):
    var: str
    expr: Expr


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class If(Program):
    cond: object
    then: Program
    orelse: Program


@dataclass(frozen=True)
class While(Program):
    cond: object
    body: Program


@dataclass(frozen=True)
class Test(Program):
    cond: object


@dataclass(frozen=True)
class Choice(Program):
    left: Program
    right: Program


@dataclass(frozen=True)
class Loop(Program):
    body: Program


@dataclass(frozen=True)
class Alloc(Program):
    var: str
    expr: Expr


@dataclass(frozen=True)
class Load(Program):
    var: str
    addr: Expr


@dataclass(frozen=True)
class Mutate(Program):
    addr: Expr
    value: Expr


@dataclass(frozen=True)
class Dispose(Program):
    addr: Expr


WP_KINDS = (Ter, Assign, Seq, If, While)
REGULAR_KINDS = (Ter, Assign, Seq, Test, Choice, Loop)
SL_KINDS = (Ter, Assign, Seq, Alloc, Load, Mutate, Dispose)


def seq_all(progs):
    progs = list(progs)
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = Seq(p, out)
    return out


def assigned_vars(p) -> frozenset:
    if isinstance(p, (Assign, Alloc, Load)):
        return frozenset([p.var])
    if isinstance(p, (Seq,)):
        return assigned_vars(p.first) | assigned_vars(p.second)
    if isinstance(p, Choice):
        return assigned_vars(p.left) | assigned_vars(p.right)
    if isinstance(p, If):
        return assigned_vars(p.then) | assigned_vars(p.orelse)
    if isinstance(p, (While, Loop)):
        return assigned_vars(p.body)
    return frozenset()


def program_vars(p) -> frozenset:
    """Every variable read or written by the program."""
    from .formula import formula_vars
    if isinstance(p, Ter):
        return frozenset()
    if isinstance(p, (Assign, Alloc)):
        return frozenset([p.var]) | expr_vars(p.expr)
    if isinstance(p, Load):
        return frozenset([p.var]) | expr_vars(p.addr)
    if isinstance(p, Mutate):
        return expr_vars(p.addr) | expr_vars(p.value)
    if isinstance(p, Dispose):
        return expr_vars(p.addr)
    if isinstance(p, Seq):
        return program_vars(p.first) | program_vars(p.second)
    if isinstance(p, Choice):
        return program_vars(p.left) | program_vars(p.right)
    if isinstance(p, If):
        return formula_vars(p.cond) | program_vars(p.then) | program_vars(p.orelse)
    if isinstance(p, While):
        return formula_vars(p.cond) | program_vars(p.body)
    if isinstance(p, Test):
        return formula_vars(p.cond)
    if isinstance(p, Loop):
        return program_vars(p.body)
    raise TypeError(p)


def map_program_exprs(p, fe, ff):
    """Rebuild ``p`` applying ``fe`` to expressions and ``ff`` to guards."""
    if isinstance(p, Ter):
        return p
    if isinstance(p, Assign):
        return Assign(p.var, fe(p.expr))
    if isinstance(p, Alloc):
        return Alloc(p.var, fe(p.expr))
    if isinstance(p, Load):
        return Load(p.var, fe(p.addr))
    if isinstance(p, Mutate):
        return Mutate(fe(p.addr), fe(p.value))
    if isinstance(p, Dispose):
        return Dispose(fe(p.addr))
    if isinstance(p, Seq):
        return Seq(map_program_exprs(p.first, fe, ff), map_program_exprs(p.second, fe, ff))
    if isinstance(p, Choice):
        return Choice(map_program_exprs(p.left, fe, ff), map_program_exprs(p.right, fe, ff))
    if isinstance(p, If):
        return If(ff(p.cond), map_program_exprs(p.then, fe, ff), map_program_exprs(p.orelse, fe, ff))
    if isinstance(p, While):
        return While(ff(p.cond), map_program_exprs(p.body, fe, ff))
    if isinstance(p, Test):
        return Test(ff(p.cond))
    if isinstance(p, Loop):
        return Loop(map_program_exprs(p.body, fe, ff))
    raise TypeError(p)


def program_size(p) -> int:
    if isinstance(p, (Seq, Choice)):
        a, b = (p.first, p.second) if isinstance(p, Seq) else (p.left, p.right)
        return 1 + program_size(a) + program_size(b)
    if isinstance(p, If):
        return 1 + program_size(p.then) + program_size(p.orelse)
    if isinstance(p, (While, Loop)):
        return 1 + program_size(p.body)
    return 1


def loops_of(p):
    """While and star sub-programs in preorder."""
    out = []

    def walk(q):
        if isinstance(q, (While, Loop)):
            out.append(q)
            walk(q.body)
        elif isinstance(q, Seq):
            walk(q.first)
            walk(q.second)
        elif isinstance(q, Choice):
            walk(q.left)
            walk(q.right)
        elif isinstance(q, If):
            walk(q.then)
            walk(q.orelse)

    walk(p)
    return out
