"""Hypothesis strategies and random generators shared by the test modules."""
from __future__ import annotations

import random

from hypothesis import strategies as st

from dlp.core_model import formula as F
from dlp.core_model import program as P
from dlp.core_model.expr import Add, Div, Mul, Neg, Num, Sub, Var

VARS = ("x", "y", "z", "w")
PROG_VARS = ("x", "y", "z")


def exprs(names=VARS, max_leaves=12, division=True):
    leaves = st.one_of(st.integers(-9, 9).map(Num), st.sampled_from(names).map(Var))

    def extend(inner):
        parts = [
            inner.map(Neg),
            st.builds(Add, inner, inner),
            st.builds(Sub, inner, inner),
            st.builds(Mul, inner, inner),
        ]
        if division:
            parts.append(st.builds(Div, inner, st.sampled_from([1, 2, 3, -2])))
        return st.one_of(*parts)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def envs(names=VARS, lo=-50, hi=50):
    return st.fixed_dictionaries({n: st.integers(lo, hi) for n in names})


def atoms(names=VARS):
    return st.builds(F.Cmp, st.sampled_from(["=", "<", "<=", ">", ">="]),
                     exprs(names, 4, False), exprs(names, 4, False))


def plain_formulas(names=VARS):
    return st.recursive(
        atoms(names) | st.sampled_from([F.TRUE, F.FALSE]),
        lambda inner: st.one_of(inner.map(F.Not), st.builds(F.And, inner, inner),
                                st.builds(F.Or, inner, inner), st.builds(F.Imp, inner, inner)),
        max_leaves=5,
    )


# --- random programs (plain ``random`` so that bulk runs stay fast) -------------------

def rand_expr(rng: random.Random, depth=2, names=PROG_VARS, mul=True):
    if depth == 0 or rng.random() < 0.4:
        return Num(rng.randint(-3, 3)) if rng.random() < 0.4 else Var(rng.choice(names))
    op = rng.choice([Add, Sub, Mul] if mul else [Add, Sub])
    return op(rand_expr(rng, depth - 1, names, mul), rand_expr(rng, depth - 1, names, mul))


def rand_guard(rng, names=PROG_VARS):
    return F.Cmp(rng.choice(["=", "<", "<=", ">", ">="]), rand_expr(rng, 1, names), rand_expr(rng, 1, names))


def rand_wp(rng, depth=4, mul=True):
    """Random while program; ``mul=False`` keeps loops from squaring values."""
    if depth <= 1 or rng.random() < 0.3:
        return P.Assign(rng.choice(PROG_VARS), rand_expr(rng, mul=mul))
    kind = rng.choice(["seq", "if", "while"])
    if kind == "seq":
        return P.Seq(rand_wp(rng, depth - 1, mul), rand_wp(rng, depth - 1, mul))
    if kind == "if":
        return P.If(rand_guard(rng), rand_wp(rng, depth - 1, mul), rand_wp(rng, depth - 1, mul))
    return P.While(rand_guard(rng), rand_wp(rng, depth - 1, mul))


def rand_fodl(rng, depth=4):
    if depth <= 1 or rng.random() < 0.3:
        if rng.random() < 0.3:
            return P.Test(rand_guard(rng))
        return P.Assign(rng.choice(PROG_VARS), rand_expr(rng))
    kind = rng.choice(["seq", "choice", "star"])
    if kind == "seq":
        return P.Seq(rand_fodl(rng, depth - 1), rand_fodl(rng, depth - 1))
    if kind == "choice":
        return P.Choice(rand_fodl(rng, depth - 1), rand_fodl(rng, depth - 1))
    return P.Loop(rand_fodl(rng, depth - 1))


def rand_world(rng, lo=-5, hi=5):
    return {v: rng.randint(lo, hi) for v in PROG_VARS}


def rand_plain(rng, depth=3, names=PROG_VARS):
    """Random quantifier-free arithmetic formula over ``names``."""
    if depth == 0 or rng.random() < 0.35:
        return F.Cmp(rng.choice(["=", "<", "<=", ">", ">="]), rand_expr(rng, 2, names), rand_expr(rng, 2, names))
    kind = rng.choice(["not", "and", "or", "imp"])
    if kind == "not":
        return F.Not(rand_plain(rng, depth - 1, names))
    ctor = {"and": F.And, "or": F.Or, "imp": F.Imp}[kind]
    return ctor(rand_plain(rng, depth - 1, names), rand_plain(rng, depth - 1, names))
