"""Concrete text syntax for terms; ``parser`` reads back everything printed here."""
from .expr import show_expr
from . import formula as F
from . import program as P
from .label import Store, StoreHeap, StoreSeq


def show_program(p, level=0):
    # levels: 0 choice, 1 seq, 2 postfix/atom
    if isinstance(p, P.Choice):
        s = f"{_choice_arm(p.left)} + {_choice_arm(p.right)}"
        return f"({s})" if level > 0 else s
    if isinstance(p, P.Seq):
        s = f"{show_program(p.first, 2)}; {show_program(p.second, 1)}"
        return f"({s})" if level > 1 else s
    if isinstance(p, P.Loop):
        if isinstance(p.body, (P.Loop, P.Test, P.If, P.While, P.Ter)):
            return show_program(p.body, 2) + "*"
        return f"({show_program(p.body)})*"
    if isinstance(p, P.Ter):
        return "ter"
    if isinstance(p, P.Assign):
        return f"{p.var} := {show_expr(p.expr)}"
    if isinstance(p, P.Alloc):
        return f"{p.var} := cons({show_expr(p.expr)})"
    if isinstance(p, P.Load):
        return f"{p.var} := [{show_expr(p.addr)}]"
    if isinstance(p, P.Mutate):
        return f"[{show_expr(p.addr)}] := {show_expr(p.value)}"
    if isinstance(p, P.Dispose):
        return f"dispose({show_expr(p.addr)})"
    if isinstance(p, P.If):
        return f"if {show_formula(p.cond)} then {show_program(p.then)} else {show_program(p.orelse)} end"
    if isinstance(p, P.While):
        return f"while {show_formula(p.cond)} do {show_program(p.body)} end"
    if isinstance(p, P.Test):
        if isinstance(p.cond, F.Bool):
            return f"{show_formula(p.cond)}?"
        return f"({show_formula(p.cond)})?"
    raise TypeError(p)


def _choice_arm(p):
    s = show_program(p, 1)
    if isinstance(p, (P.Assign, P.Alloc, P.Load, P.Mutate, P.Seq)) and not s.startswith("("):
        return f"({s})"
    return s


_FPREC = {F.Imp: 1, F.Or: 2, F.And: 3, F.Star: 4, F.Suf: 5}
_FOP = {F.Imp: "->", F.Or: "||", F.And: "&&", F.Star: "**", F.Suf: "Suf"}


def show_formula(f, level=0):
    if isinstance(f, F.Cmp):
        s = f"{show_expr(f.lhs)} {f.op} {show_expr(f.rhs)}"
        return f"({s})" if level > 6 else s
    if isinstance(f, F.PointsTo):
        s = f"{show_expr(f.addr)} |-> {show_expr(f.value)}"
        return f"({s})" if level > 6 else s
    if isinstance(f, F.Bool):
        return "true" if f.value else "false"
    if isinstance(f, F.Not):
        if isinstance(f.arg, (F.Cmp, F.PointsTo)):
            return f"!({show_formula(f.arg)})"
        return "!" + show_formula(f.arg, 6)
    if isinstance(f, F.First):
        return "first " + show_formula(f.arg, 6)
    if isinstance(f, F.Box):
        return f"[{show_program(f.prog)}]" + show_formula(f.body, 6)
    if isinstance(f, F.Dia):
        return f"<{show_program(f.prog)}>" + show_formula(f.body, 6)
    if type(f) in _FPREC:
        p = _FPREC[type(f)]
        if isinstance(f, F.Imp):
            s = f"{show_formula(f.left, p + 1)} -> {show_formula(f.right, p)}"
        else:
            s = f"{show_formula(f.left, p)} {_FOP[type(f)]} {show_formula(f.right, p + 1)}"
        return f"({s})" if level > p else s
    raise TypeError(f)


def show_label(lab):
    if isinstance(lab, Store):
        return "{" + ", ".join(f"{k} -> {show_expr(v)}" for k, v in lab.entries) + "}"
    if isinstance(lab, StoreSeq):
        return ".".join(show_label(s) for s in lab.stores)
    if isinstance(lab, StoreHeap):
        s = "{" + ", ".join(f"{k} -> {v}" for k, v in lab.store) + "}"
        h = "{" + ", ".join(f"{k} -> {v}" for k, v in lab.heap) + "}"
        return f"({s}, {h})"
    raise TypeError(lab)


def show_lf(lf):
    from .sequent import Labeled, Termination, Transition
    if isinstance(lf, Labeled):
        return f"{show_label(lf.label)} : {show_formula(lf.formula, 1)}"
    if isinstance(lf, Transition):
        return (f"trans [{show_program(lf.prog)}] {show_label(lf.label)} --> "
                f"[{show_program(lf.prog2)}] {show_label(lf.label2)}")
    if isinstance(lf, Termination):
        return f"term {show_label(lf.label)} [{show_program(lf.prog)}]"
    raise TypeError(lf)


def show_sequent(seq):
    left = ", ".join(show_lf(f) for f in seq.left)
    right = ", ".join(show_lf(f) for f in seq.right)
    return f"{left} |- {right}".strip()
