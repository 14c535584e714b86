"""Instantiation packs and the symbolic one-step transition relation.

A pack fixes the program constructs, the label kind and the formula
connectives that are meaningful for it.  ``step`` enumerates every
transition derivable from the context, discharging guards with the oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core_model import formula as F
from ..core_model import program as P
from ..core_model.canon import canon
from ..core_model.expr import const, eval_expr
from ..core_model.label import Store, StoreHeap, StoreSeq, config_update
from ..core_model.sequent import Labeled, lf_dynamic
from ..errors import KindMismatch

DEFAULT_ALLOC_BASE = 37

_BASE_CONNECTIVES = {"Cmp", "Bool", "Not", "And", "Or", "Imp", "Box", "Dia"}


@dataclass(frozen=True)
class Successor:
    prog: object
    label: object
    guards: tuple = ()
    rule: str = ""

    def __str__(self):
        return f"({self.prog}, {self.label})"


@dataclass(frozen=True)
class StepResult:
    successors: tuple
    undecided: tuple = ()

    @property
    def exhaustive(self) -> bool:
        return not self.undecided

    @property
    def undecided_guard(self):
        return self.undecided[0] if self.undecided else None


@dataclass(frozen=True)
class Instantiation:
    name: str
    program_kinds: tuple
    label_kind: type
    connectives: frozenset
    alloc_base: int = DEFAULT_ALLOC_BASE
    description: str = field(default="", compare=False)

    # -- validation
    def check_program(self, p):
        if not isinstance(p, self.program_kinds):
            raise KindMismatch(f"{type(p).__name__} is not a {self.name} program construct")
        for child in _children(p):
            if isinstance(child, P.Program):
                self.check_program(child)
            else:
                self.check_formula(child, guard=True)

    def check_formula(self, f, guard=False):
        used = F.connectives(f)
        extra = used - self.connectives
        if extra:
            raise KindMismatch(f"connective {sorted(extra)[0]} is not available in {self.name}")
        if guard and F.is_dynamic(f):
            raise KindMismatch("program guards must not contain modalities")
        _walk_programs(f, self.check_program)

    def check_label(self, label):
        if not isinstance(label, self.label_kind):
            raise KindMismatch(f"{self.name} expects {self.label_kind.__name__} labels, "
                               f"got {type(label).__name__}")

    # -- label hooks
    def guard_label(self, label):
        """The label under which a guard of the current state is read."""
        if isinstance(label, StoreSeq):
            return StoreSeq((label.last,))
        return label

    def assign(self, label, x, e):
        if isinstance(label, Store):
            return config_update(label, x, e)
        if isinstance(label, StoreSeq):
            return label.extend(config_update(label.last, x, e))
        if isinstance(label, StoreHeap):
            s = label.s
            s[x] = _sl_eval(label, e)
            return StoreHeap.of(s, label.h)
        raise KindMismatch(type(label).__name__)


def _sl_eval(label, e):
    return eval_expr(e, label.s)


def _children(p):
    if isinstance(p, P.Seq):
        return [p.first, p.second]
    if isinstance(p, P.Choice):
        return [p.left, p.right]
    if isinstance(p, P.If):
        return [p.cond, p.then, p.orelse]
    if isinstance(p, P.While):
        return [p.cond, p.body]
    if isinstance(p, P.Test):
        return [p.cond]
    if isinstance(p, P.Loop):
        return [p.body]
    return []


def _walk_programs(f, fn):
    if isinstance(f, (F.Box, F.Dia)):
        fn(f.prog)
        _walk_programs(f.body, fn)
    elif isinstance(f, (F.Not, F.First)):
        _walk_programs(f.arg, fn)
    elif isinstance(f, F.BINARY):
        _walk_programs(f.left, fn)
        _walk_programs(f.right, fn)


WP = Instantiation("wp", P.WP_KINDS, Store, frozenset(_BASE_CONNECTIVES),
                   description="while programs")
FODL = Instantiation("fodl", P.REGULAR_KINDS, Store, frozenset(_BASE_CONNECTIVES),
                     description="regular programs")
PL = Instantiation("pl", P.REGULAR_KINDS, StoreSeq,
                   frozenset(_BASE_CONNECTIVES | {"First", "Suf"}),
                   description="regular programs with path formulas")
SL = Instantiation("sl", P.SL_KINDS, StoreHeap,
                   frozenset(_BASE_CONNECTIVES | {"PointsTo", "Star"}),
                   description="heap-manipulating programs")

PACKS = {i.name: i for i in (WP, FODL, PL, SL)}


def get_instantiation(name, alloc_base=None) -> Instantiation:
    try:
        inst = PACKS[name]
    except KeyError:
        raise KindMismatch(f"unknown instantiation {name!r}") from None
    if alloc_base is not None and inst.name == "sl":
        from dataclasses import replace
        inst = replace(inst, alloc_base=alloc_base)
    return inst


# --- symbolic step -------------------------------------------------------------

class _Ctx:
    def __init__(self, inst, oracle):
        self.inst = inst
        self.oracle = oracle
        self.undecided = []

    def decide(self, hyps, label, cond):
        """(holds, fails) for the guard under the hypotheses."""
        gl = self.inst.guard_label(label)
        pos = Labeled(gl, cond)
        neg = Labeled(gl, F.negate(cond))
        yes = self.oracle.entails(hyps, pos)
        no = self.oracle.entails(hyps, neg)
        if not yes and not no:
            self.undecided.append(pos)
        return (pos if yes else None), (neg if no else None)


def step(inst: Instantiation, gamma, prog, label, oracle=None) -> StepResult:
    """All transitions of ``(prog, label)`` derivable from the context ``gamma``."""
    from ..oracle import Oracle
    inst.check_label(label)
    if isinstance(prog, P.Ter):
        return StepResult(())
    inst.check_program(prog)
    oracle = oracle or Oracle.from_spec()
    hyps = [lf for lf in gamma if isinstance(lf, Labeled) and not lf_dynamic(lf)]
    ctx = _Ctx(inst, oracle)
    succ = _step(ctx, prog, label, hyps)
    # keep the first occurrence of each successor
    seen, out = set(), []
    for s in succ:
        key = (canon(s.prog), canon(s.label))
        if key not in seen:
            seen.add(key)
            out.append(s)
    undecided = []
    for g in ctx.undecided:
        if g not in undecided:
            undecided.append(g)
    return StepResult(tuple(out), tuple(undecided))


def _step(ctx, p, label, hyps):
    inst = ctx.inst
    if isinstance(p, P.Ter):
        return []
    if isinstance(p, P.Assign):
        return [Successor(P.TER, inst.assign(label, p.var, p.expr), (), "assign")]
    if isinstance(p, P.Seq):
        out = []
        for s in _step(ctx, p.first, label, hyps):
            if isinstance(s.prog, P.Ter):
                out.append(Successor(p.second, s.label, s.guards, "seq-ter"))
            else:
                out.append(Successor(P.Seq(s.prog, p.second), s.label, s.guards, "seq"))
        return out
    if isinstance(p, P.If):
        yes, no = ctx.decide(hyps, label, p.cond)
        out = []
        if yes is not None:
            out += [Successor(s.prog, s.label, (yes,) + s.guards, "ite1")
                    for s in _step(ctx, p.then, label, hyps + [yes])]
        if no is not None:
            out += [Successor(s.prog, s.label, (no,) + s.guards, "ite2")
                    for s in _step(ctx, p.orelse, label, hyps + [no])]
        return out
    if isinstance(p, P.While):
        yes, no = ctx.decide(hyps, label, p.cond)
        out = []
        if yes is not None:
            for s in _step(ctx, p.body, label, hyps + [yes]):
                if isinstance(s.prog, P.Ter):
                    out.append(Successor(p, s.label, (yes,) + s.guards, "wh1-ter"))
                else:
                    out.append(Successor(P.Seq(s.prog, p), s.label, (yes,) + s.guards, "wh1"))
        if no is not None:
            out.append(Successor(P.TER, label, (no,), "wh2"))
        return out
    if isinstance(p, P.Test):
        yes, _ = ctx.decide(hyps, label, p.cond)
        return [Successor(P.TER, label, (yes,), "test")] if yes is not None else []
    if isinstance(p, P.Choice):
        return [Successor(p.left, label, (), "cup1"), Successor(p.right, label, (), "cup2")]
    if isinstance(p, P.Loop):
        unfolded = P.Choice(P.Seq(p.body, p), P.Test(F.TRUE))
        return [Successor(unfolded, label, (), "star")]
    if isinstance(label, StoreHeap):
        return _sl_step(ctx, p, label)
    raise KindMismatch(f"{type(p).__name__} needs a store-heap label")


def _sl_step(ctx, p, label):
    s, h = label.s, label.h
    if isinstance(p, P.Alloc):
        addr = ctx.inst.alloc_base
        while addr in h:
            addr += 1
        h[addr] = eval_expr(p.expr, s)
        s[p.var] = addr
        return [Successor(P.TER, StoreHeap.of(s, h), (), "cons")]
    if isinstance(p, P.Load):
        a = eval_expr(p.addr, s)
        if a not in h:
            return []
        s[p.var] = h[a]
        return [Successor(P.TER, StoreHeap.of(s, h), (), "load")]
    if isinstance(p, P.Mutate):
        h[eval_expr(p.addr, s)] = eval_expr(p.value, s)
        return [Successor(P.TER, StoreHeap.of(s, h), (), "store")]
    if isinstance(p, P.Dispose):
        h.pop(eval_expr(p.addr, s), None)
        return [Successor(P.TER, StoreHeap.of(s, h), (), "dispose")]
    raise KindMismatch(type(p).__name__)


def ground_store(world) -> Store:
    return Store.of({k: const(v) for k, v in world.items()})


__all__ = ["Instantiation", "Successor", "StepResult", "step", "get_instantiation",
           "WP", "FODL", "PL", "SL", "PACKS"]
