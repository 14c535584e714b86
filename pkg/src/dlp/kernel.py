"""The trusted rule layer.

``apply_rule`` takes a goal sequent, a rule id and parameters and returns the
premises together with the side obligations it discharged and the
conclusion/premise pairs (CP pairs) that derivation traces follow.  Nothing
outside this module builds premises, so a certificate checker only has to
replay ``apply_rule``.

Occurrences are ``(side, index)`` with side ``"L"`` or ``"R"``.  CP pairs are
``(conclusion_flat_index, premise_flat_index, progressive)`` where flat
indices count the left side first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .core_model import formula as F
from .core_model import program as P
from .core_model.canon import canon
from .core_model.label import Store, StoreHeap, StoreSeq
from .core_model.sequent import Labeled, Sequent, lf_dynamic
from .core_model.subst import Substitution, is_free_label, substitute
from .errors import DlpError, KindMismatch, RuleError, SubstitutionError
from .instantiations.base import step
from .instantiations.semantics import eval_sl_formula
from .instantiations.termination import TerminationProof, terminates
from .oracle import Oracle, is_valid


class RuleId(str, Enum):
    BoxR = "BoxR"
    BoxL = "BoxL"
    BoxTer = "BoxTer"
    TerClose = "TerClose"
    Sub = "Sub"
    Ax = "Ax"
    Cut = "Cut"
    WkR = "WkR"
    WkL = "WkL"
    Con = "Con"
    NegR = "NegR"
    NegL = "NegL"
    AndR = "AndR"
    AndL = "AndL"
    OrL = "OrL"
    OrR = "OrR"
    ImpR = "ImpR"
    ImpL = "ImpL"
    DiaStep = "DiaStep"
    DiaTer = "DiaTer"
    LE = "LE"
    LiftedSeq = "LiftedSeq"
    LiftedGen = "LiftedGen"
    SLStar = "SLStar"
    SLFrame = "SLFrame"
    TempFirst = "TempFirst"
    TempSufR1 = "TempSufR1"
    TempSufR2 = "TempSufR2"
    TempSufL = "TempSufL"


DERIVED = frozenset({RuleId.OrL, RuleId.OrR, RuleId.ImpR, RuleId.ImpL, RuleId.DiaStep,
                     RuleId.DiaTer, RuleId.LE, RuleId.LiftedSeq, RuleId.LiftedGen,
                     RuleId.SLStar, RuleId.SLFrame, RuleId.TempFirst, RuleId.TempSufR1,
                     RuleId.TempSufR2, RuleId.TempSufL})


@dataclass(frozen=True)
class Obligation:
    """A side condition discharged while applying a rule.

    ``kind`` is ``valid`` (oracle sequent), ``termination`` (side deduction
    that the program terminates), ``freeness`` or ``heap`` (ground check on
    a store-heap label).
    """
    kind: str
    subject: object
    verdict: object


@dataclass(frozen=True)
class RuleApplication:
    rule: RuleId
    params: dict
    premises: tuple
    obligations: tuple = ()
    pairs: tuple = ()  # one tuple of CP pairs per premise

    @property
    def progressive_pairs(self):
        out = set()
        for prem in self.pairs:
            out |= {(a, b) for a, b, prog in prem if prog}
        return out

    def termination_proof(self):
        for ob in self.obligations:
            if ob.kind == "termination" and isinstance(ob.verdict, TerminationProof):
                return ob.verdict
        return None


class _Build:
    """Premise under construction; remembers where each formula came from."""

    def __init__(self, goal: Sequent):
        self.goal = goal
        self.sides = {
            "L": [[("L", i), f, False] for i, f in enumerate(goal.left)],
            "R": [[("R", i), f, False] for i, f in enumerate(goal.right)],
        }

    def _find(self, occ):
        for k, item in enumerate(self.sides[occ[0]]):
            if item[0] == occ:
                return k
        raise KeyError(occ)

    def replace(self, occ, lf, progressive=False):
        item = self.sides[occ[0]][self._find(occ)]
        item[1], item[2] = lf, progressive
        return self

    def remove(self, occ):
        del self.sides[occ[0]][self._find(occ)]
        return self

    def add(self, side, lf, origin=None, progressive=False):
        self.sides[side].append([origin, lf, progressive])
        return self

    def done(self):
        left = [f for _, f, _ in self.sides["L"]]
        right = [f for _, f, _ in self.sides["R"]]
        seq = Sequent(left, right)
        pairs = []
        for k, (origin, _, prog) in enumerate(self.sides["L"] + self.sides["R"]):
            if origin is not None:
                pairs.append((self.goal.flat_index(origin), k, prog))
        return seq, tuple(pairs)


def _fail(code, msg):
    raise RuleError(code, msg)


def _target(goal, params, side=None):
    occ = params.get("occ")
    if occ is None:
        _fail("NotApplicable", "rule needs a target occurrence")
    occ = (occ[0], int(occ[1]))
    if side is not None and occ[0] != side:
        _fail("NotApplicable", f"target must be on the {'left' if side == 'L' else 'right'}")
    items = goal.side(occ[0])
    if not 0 <= occ[1] < len(items):
        _fail("NotApplicable", f"no formula at {occ[0]}{occ[1]}")
    lf = items[occ[1]]
    if not isinstance(lf, Labeled):
        _fail("NotApplicable", "target is not a labeled formula")
    return occ, lf


def _want(f, kind, what):
    if not isinstance(f, kind):
        _fail("NotApplicable", f"target is not {what}")


def _hyps(seq):
    return [lf for lf in seq.left if isinstance(lf, Labeled) and not lf_dynamic(lf)]


def _check_valid(oracle, seq, node_msg):
    verdict = oracle.check_sequent(seq)
    if not is_valid(verdict):
        _fail("ObligationFailed", f"{node_msg}: {verdict}")
    return Obligation("valid", seq, verdict)


def _single(goal, occ, lf, progressive=False):
    return _Build(goal).replace(occ, lf, progressive).done()


def _app(rule, params, built, obligations=()):
    premises = tuple(s for s, _ in built)
    pairs = tuple(p for _, p in built)
    return RuleApplication(rule, dict(params), premises, tuple(obligations), pairs)


# --- rule implementations ------------------------------------------------------

def _box_r(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Box, "a box formula")
    prog = lf.formula.prog
    if isinstance(prog, P.Ter):
        _fail("NotApplicable", "use BoxTer on the terminal program")
    res = step(ctx.inst, _hyps(goal), prog, lf.label, ctx.oracle)
    if res.undecided:
        _fail("MissingExhaustiveness", f"guard {res.undecided[0]} is not decided by the context; split first")
    built = [_single(goal, occ, Labeled(s.label, F.Box(s.prog, lf.formula.body)), True)
             for s in res.successors]
    return _app(RuleId.BoxR, params, built)


def _chosen(ctx, goal, lf, params):
    to = params.get("to")
    if to is None:
        _fail("NotApplicable", "rule needs the chosen transition")
    prog2, label2 = to
    res = step(ctx.inst, _hyps(goal), lf.formula.prog, lf.label, ctx.oracle)
    want = (canon(prog2), canon(label2))
    for s in res.successors:
        if (canon(s.prog), canon(s.label)) == want:
            return s
    _fail("NotApplicable", f"({prog2}, {label2}) is not a derivable transition")


def _termination(ctx, goal, lf, params):
    cert = params.get("termination")
    if cert is None:
        return None, []
    proof = terminates(ctx.inst, _hyps(goal), lf.formula.prog, lf.label, cert, ctx.oracle)
    ob = Obligation("termination", (lf.label, lf.formula.prog), proof)
    return (proof if isinstance(proof, TerminationProof) else None), [ob]


def _box_l(ctx, goal, params):
    occ, lf = _target(goal, params, "L")
    _want(lf.formula, F.Box, "a box formula")
    if isinstance(lf.formula.prog, P.Ter):
        _fail("NotApplicable", "use BoxTer on the terminal program")
    s = _chosen(ctx, goal, lf, params)
    proof, obs = _termination(ctx, goal, lf, params)
    built = [_single(goal, occ, Labeled(s.label, F.Box(s.prog, lf.formula.body)), proof is not None)]
    return _app(RuleId.BoxL, params, built, obs)


def _dia_step(ctx, goal, params):
    occ, lf = _target(goal, params)
    _want(lf.formula, F.Dia, "a diamond formula")
    if isinstance(lf.formula.prog, P.Ter):
        _fail("NotApplicable", "use DiaTer on the terminal program")
    body = lf.formula.body
    if occ[0] == "R":
        s = _chosen(ctx, goal, lf, params)
        proof, obs = _termination(ctx, goal, lf, params)
        built = [_single(goal, occ, Labeled(s.label, F.Dia(s.prog, body)), proof is not None)]
        return _app(RuleId.DiaStep, params, built, obs)
    # on the left a diamond behaves like a box on the right: every successor
    res = step(ctx.inst, _hyps(goal), lf.formula.prog, lf.label, ctx.oracle)
    if res.undecided:
        _fail("MissingExhaustiveness", f"guard {res.undecided[0]} is not decided by the context; split first")
    built = [_single(goal, occ, Labeled(s.label, F.Dia(s.prog, body)), True) for s in res.successors]
    return _app(RuleId.DiaStep, params, built)


def _ter_modal(kind, rule):
    def apply(ctx, goal, params):
        occ, lf = _target(goal, params)
        _want(lf.formula, kind, "a modality")
        if not isinstance(lf.formula.prog, P.Ter):
            _fail("NotApplicable", "program is not terminal")
        return _app(rule, params, [_single(goal, occ, Labeled(lf.label, lf.formula.body))])
    return apply


def _ter_close(ctx, goal, params):
    if not goal.is_dynamic_free():
        _fail("NotApplicable", "TerClose needs a sequent without modalities or transitions")
    ob = _check_valid(ctx.oracle, goal, "sequent is not valid")
    return _app(RuleId.TerClose, params, [], [ob])


def _sub(ctx, goal, params):
    template, theta = params.get("template"), params.get("subst")
    if template is None or theta is None:
        _fail("NotApplicable", "Sub needs a template sequent and a substitution")
    theta = Substitution(theta)
    try:
        inst = substitute(template, theta)
    except SubstitutionError as exc:
        _fail("NotApplicable", str(exc))
    if inst != goal:
        _fail("NotApplicable", f"template under {theta} is not the goal")
    # pair each goal occurrence with the template formula it instantiates
    avail = {}
    for occ in template.occurrences():
        key = (occ[0], canon(substitute(template.at(occ), theta)))
        avail.setdefault(key, []).append(template.flat_index(occ))
    pairs = []
    for occ in goal.occurrences():
        pairs.append((goal.flat_index(occ), avail[(occ[0], canon(goal.at(occ)))].pop(0), False))
    return RuleApplication(RuleId.Sub, dict(params), (template,), (), (tuple(pairs),))


def _ax(ctx, goal, params):
    pair = params.get("pair")
    if pair is not None:
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < len(goal.left) and 0 <= j < len(goal.right)) or \
                canon(goal.left[i]) != canon(goal.right[j]):
            _fail("NotApplicable", "the chosen formulas differ")
        return _app(RuleId.Ax, params, [])
    rights = {canon(f) for f in goal.right}
    for i, f in enumerate(goal.left):
        if canon(f) in rights:
            j = [canon(g) for g in goal.right].index(canon(f))
            return _app(RuleId.Ax, dict(params, pair=(i, j)), [])
    _fail("NotApplicable", "no formula occurs on both sides")


def _cut(ctx, goal, params):
    lf = params.get("formula")
    if lf is None:
        _fail("NotApplicable", "Cut needs a formula")
    if isinstance(lf, Labeled):
        ctx.inst.check_label(lf.label)
        ctx.inst.check_formula(lf.formula)
    a = _Build(goal).add("R", lf).done()
    b = _Build(goal).add("L", lf).done()
    return _app(RuleId.Cut, params, [a, b])


def _weaken(side, rule):
    def apply(ctx, goal, params):
        idx = params.get("indices")
        if idx is None and "occ" in params:
            idx = [params["occ"][1]]
        idx = sorted({int(i) for i in (idx or [])})
        if not idx or any(not 0 <= i < len(goal.side(side)) for i in idx):
            _fail("NotApplicable", "bad weakening index")
        b = _Build(goal)
        for i in idx:
            b.remove((side, i))
        return _app(rule, dict(params, indices=idx), [b.done()])
    return apply


def _con(ctx, goal, params):
    occ, lf = _target(goal, params)
    other = params.get("with")
    b = _Build(goal)
    if other is None:
        b.add(occ[0], lf, origin=occ)
    else:
        other = int(other)
        items = goal.side(occ[0])
        if other == occ[1] or not 0 <= other < len(items) or canon(items[other]) != canon(lf):
            _fail("NotApplicable", "contraction needs two equal occurrences")
        b.remove((occ[0], other))
    return _app(RuleId.Con, params, [b.done()])


def _neg(side, rule):
    def apply(ctx, goal, params):
        occ, lf = _target(goal, params, side)
        _want(lf.formula, F.Not, "a negation")
        other = "L" if side == "R" else "R"
        b = _Build(goal).remove(occ).add(other, Labeled(lf.label, lf.formula.arg), origin=occ)
        return _app(rule, params, [b.done()])
    return apply


def _and_r(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.And, "a conjunction")
    f = lf.formula
    return _app(RuleId.AndR, params, [_single(goal, occ, Labeled(lf.label, f.left)),
                                      _single(goal, occ, Labeled(lf.label, f.right))])


def _and_l(ctx, goal, params):
    occ, lf = _target(goal, params, "L")
    _want(lf.formula, F.And, "a conjunction")
    f = lf.formula
    b = _Build(goal).replace(occ, Labeled(lf.label, f.left)).add("L", Labeled(lf.label, f.right), origin=occ)
    return _app(RuleId.AndL, params, [b.done()])


def _or_l(ctx, goal, params):
    occ, lf = _target(goal, params, "L")
    _want(lf.formula, F.Or, "a disjunction")
    f = lf.formula
    return _app(RuleId.OrL, params, [_single(goal, occ, Labeled(lf.label, f.left)),
                                     _single(goal, occ, Labeled(lf.label, f.right))])


def _or_r(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Or, "a disjunction")
    f = lf.formula
    b = _Build(goal).replace(occ, Labeled(lf.label, f.left)).add("R", Labeled(lf.label, f.right), origin=occ)
    return _app(RuleId.OrR, params, [b.done()])


def _imp_r(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Imp, "an implication")
    f = lf.formula
    b = _Build(goal).replace(occ, Labeled(lf.label, f.right)).add("L", Labeled(lf.label, f.left), origin=occ)
    return _app(RuleId.ImpR, params, [b.done()])


def _imp_l(ctx, goal, params):
    occ, lf = _target(goal, params, "L")
    _want(lf.formula, F.Imp, "an implication")
    f = lf.formula
    a = _Build(goal).remove(occ).add("R", Labeled(lf.label, f.left), origin=occ).done()
    c = _single(goal, occ, Labeled(lf.label, f.right))
    return _app(RuleId.ImpL, params, [a, c])


def _le(ctx, goal, params):
    occ, lf = _target(goal, params, "L")
    new = params.get("formula")
    if new is None:
        _fail("NotApplicable", "LE needs the replacement formula")
    if not isinstance(new, Labeled):
        new = Labeled(lf.label, new)
    if lf_dynamic(lf) or lf_dynamic(new):
        _fail("NotApplicable", "LE works on non-dynamic formulas")
    ob = _check_valid(ctx.oracle, Sequent([lf], [new]), "implication does not hold")
    return _app(RuleId.LE, dict(params, formula=new), [_single(goal, occ, new)], [ob])


# --- lifting ---------------------------------------------------------------------

@dataclass(frozen=True)
class LiftedRule:
    """A plain rule instance with every formula placed under one label."""
    name: str
    label: Store
    premises: tuple
    conclusion: Sequent


LIFTED_RULES: dict = {}


def _rule_formulas(premises, conclusion):
    out = []
    for s in tuple(premises) + (conclusion,):
        out += list(s.left) + list(s.right)
    return out


def lift_rule(name, premises, conclusion, sigma, register=True) -> LiftedRule:
    """Label a sound plain rule instance with ``sigma``.

    ``premises`` and ``conclusion`` are sequents of plain formulas.  Raises
    FreenessViolation unless ``sigma`` is free for every formula involved.
    """
    formulas = _rule_formulas(premises, conclusion)
    if not is_free_label(sigma, formulas):
        raise RuleError("FreenessViolation", f"{sigma} is not free for the formulas of {name}")

    def lab(s):
        return Sequent([Labeled(sigma, f) for f in s.left], [Labeled(sigma, f) for f in s.right])

    rule = LiftedRule(name, sigma, tuple(lab(p) for p in premises), lab(conclusion))
    if register:
        LIFTED_RULES[name] = rule
    return rule


def seq_rule_instance(prog_a, prog_b, body):
    """Plain rule  [a][b]phi  over  [a;b]phi  (right-hand side)."""
    return ([Sequent((), [F.Box(prog_a, F.Box(prog_b, body))])],
            Sequent((), [F.Box(P.Seq(prog_a, prog_b), body)]))


def gen_rule_instance(prog, phi, psi):
    """Plain rule  phi => psi  over  [a]phi => [a]psi."""
    return ([Sequent([phi], [psi])], Sequent([F.Box(prog, phi)], [F.Box(prog, psi)]))


def _lifted_seq(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Box, "a box formula")
    prog = lf.formula.prog
    if not isinstance(prog, P.Seq):
        _fail("NotApplicable", "program is not a sequence")
    prems, concl = seq_rule_instance(prog.first, prog.second, lf.formula.body)
    lift_rule("seq", prems, concl, lf.label, register=False)
    new = Labeled(lf.label, prems[0].right[0])
    ob = Obligation("freeness", lf.label, True)
    return _app(RuleId.LiftedSeq, params, [_single(goal, occ, new)], [ob])


def _lifted_gen(ctx, goal, params):
    if len(goal.left) != 1 or len(goal.right) != 1:
        _fail("NotApplicable", "Gen applies to a sequent with exactly one formula per side")
    a, b = goal.left[0], goal.right[0]
    if not (isinstance(a, Labeled) and isinstance(b, Labeled)):
        _fail("NotApplicable", "Gen needs labeled formulas")
    fa, fb = a.formula, b.formula
    if not (isinstance(fa, F.Box) and isinstance(fb, F.Box)) or canon(fa.prog) != canon(fb.prog) \
            or canon(a.label) != canon(b.label):
        _fail("NotApplicable", "Gen needs the same label and program on both sides")
    prems, concl = gen_rule_instance(fa.prog, fa.body, fb.body)
    lift_rule("gen", prems, concl, a.label, register=False)
    premise = Sequent([Labeled(a.label, fa.body)], [Labeled(a.label, fb.body)])
    ob = Obligation("freeness", a.label, True)
    return RuleApplication(RuleId.LiftedGen, dict(params), (premise,), (ob,), (((0, 0, False), (1, 1, False)),))


# --- separation logic ------------------------------------------------------------

def _sl_star(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Star, "a separating conjunction")
    if not isinstance(lf.label, StoreHeap):
        _fail("NotApplicable", "needs a store-heap label")
    heap = lf.label.h
    part = {int(a) for a in params.get("split", ())}
    if not part <= set(heap):
        _fail("ObligationFailed", "split addresses are not in the heap")
    h1 = {k: v for k, v in heap.items() if k in part}
    h2 = {k: v for k, v in heap.items() if k not in part}
    disjoint = not (set(h1) & set(h2)) and set(h1) | set(h2) == set(heap)
    ob = Obligation("heap", ("disjoint", sorted(h1), sorted(h2)), disjoint)
    if not disjoint:
        _fail("ObligationFailed", "heap parts overlap")
    a = _single(goal, occ, Labeled(lf.label.with_heap(h1), lf.formula.left))
    b = _single(goal, occ, Labeled(lf.label.with_heap(h2), lf.formula.right))
    return _app(RuleId.SLStar, dict(params, split=sorted(part)), [a, b], [ob])


def _pure(f):
    return "PointsTo" not in F.connectives(f) and "Star" not in F.connectives(f)


def _sl_frame(ctx, goal, params):
    occ, lf = _target(goal, params, "R")
    _want(lf.formula, F.Star, "a separating conjunction")
    if not isinstance(lf.label, StoreHeap):
        _fail("NotApplicable", "needs a store-heap label")
    psi = lf.formula.right
    if not _pure(psi):
        _fail("NotApplicable", "the framed formula mentions the heap")
    holds = eval_sl_formula((lf.label.s, {}), psi)
    ob = Obligation("heap", ("empty-heap", str(psi)), holds)
    if holds is not True:
        _fail("ObligationFailed", f"{psi} does not hold on the empty heap")
    return _app(RuleId.SLFrame, params, [_single(goal, occ, Labeled(lf.label, lf.formula.left))], [ob])


# --- temporal --------------------------------------------------------------------

def _path_target(goal, params, kind, side=None):
    occ, lf = _target(goal, params, side)
    if not isinstance(lf.label, StoreSeq):
        _fail("NotApplicable", "needs a store-sequence label")
    _want(lf.formula, kind, f"a {kind.__name__} formula")
    return occ, lf


def _temp_first(ctx, goal, params):
    occ, lf = _path_target(goal, params, F.First)
    head = StoreSeq((lf.label.head,))
    return _app(RuleId.TempFirst, params, [_single(goal, occ, Labeled(head, lf.formula.arg))])


def _tail(lf):
    if len(lf.label.stores) < 2:
        _fail("NotApplicable", "the path has no proper suffix")
    return StoreSeq(lf.label.stores[1:])


def _temp_suf_r1(ctx, goal, params):
    occ, lf = _path_target(goal, params, F.Suf, "R")
    tail = _tail(lf)
    f = lf.formula
    return _app(RuleId.TempSufR1, params, [_single(goal, occ, Labeled(tail, f.left)),
                                           _single(goal, occ, Labeled(tail, f))])


def _temp_suf_r2(ctx, goal, params):
    occ, lf = _path_target(goal, params, F.Suf, "R")
    return _app(RuleId.TempSufR2, params, [_single(goal, occ, Labeled(_tail(lf), lf.formula.right))])


def _temp_suf_l(ctx, goal, params):
    occ, lf = _path_target(goal, params, F.Suf, "L")
    tail = _tail(lf)
    f = lf.formula
    a = _Build(goal).replace(occ, Labeled(tail, f.left)).add("L", Labeled(tail, f), origin=occ).done()
    b = _single(goal, occ, Labeled(tail, f.right))
    return _app(RuleId.TempSufL, params, [a, b])


_RULES = {
    RuleId.BoxR: _box_r,
    RuleId.BoxL: _box_l,
    RuleId.BoxTer: _ter_modal(F.Box, RuleId.BoxTer),
    RuleId.DiaTer: _ter_modal(F.Dia, RuleId.DiaTer),
    RuleId.TerClose: _ter_close,
    RuleId.Sub: _sub,
    RuleId.Ax: _ax,
    RuleId.Cut: _cut,
    RuleId.WkR: _weaken("R", RuleId.WkR),
    RuleId.WkL: _weaken("L", RuleId.WkL),
    RuleId.Con: _con,
    RuleId.NegR: _neg("R", RuleId.NegR),
    RuleId.NegL: _neg("L", RuleId.NegL),
    RuleId.AndR: _and_r,
    RuleId.AndL: _and_l,
    RuleId.OrL: _or_l,
    RuleId.OrR: _or_r,
    RuleId.ImpR: _imp_r,
    RuleId.ImpL: _imp_l,
    RuleId.DiaStep: _dia_step,
    RuleId.LE: _le,
    RuleId.LiftedSeq: _lifted_seq,
    RuleId.LiftedGen: _lifted_gen,
    RuleId.SLStar: _sl_star,
    RuleId.SLFrame: _sl_frame,
    RuleId.TempFirst: _temp_first,
    RuleId.TempSufR1: _temp_suf_r1,
    RuleId.TempSufR2: _temp_suf_r2,
    RuleId.TempSufL: _temp_suf_l,
}


@dataclass
class _Ctx:
    inst: object
    oracle: Oracle = field(default_factory=Oracle.from_spec)


def apply_rule(goal: Sequent, rule, params=None, *, inst, oracle=None) -> RuleApplication:
    """Apply ``rule`` backwards to ``goal``; raises RuleError when it does not fit."""
    rule = RuleId(rule)
    ctx = _Ctx(inst, oracle or Oracle.from_spec())
    try:
        return _RULES[rule](ctx, goal, dict(params or {}))
    except RuleError:
        raise
    except KindMismatch as exc:
        raise RuleError("NotApplicable", str(exc)) from None
    except DlpError as exc:
        raise RuleError("NotApplicable", f"{type(exc).__name__}: {exc}") from None


_FLIP = {"<": ">=", ">=": "<", ">": "<=", "<=": ">"}


def complement(f):
    """Negation of a guard, flipping comparisons instead of wrapping them."""
    if isinstance(f, F.Cmp) and f.op in _FLIP:
        return F.Cmp(_FLIP[f.op], f.lhs, f.rhs)
    return F.negate(f)


# --- guard case split --------------------------------------------------------------

def guard_case_split(goal: Sequent, guard: Labeled, *, inst, oracle=None):
    """Rule applications that split ``goal`` on an undecided ``guard``.

    Returns ``[(path, RuleApplication)]`` where ``path`` is the tuple of
    premise positions from the split's root.  The two open leaves are at
    ``(1, 0)`` (guard holds) and ``(1, 1)`` (guard fails).
    """
    oracle = oracle or Oracle.from_spec()
    lemma = Labeled(guard.label, F.Or(guard.formula, complement(guard.formula)))
    cut = apply_rule(goal, RuleId.Cut, {"formula": lemma}, inst=inst, oracle=oracle)
    steps = [((), cut)]
    left = cut.premises[0]
    path = (0,)
    dyn_r = [i for i, f in enumerate(left.right) if lf_dynamic(f)]
    if dyn_r:
        app = apply_rule(left, RuleId.WkR, {"indices": dyn_r}, inst=inst, oracle=oracle)
        steps.append((path, app))
        left, path = app.premises[0], path + (0,)
    dyn_l = [i for i, f in enumerate(left.left) if lf_dynamic(f)]
    if dyn_l:
        app = apply_rule(left, RuleId.WkL, {"indices": dyn_l}, inst=inst, oracle=oracle)
        steps.append((path, app))
        left, path = app.premises[0], path + (0,)
    steps.append((path, apply_rule(left, RuleId.TerClose, {}, inst=inst, oracle=oracle)))
    right = cut.premises[1]
    steps.append(((1,), apply_rule(right, RuleId.OrL, {"occ": ("L", len(right.left) - 1)},
                                   inst=inst, oracle=oracle)))
    return steps


# --- derived-rule expansion --------------------------------------------------------

def encode_primitive(f):
    """Rewrite disjunction and implication into negation and conjunction."""
    if isinstance(f, F.Or):
        return F.Not(F.And(F.Not(encode_primitive(f.left)), F.Not(encode_primitive(f.right))))
    if isinstance(f, F.Imp):
        return F.Not(F.And(encode_primitive(f.left), F.Not(encode_primitive(f.right))))
    if isinstance(f, F.Not):
        return F.Not(encode_primitive(f.arg))
    if isinstance(f, F.And):
        return F.And(encode_primitive(f.left), encode_primitive(f.right))
    return f


def expand_derived(goal: Sequent, rule, occ, *, inst, oracle=None):
    """Premises of a propositional derived rule, obtained through primitive rules only.

    The target is first rewritten with ``encode_primitive`` (only its top
    connective); the result's premises have the sub-formulas in the same
    places the derived rule puts them.
    """
    rule = RuleId(rule)
    side, i = occ
    lf = goal.at(occ)
    f = lf.formula
    lab = lf.label

    def run(seq, r, o):
        return apply_rule(seq, r, {"occ": o}, inst=inst, oracle=oracle).premises

    if rule is RuleId.OrL:
        enc = F.Not(F.And(F.Not(f.left), F.Not(f.right)))
        g = goal.replace("L", i, [Labeled(lab, enc)])
        # negL moves the conjunction to the end of the right side
        (g1,) = run(g, RuleId.NegL, ("L", i))
        a, b = run(g1, RuleId.AndR, ("R", len(g1.right) - 1))
        (pa,) = run(a, RuleId.NegR, ("R", len(a.right) - 1))
        (pb,) = run(b, RuleId.NegR, ("R", len(b.right) - 1))
        return [pa, pb]
    if rule is RuleId.OrR:
        enc = F.Not(F.And(F.Not(f.left), F.Not(f.right)))
        g = goal.replace("R", i, [Labeled(lab, enc)])
        (g1,) = run(g, RuleId.NegR, ("R", i))
        (g2,) = run(g1, RuleId.AndL, ("L", len(g1.left) - 1))
        (g3,) = run(g2, RuleId.NegL, ("L", len(g2.left) - 2))
        (g4,) = run(g3, RuleId.NegL, ("L", len(g3.left) - 1))
        return [g4]
    if rule is RuleId.ImpR:
        enc = F.Not(F.And(f.left, F.Not(f.right)))
        g = goal.replace("R", i, [Labeled(lab, enc)])
        (g1,) = run(g, RuleId.NegR, ("R", i))
        (g2,) = run(g1, RuleId.AndL, ("L", len(g1.left) - 1))
        (g3,) = run(g2, RuleId.NegL, ("L", len(g2.left) - 1))
        return [g3]
    if rule is RuleId.ImpL:
        enc = F.Not(F.And(f.left, F.Not(f.right)))
        g = goal.replace("L", i, [Labeled(lab, enc)])
        (g1,) = run(g, RuleId.NegL, ("L", i))
        a, b = run(g1, RuleId.AndR, ("R", len(g1.right) - 1))
        (pb,) = run(b, RuleId.NegR, ("R", len(b.right) - 1))
        return [a, pb]
    raise RuleError("NotApplicable", f"{rule.value} has no propositional expansion")


# --- target search helpers ---------------------------------------------------------

def find_target(goal: Sequent, rule):
    """The first occurrence a rule can act on, or None."""
    rule = RuleId(rule)
    wants = {
        RuleId.BoxR: ("R", lambda f: isinstance(f, F.Box) and not isinstance(f.prog, P.Ter)),
        RuleId.BoxL: ("L", lambda f: isinstance(f, F.Box) and not isinstance(f.prog, P.Ter)),
        RuleId.NegR: ("R", lambda f: isinstance(f, F.Not)),
        RuleId.NegL: ("L", lambda f: isinstance(f, F.Not)),
        RuleId.AndR: ("R", lambda f: isinstance(f, F.And)),
        RuleId.AndL: ("L", lambda f: isinstance(f, F.And)),
        RuleId.OrL: ("L", lambda f: isinstance(f, F.Or)),
        RuleId.OrR: ("R", lambda f: isinstance(f, F.Or)),
        RuleId.ImpR: ("R", lambda f: isinstance(f, F.Imp)),
        RuleId.ImpL: ("L", lambda f: isinstance(f, F.Imp)),
        RuleId.LiftedSeq: ("R", lambda f: isinstance(f, F.Box) and isinstance(f.prog, P.Seq)),
        RuleId.SLStar: ("R", lambda f: isinstance(f, F.Star)),
        RuleId.SLFrame: ("R", lambda f: isinstance(f, F.Star)),
        RuleId.TempSufR1: ("R", lambda f: isinstance(f, F.Suf)),
        RuleId.TempSufR2: ("R", lambda f: isinstance(f, F.Suf)),
        RuleId.TempSufL: ("L", lambda f: isinstance(f, F.Suf)),
    }
    both = {
        RuleId.BoxTer: lambda f: isinstance(f, F.Box) and isinstance(f.prog, P.Ter),
        RuleId.DiaTer: lambda f: isinstance(f, F.Dia) and isinstance(f.prog, P.Ter),
        RuleId.DiaStep: lambda f: isinstance(f, F.Dia) and not isinstance(f.prog, P.Ter),
        RuleId.TempFirst: lambda f: isinstance(f, F.First),
    }
    if rule in wants:
        side, pred = wants[rule]
        occs = [(side, i) for i in range(len(goal.side(side)))]
    elif rule in both:
        pred = both[rule]
        occs = [("R", i) for i in range(len(goal.right))] + [("L", i) for i in range(len(goal.left))]
    else:
        return None
    for occ in occs:
        lf = goal.at(occ)
        if isinstance(lf, Labeled) and pred(lf.formula):
            return occ
    return None


__all__ = ["RuleId", "RuleApplication", "Obligation", "apply_rule", "guard_case_split",
           "lift_rule", "LiftedRule", "LIFTED_RULES", "expand_derived", "encode_primitive",
           "find_target", "complement", "seq_rule_instance", "gen_rule_instance", "DERIVED"]
