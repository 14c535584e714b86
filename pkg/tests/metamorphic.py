"""Random rule instances and ground-sample soundness checks for the kernel.

Every generator returns ``(inst, goal, params)`` for an instance the kernel
accepts (or None to ask for another draw).  ``check_rule`` then evaluates
premises and conclusion at random ground points:

* most rules are sound point by point: if every premise holds at g, so does
  the conclusion;
* Sub is checked at the shifted point g[x := theta(x)(g)] for the premise;
* Gen is only sound for valid premises, so its conclusion is checked only
  when the oracle finds the premise valid.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from dlp.core_model import formula as F
from dlp.core_model import program as P
from dlp.core_model.expr import Add, Num, Sub, Var, eval_expr
from dlp.core_model.label import Store, StoreHeap, StoreSeq
from dlp.core_model.sequent import Labeled, Sequent
from dlp.core_model.subst import Substitution, substitute
from dlp.errors import NonIntegralDivision, RuleError
from dlp.instantiations import UNKNOWN, eval_sequent, get_instantiation, step
from dlp.instantiations.termination import Unroll
from dlp.kernel import RuleId, apply_rule, complement
from dlp.oracle import Oracle, is_valid

from strategies import rand_guard, rand_wp

WP = get_instantiation("wp")
PL = get_instantiation("pl")
SL = get_instantiation("sl")
PARAMS = ("a", "b", "c")
ORACLE = Oracle.from_spec("bounded:12")
EVAL_BUDGET = 300


def _affine(rng):
    e = Var(rng.choice(PARAMS))
    k = rng.randint(-2, 2)
    return e if k == 0 else Add(e, Num(k)) if k > 0 else Sub(e, Num(-k))


def rand_store(rng, ground=False):
    out = {}
    for x in ("x", "y", "z"):
        out[x] = Num(rng.randint(-3, 3)) if ground or rng.random() < 0.2 else _affine(rng)
    return Store.of(out)


def free_store(rng):
    names = list(PARAMS)
    rng.shuffle(names)
    return Store.of({"x": Var(names[0]), "y": Add(Var(names[1]), Num(rng.randint(0, 2))), "z": Var(names[2])})


def rand_plain(rng, depth=1):
    if depth == 0 or rng.random() < 0.5:
        return rand_guard(rng) if rng.random() < 0.9 else rng.choice([F.TRUE, F.FALSE])
    kind = rng.choice([F.Not, F.And, F.Or, F.Imp])
    if kind is F.Not:
        return F.Not(rand_plain(rng, depth - 1))
    return kind(rand_plain(rng, depth - 1), rand_plain(rng, depth - 1))


def rand_lf(rng, sigma=None):
    return Labeled(sigma or rand_store(rng), rand_plain(rng))


def context(rng, sigma=None, most=1):
    return [rand_lf(rng, sigma if rng.random() < 0.5 else None) for _ in range(rng.randint(0, most))]


def _shuffle_in(rng, items, lf):
    i = rng.randint(0, len(items))
    return items[:i] + [lf] + items[i:], i


def _exhaustive_goal(rng, sigma, prog, tries=4):
    """Add guard facts to the context until the step is decided."""
    extra = []
    for _ in range(tries):
        res = step(WP, extra, prog, sigma, ORACLE)
        if res.exhaustive:
            return extra, res
        g = res.undecided_guard
        extra.append(g if rng.random() < 0.5 else Labeled(g.label, complement(g.formula)))
    return None, None


# --- generators ------------------------------------------------------------------

def gen_box_r(rng):
    sigma, prog = rand_store(rng), rand_wp(rng, 3, mul=False)
    facts, _ = _exhaustive_goal(rng, sigma, prog)
    if facts is None:
        return None
    right, i = _shuffle_in(rng, context(rng), Labeled(sigma, F.Box(prog, rand_plain(rng))))
    return WP, Sequent(context(rng) + facts, right), {"occ": ("R", i)}


def _transition_instance(rng, modal, side):
    sigma, prog = rand_store(rng), rand_wp(rng, 3, mul=False)
    facts = context(rng, sigma)
    res = step(WP, facts, prog, sigma, ORACLE)
    if not res.successors:
        return None
    s = rng.choice(res.successors)
    target = Labeled(sigma, modal(prog, rand_plain(rng)))
    params = {"to": (s.prog, s.label)}
    if rng.random() < 0.5:
        params["termination"] = Unroll(rng.randint(1, 6))
    if side == "L":
        left, i = _shuffle_in(rng, facts, target)
        return WP, Sequent(left, context(rng)), dict(params, occ=("L", i))
    right, i = _shuffle_in(rng, context(rng), target)
    return WP, Sequent(facts, right), dict(params, occ=("R", i))


def gen_box_l(rng):
    return _transition_instance(rng, F.Box, "L")


def gen_dia_step(rng):
    if rng.random() < 0.7:
        return _transition_instance(rng, F.Dia, "R")
    sigma, prog = rand_store(rng), rand_wp(rng, 3, mul=False)
    facts, _ = _exhaustive_goal(rng, sigma, prog)
    if facts is None:
        return None
    left, i = _shuffle_in(rng, facts, Labeled(sigma, F.Dia(prog, rand_plain(rng))))
    return WP, Sequent(left, context(rng)), {"occ": ("L", i)}


def _ter_modal(modal):
    def gen(rng):
        lf = Labeled(rand_store(rng), modal(P.TER, rand_plain(rng)))
        side = rng.choice("LR")
        items, i = _shuffle_in(rng, context(rng), lf)
        goal = Sequent(items, context(rng)) if side == "L" else Sequent(context(rng), items)
        return WP, goal, {"occ": (side, i)}
    return gen


def gen_ter_close(rng):
    left = context(rng, most=2)
    right = context(rng, most=2)
    if rng.random() < 0.5:
        # an excluded-middle or copied formula makes validity likely
        lf = rand_lf(rng)
        right.append(Labeled(lf.label, F.Or(lf.formula, F.Not(lf.formula))) if rng.random() < 0.5 else lf)
        left.append(lf)
    # invalid draws are refused by the kernel and redrawn
    return WP, Sequent(left, right), {}


def gen_sub(rng):
    sigma = Store.of({"x": Add(Var("m"), _affine(rng)), "y": Sub(Var("a"), Var("m")), "z": _affine(rng)})
    tmpl = Sequent([Labeled(sigma, rand_plain(rng))] + context(rng),
                   [Labeled(sigma, F.Box(rand_wp(rng, 2, mul=False), rand_plain(rng)))])
    theta = Substitution({"m": rng.choice([Num(0), Add(Var("m"), Num(1)), Var("b"), Sub(Var("c"), Num(2))])})
    return WP, substitute(tmpl, theta), {"template": tmpl, "subst": theta}


def gen_ax(rng):
    lf = rand_lf(rng) if rng.random() < 0.7 else Labeled(rand_store(rng), F.Box(rand_wp(rng, 2, mul=False), rand_plain(rng)))
    left, _ = _shuffle_in(rng, context(rng), lf)
    right, _ = _shuffle_in(rng, context(rng), lf)
    return WP, Sequent(left, right), {}


def gen_cut(rng):
    return WP, Sequent(context(rng, most=2), context(rng, most=2)), {"formula": rand_lf(rng)}


def _gen_weaken(side):
    def gen(rng):
        items = context(rng, most=3)
        if not items:
            return None
        other = context(rng, most=2)
        idx = sorted(rng.sample(range(len(items)), rng.randint(1, len(items))))
        goal = Sequent(items, other) if side == "L" else Sequent(other, items)
        return WP, goal, {"indices": idx}
    return gen


def gen_con(rng):
    lf = rand_lf(rng)
    side = rng.choice("LR")
    items, i = _shuffle_in(rng, context(rng), lf)
    params = {"occ": (side, i)}
    if rng.random() < 0.5:
        items, _ = _shuffle_in(rng, items, lf)
        i = items.index(lf)
        j = len(items) - 1 - items[::-1].index(lf)
        params = {"occ": (side, i), "with": j}
    goal = Sequent(items, context(rng)) if side == "L" else Sequent(context(rng), items)
    return WP, goal, params


def _gen_connective(side, make):
    def gen(rng):
        sigma = rand_store(rng)
        lf = Labeled(sigma, make(rand_plain(rng), rand_plain(rng)))
        items, i = _shuffle_in(rng, context(rng), lf)
        goal = Sequent(items, context(rng)) if side == "L" else Sequent(context(rng), items)
        return WP, goal, {"occ": (side, i)}
    return gen


def gen_le(rng):
    sigma = rand_store(rng)
    phi = rand_plain(rng)
    new = rng.choice([F.Or(phi, rand_plain(rng)), F.Imp(rand_plain(rng), phi), phi, rand_plain(rng)])
    left, i = _shuffle_in(rng, context(rng), Labeled(sigma, phi))
    goal = Sequent(left, context(rng))
    try:
        apply_rule(goal, RuleId.LE, {"occ": ("L", i), "formula": new}, inst=WP, oracle=ORACLE)
    except RuleError:
        return None
    return WP, goal, {"occ": ("L", i), "formula": new}


def gen_lifted_seq(rng):
    sigma = free_store(rng)
    prog = P.Seq(rand_wp(rng, 2, mul=False), rand_wp(rng, 2, mul=False))
    body = rand_plain(rng)
    right, i = _shuffle_in(rng, context(rng), Labeled(sigma, F.Box(prog, body)))
    return WP, Sequent(context(rng), right), {"occ": ("R", i)}


def gen_lifted_gen(rng):
    sigma = free_store(rng)
    prog = rand_wp(rng, 2, mul=False)
    phi = rand_plain(rng)
    psi = rng.choice([phi, F.Or(phi, rand_plain(rng)), rand_plain(rng)])
    return WP, Sequent([Labeled(sigma, F.Box(prog, phi))], [Labeled(sigma, F.Box(prog, psi))]), {}


def _sl_label(rng):
    heap = {37 + k: rng.randint(0, 2) for k in range(rng.randint(1, 3))}
    store = {"x": 37, "y": rng.choice([37, 38, 39]), "z": rng.randint(0, 2)}
    return StoreHeap.of(store, heap)


def _sl_atom(rng, lab):
    if rng.random() < 0.7:
        var = rng.choice(["x", "y"])
        stored = lab.h.get(lab.s[var])
        # mostly point at what the heap really holds so that splits can succeed
        value = Num(stored) if stored is not None and rng.random() < 0.6 else rng.choice([Var("z"), Num(rng.randint(0, 2))])
        return F.PointsTo(Var(var), value)
    return rand_guard(rng)


def gen_sl_star(rng):
    lab = _sl_label(rng)
    target = Labeled(lab, F.Star(_sl_atom(rng, lab), _sl_atom(rng, lab)))
    split = [a for a in lab.h if rng.random() < 0.5]
    return SL, Sequent([], [target]), {"occ": ("R", 0), "split": split}


def gen_sl_frame(rng):
    lab = _sl_label(rng)
    pure = rng.choice([F.TRUE, rand_guard(rng), F.Cmp("=", Var("x"), Num(37))])
    target = Labeled(lab, F.Star(_sl_atom(rng, lab), pure))
    goal = Sequent([], [target])
    try:
        apply_rule(goal, RuleId.SLFrame, {"occ": ("R", 0)}, inst=SL, oracle=ORACLE)
    except RuleError:
        return None
    return SL, goal, {"occ": ("R", 0)}


def _path(rng, lo=1):
    return StoreSeq(tuple(Store.of({"x": _affine(rng), "y": _affine(rng)}) for _ in range(rng.randint(lo, 3))))


def _pl_atom(rng):
    return F.Cmp(rng.choice(["<", "<=", ">", "="]), Var(rng.choice(["x", "y"])), Num(rng.randint(-2, 2)))


def _pl_formula(rng, depth=1):
    if depth == 0 or rng.random() < 0.4:
        return _pl_atom(rng)
    kind = rng.choice(["first", "suf", "not", "or"])
    if kind == "first":
        return F.First(_pl_formula(rng, depth - 1))
    if kind == "suf":
        return F.Suf(_pl_formula(rng, depth - 1), _pl_formula(rng, depth - 1))
    if kind == "not":
        return F.Not(_pl_formula(rng, depth - 1))
    return F.Or(_pl_formula(rng, depth - 1), _pl_formula(rng, depth - 1))


def _pl_context(rng):
    return [Labeled(_path(rng), _pl_formula(rng)) for _ in range(rng.randint(0, 1))]


def _gen_temporal(side, make, lo):
    def gen(rng):
        lf = Labeled(_path(rng, lo), make(rng))
        items, i = _shuffle_in(rng, _pl_context(rng), lf)
        goal = Sequent(items, _pl_context(rng)) if side == "L" else Sequent(_pl_context(rng), items)
        return PL, goal, {"occ": (side, i)}
    return gen


def _suf(rng):
    return F.Suf(_pl_formula(rng), _pl_formula(rng))


GENERATORS = {
    RuleId.BoxR: gen_box_r,
    RuleId.BoxL: gen_box_l,
    RuleId.BoxTer: _ter_modal(F.Box),
    RuleId.DiaTer: _ter_modal(F.Dia),
    RuleId.TerClose: gen_ter_close,
    RuleId.Sub: gen_sub,
    RuleId.Ax: gen_ax,
    RuleId.Cut: gen_cut,
    RuleId.WkR: _gen_weaken("R"),
    RuleId.WkL: _gen_weaken("L"),
    RuleId.Con: gen_con,
    RuleId.NegR: _gen_connective("R", lambda a, b: F.Not(a)),
    RuleId.NegL: _gen_connective("L", lambda a, b: F.Not(a)),
    RuleId.AndR: _gen_connective("R", F.And),
    RuleId.AndL: _gen_connective("L", F.And),
    RuleId.OrL: _gen_connective("L", F.Or),
    RuleId.OrR: _gen_connective("R", F.Or),
    RuleId.ImpR: _gen_connective("R", F.Imp),
    RuleId.ImpL: _gen_connective("L", F.Imp),
    RuleId.DiaStep: gen_dia_step,
    RuleId.LE: gen_le,
    RuleId.LiftedSeq: gen_lifted_seq,
    RuleId.LiftedGen: gen_lifted_gen,
    RuleId.SLStar: gen_sl_star,
    RuleId.SLFrame: gen_sl_frame,
    RuleId.TempFirst: _gen_temporal("R", lambda rng: F.First(_pl_formula(rng)), 1),
    RuleId.TempSufR1: _gen_temporal("R", _suf, 2),
    RuleId.TempSufR2: _gen_temporal("R", _suf, 2),
    RuleId.TempSufL: _gen_temporal("L", _suf, 2),
}


# --- checking ----------------------------------------------------------------------

@dataclass
class RuleReport:
    rule: RuleId
    instances: int = 0
    samples: int = 0
    unknown: int = 0
    non_vacuous: int = 0
    violations: list = field(default_factory=list)


def _value(inst, seq, env):
    try:
        return eval_sequent(inst, seq, env, EVAL_BUDGET)
    except NonIntegralDivision:
        return UNKNOWN


def _shifted(env, theta):
    try:
        return dict(env, **{x: eval_expr(e, env) for x, e in theta.items()})
    except NonIntegralDivision:
        return None


def check_instance(rule, inst, goal, app, envs, report):
    if rule is RuleId.LiftedGen:
        # the premise is non-dynamic, so its validity is decided outright;
        # the sample set alone can miss a counterexample
        prem = [_value(inst, app.premises[0], g) for g in envs]
        if any(v is UNKNOWN for v in prem):
            report.unknown += len(envs)
            return
        report.samples += len(envs)
        if all(prem) and is_valid(ORACLE.check_sequent(app.premises[0])):
            report.non_vacuous += len(envs)
            for g in envs:
                if _value(inst, goal, g) is False:
                    report.violations.append((goal, g))
        return
    theta = app.params.get("subst") if rule is RuleId.Sub else None
    for g in envs:
        at = _shifted(g, theta) if theta else g
        if at is None:
            report.unknown += 1
            continue
        prem = [_value(inst, p, at) for p in app.premises]
        if any(v is UNKNOWN for v in prem):
            report.unknown += 1
            continue
        if not all(prem):
            report.samples += 1
            continue
        concl = _value(inst, goal, g)
        if concl is UNKNOWN:
            report.unknown += 1
            continue
        report.samples += 1
        report.non_vacuous += 1
        if concl is False:
            report.violations.append((goal, g))


def check_rule(rule, instances=500, samples=100, seed=0, max_draws=None):
    rng = random.Random(f"{rule.value}-{seed}")
    gen = GENERATORS[rule]
    report = RuleReport(rule)
    draws = 0
    max_draws = max_draws or instances * 40
    while report.instances < instances and draws < max_draws:
        draws += 1
        made = gen(rng)
        if made is None:
            continue
        inst, goal, params = made
        try:
            app = apply_rule(goal, rule, params, inst=inst, oracle=ORACLE)
        except RuleError:
            continue
        report.instances += 1
        envs = [{v: rng.randint(-6, 6) for v in PARAMS + ("m",)} for _ in range(samples)]
        check_instance(rule, inst, goal, app, envs, report)
    return report
