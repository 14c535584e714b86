"""Heuristic proof search.

The search works on one dynamic target per branch (the first modality on the
right).  At every node it tries, in this fixed order:

1. propositional decomposition of formulas that contain modalities,
2. closing the goal through its non-dynamic part (Ax or the oracle),
3. a back-link when the target's program was met before on this branch,
4. generalization: a Sub node to the anti-unified label, then continue,
5. one symbolic step of the target, case-splitting undecided guards first.

Whatever is returned as a proof has passed ``check_proof``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core_model import formula as F
from .core_model import program as P
from .core_model.canon import canon
from .core_model.sequent import Labeled, Sequent, lf_dynamic
from .core_model.subst import FreshSupply, NoMatch, anti_unify, match_sequent
from .cyclic import ProofGraph, Reject, add_backlink, check_proof
from .errors import DlpError, KindMismatch, RuleError
from .instantiations.base import get_instantiation, step
from .instantiations.termination import Unroll
from .kernel import RuleId, guard_case_split
from .oracle import Oracle, is_valid

REASONS = ("BudgetExceeded", "OracleUnknown", "NoBacklink", "TerminationUnknown")


@dataclass
class SearchConfig:
    max_depth: int = 200
    max_nodes: int = 500
    oracle: Optional[str] = None  # "bounded:B" or "smt"
    variants: tuple = ()          # Variant certificates, matched to loops by ``Variant.loop``
    unroll: int = 64              # fallback termination search depth
    alloc_base: Optional[int] = None
    generalize: bool = True

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_nodes <= 0 or self.unroll < 0:
            raise ValueError("search budgets must be positive")


@dataclass(frozen=True)
class SearchTraceEntry:
    node: str
    key: object      # canonical program of the target modality, with its body and kind
    label: object
    template: bool = False


@dataclass
class Failure:
    partial: ProofGraph
    reason: str
    detail: str = ""

    def __bool__(self):
        return False

    def __str__(self):
        return f"Failure({self.reason}{': ' + self.detail if self.detail else ''})"


class _Stop(Exception):
    def __init__(self, reason, detail=""):
        super().__init__(f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


def loop_generalize(old: SearchTraceEntry, new: SearchTraceEntry, supply: FreshSupply):
    """Template label for two visits of the same program.

    Returns ``(template, theta_old, theta_new)``; instantiating the template
    with either substitution gives back that visit's label.  Equal labels
    give the identity proposal.
    """
    if old.key != new.key:
        raise KindMismatch("entries belong to different programs")
    return anti_unify(old.label, new.label, supply)


def _target(seq):
    for i, lf in enumerate(seq.right):
        if isinstance(lf, Labeled) and isinstance(lf.formula, (F.Box, F.Dia)):
            return ("R", i), lf
    return None, None


def _key(lf):
    f = lf.formula
    return (type(f).__name__, canon(f.prog), canon(f.body))


def _label_vars(label):
    return set(label.free_vars())


class _Search:
    def __init__(self, inst, goal, cfg: SearchConfig, oracle):
        self.inst = inst
        self.cfg = cfg
        self.oracle = oracle
        self.graph = ProofGraph(inst, goal, oracle)
        avoid = set()
        for lf in list(goal.left) + list(goal.right):
            avoid |= _sequent_vars(lf)
        self.supply = FreshSupply(avoid)
        self.unproven_termination = False

    # -- helpers
    def apply(self, node, rule, params=None):
        kids = self.graph.apply(node, rule, params)
        if len(self.graph) > self.cfg.max_nodes:
            raise _Stop("BudgetExceeded", f"more than {self.cfg.max_nodes} nodes")
        return kids

    def seq(self, node):
        return self.graph.nodes[node].sequent

    # -- main loop
    def prove(self, node, history, depth):
        if depth > self.cfg.max_depth:
            raise _Stop("BudgetExceeded", f"branch deeper than {self.cfg.max_depth}")
        seq = self.seq(node)
        rule_occ = _propositional(seq)
        if rule_occ is not None:
            rule, occ = rule_occ
            for kid in self.apply(node, rule, {"occ": occ}):
                self.prove(kid, history, depth + 1)
            return
        if self.try_close(node, seq):
            return
        occ, lf = _target(seq)
        if occ is None:
            raise _Stop("OracleUnknown", f"cannot close {seq}")
        if isinstance(lf.formula.prog, P.Ter):
            rule = RuleId.BoxTer if isinstance(lf.formula, F.Box) else RuleId.DiaTer
            (kid,) = self.apply(node, rule, {"occ": occ})
            return self.prove(kid, history, depth + 1)
        key = _key(lf)
        earlier = [e for e in history if e.key == key]
        if earlier:
            if self.try_backlink(node, seq, occ, earlier):
                return
            if self.cfg.generalize and not any(e.template for e in earlier):
                return self.generalize(node, seq, occ, lf, earlier[-1], history, depth)
            raise _Stop("NoBacklink", f"program revisited at node {node} without a matching companion")
        entry = SearchTraceEntry(node, key, lf.label)
        self.step(node, seq, occ, lf, history + [entry], depth)

    def try_close(self, node, seq):
        """Ax, or the non-dynamic part of the goal is valid on its own."""
        rights = [canon(f) for f in seq.right]
        for i, f in enumerate(seq.left):
            if canon(f) in rights:
                self.apply(node, RuleId.Ax, {"pair": (i, rights.index(canon(f)))})
                return True
        plain = Sequent([f for f in seq.left if not lf_dynamic(f)],
                        [f for f in seq.right if not lf_dynamic(f)])
        if not plain.right and not plain.left:
            return False
        verdict = self.oracle.check_sequent(plain)
        if not is_valid(verdict):
            if not _target(seq)[1] and type(verdict).__name__ == "Unknown":
                raise _Stop("OracleUnknown", str(verdict))
            return False
        node = self.weaken_to(node, plain)
        self.apply(node, RuleId.TerClose)
        return True

    def weaken_to(self, node, keep: Sequent):
        """Weaken ``node`` down to the formulas of ``keep`` (kept in order)."""
        seq = self.seq(node)
        for side in ("R", "L"):
            want = list(keep.side(side))
            drop = []
            for i, f in enumerate(seq.side(side)):
                if want and f == want[0]:
                    want.pop(0)
                else:
                    drop.append(i)
            if drop:
                rule = RuleId.WkR if side == "R" else RuleId.WkL
                (node,) = self.apply(node, rule, {"indices": drop})
                seq = self.seq(node)
        return node

    # -- cycles
    def _context_choices(self, seq, occ, lf):
        """Candidate reductions of the goal: with current-state facts, then target only."""
        target_only = Sequent([], [lf])
        facts = [f for f in seq.left
                 if isinstance(f, Labeled) and not lf_dynamic(f) and canon(f.label) == canon(lf.label)]
        out = []
        if facts:
            out.append(Sequent(facts, [lf]))
        out.append(target_only)
        return out

    def try_backlink(self, node, seq, occ, earlier):
        lf = seq.at(occ)
        for entry in reversed(earlier):
            comp_seq = self.seq(entry.node)
            for cand in self._context_choices(seq, occ, lf):
                try:
                    match_sequent(comp_seq, cand)
                except NoMatch:
                    continue
                bud = self.weaken_to(node, cand)
                add_backlink(self.graph, bud, entry.node)
                return True
        return False

    def generalize(self, node, seq, occ, lf, old, history, depth):
        new = SearchTraceEntry(node, old.key, lf.label)
        try:
            template_label, _, theta_new = loop_generalize(old, new, self.supply)
        except KindMismatch as exc:
            raise _Stop("NoBacklink", str(exc)) from None
        last = None
        for cand in self._context_choices(seq, occ, lf):
            template = _relabel(cand, lf.label, template_label)
            flagged = self.unproven_termination
            try:
                start = self.weaken_to(node, cand)
                (top,) = self.apply(start, RuleId.Sub, {"template": template, "subst": theta_new})
                entry = SearchTraceEntry(top, old.key, template_label, template=True)
                self.step(top, self.seq(top), ("R", len(template.right) - 1),
                          template.right[-1], history + [entry], depth + 1)
                return
            except _Stop as exc:
                if exc.reason == "BudgetExceeded":
                    raise
                last = exc
                self.graph.remove_subtree(node)
                self.unproven_termination = flagged
            except RuleError as exc:
                last = _Stop("NoBacklink", str(exc))
                self.graph.remove_subtree(node)
        raise last

    # -- symbolic execution
    def step(self, node, seq, occ, lf, history, depth):
        hyps = [f for f in seq.left if isinstance(f, Labeled) and not lf_dynamic(f)]
        res = step(self.inst, hyps, lf.formula.prog, lf.label, self.oracle)
        if res.undecided:
            at = {(): node}
            for path, app in guard_case_split(seq, res.undecided[0], inst=self.inst, oracle=self.oracle):
                for k, kid in enumerate(self.graph.attach(at[path], app)):
                    at[path + (k,)] = kid
                if len(self.graph) > self.cfg.max_nodes:
                    raise _Stop("BudgetExceeded", f"more than {self.cfg.max_nodes} nodes")
            for leaf in (at[(1, 0)], at[(1, 1)]):
                self.step(leaf, self.seq(leaf), occ, lf, history, depth + 1)
            return
        if isinstance(lf.formula, F.Box):
            kids = self.apply(node, RuleId.BoxR, {"occ": occ})
        else:
            kids = self.dia_step(node, seq, occ, lf, res)
        for kid in kids:
            self.prove(kid, history, depth + 1)

    def dia_step(self, node, seq, occ, lf, res):
        if not res.successors:
            raise _Stop("NoBacklink", "the program is stuck")
        s = res.successors[0]
        cert = self.termination_certificate(lf.formula.prog)
        params = {"occ": occ, "to": (s.prog, s.label), "termination": cert}
        kids = self.apply(node, RuleId.DiaStep, params)
        if self.graph.nodes[node].app.termination_proof() is None:
            self.unproven_termination = True
        return kids

    def termination_certificate(self, prog):
        loops = set(P.loops_of(prog))
        own = tuple(v for v in self.cfg.variants if v.loop is None or v.loop in loops)
        return own + (Unroll(self.cfg.unroll),) if own else Unroll(self.cfg.unroll)


def _sequent_vars(lf):
    out = set()
    if isinstance(lf, Labeled):
        out |= _label_vars(lf.label)
        out |= set(F.formula_vars(lf.formula))
    return out


def _relabel(seq, old, new):
    def swap(f):
        return Labeled(new, f.formula) if canon(f.label) == canon(old) else f
    return Sequent([swap(f) for f in seq.left], [swap(f) for f in seq.right])


_SINGLE = ((RuleId.NegR, "R", F.Not), (RuleId.NegL, "L", F.Not), (RuleId.AndL, "L", F.And),
           (RuleId.ImpR, "R", F.Imp), (RuleId.OrR, "R", F.Or))
_BRANCHING = ((RuleId.AndR, "R", F.And), (RuleId.OrL, "L", F.Or), (RuleId.ImpL, "L", F.Imp))


def _propositional(seq):
    """The next propositional rule to apply to a formula containing a modality."""
    for group in (_SINGLE, _BRANCHING):
        for rule, side, kind in group:
            for i, lf in enumerate(seq.side(side)):
                if isinstance(lf, Labeled) and isinstance(lf.formula, kind) and lf_dynamic(lf):
                    return rule, (side, i)
    return None


def auto_prove(goal: Sequent, cfg: SearchConfig | None = None, inst="wp", oracle=None):
    """Search for a cyclic proof of ``goal``; a ProofGraph on success, else Failure."""
    cfg = cfg or SearchConfig()
    if isinstance(inst, str):
        inst = get_instantiation(inst, cfg.alloc_base)
    oracle = oracle or Oracle.from_spec(cfg.oracle)
    search = _Search(inst, goal, cfg, oracle)
    try:
        search.prove(search.graph.root, [], 0)
    except _Stop as exc:
        return Failure(search.graph, exc.reason, exc.detail)
    except (RuleError, DlpError) as exc:
        return Failure(search.graph, "NoBacklink", str(exc))
    verdict = check_proof(search.graph)
    if isinstance(verdict, Reject):
        if verdict.code == "NoProgressiveTrace" and search.unproven_termination:
            return Failure(search.graph, "TerminationUnknown", str(verdict))
        reason = "OracleUnknown" if verdict.code == "ObligationFailed" else "NoBacklink"
        return Failure(search.graph, reason, str(verdict))
    return search.graph


__all__ = ["SearchConfig", "SearchTraceEntry", "Failure", "auto_prove", "loop_generalize", "REASONS"]
