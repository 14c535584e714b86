"""Termination side deductions: does some execution of (prog, label) end
in every model of the context?

Two certificate kinds: ``Unroll(k)`` searches for a terminating path of at
most ``k`` symbolic steps (case-splitting undecided guards), ``Variant``
discharges a while loop with a decreasing, positive measure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core_model import formula as F
from ..core_model import program as P
from ..core_model.expr import Expr, Num, Var
from ..core_model.label import Store
from ..core_model.sequent import Labeled
from ..core_model.subst import FreshSupply
from .base import step


@dataclass(frozen=True)
class Unroll:
    k: int


@dataclass(frozen=True)
class Variant:
    expr: Expr
    invariant: Optional[object] = None
    loop: Optional[object] = None  # the While it belongs to; None matches any


@dataclass(frozen=True)
class TerminationProof:
    certificate: object
    steps: int

    def to_json(self):
        return certificate_to_json(self.certificate)


@dataclass(frozen=True)
class TerminationUnknown:
    reason: str


def certificate_to_json(cert):
    if isinstance(cert, Unroll):
        return {"unroll": cert.k}
    if isinstance(cert, Variant):
        out = {"variant": str(cert.expr)}
        if cert.invariant is not None:
            out["invariant"] = str(cert.invariant)
        if cert.loop is not None:
            out["loop"] = str(cert.loop)
        return out
    if isinstance(cert, tuple):
        return {"all": [certificate_to_json(c) for c in cert]}
    raise TypeError(cert)


def certificate_from_json(data, env=None, inst=None):
    from ..core_model.parser import parse_expr, parse_formula, parse_program
    if "unroll" in data:
        return Unroll(int(data["unroll"]))
    if "variant" in data:
        inv = parse_formula(data["invariant"], env, inst) if data.get("invariant") else None
        loop = parse_program(data["loop"], env, inst) if data.get("loop") else None
        return Variant(parse_expr(data["variant"], env), inv, loop)
    if "all" in data:
        return tuple(certificate_from_json(c, env, inst) for c in data["all"])
    raise ValueError(f"unknown termination certificate {data!r}")


class _Search:
    def __init__(self, inst, oracle, variants, fuel, node_budget):
        self.inst = inst
        self.oracle = oracle
        self.variants = variants
        self.fuel = fuel
        self.nodes = 0
        self.node_budget = node_budget
        self.used = 0
        self.supply = FreshSupply()

    def variant_for(self, loop):
        for v in self.variants:
            if v.loop is None or v.loop == loop:
                return v
        return None

    def run(self, prog, label, hyps, fuel):
        self.nodes += 1
        if self.nodes > self.node_budget:
            return False
        if isinstance(prog, P.Ter):
            return True
        head, rest = _split_head(prog)
        if isinstance(head, P.While) and isinstance(label, Store):
            var = self.variant_for(head)
            if var is not None:
                return self.by_variant(head, rest, var, label, hyps, fuel)
        if fuel <= 0:
            return False
        res = step(self.inst, hyps, prog, label, self.oracle)
        if res.undecided:
            g = res.undecided[0]
            neg = Labeled(g.label, F.negate(g.formula))
            return (self.run(prog, label, hyps + [g], fuel)
                    and self.run(prog, label, hyps + [neg], fuel))
        self.used += 1
        return any(self.run(s.prog, s.label, hyps + list(s.guards), fuel - 1)
                   for s in res.successors)

    def by_variant(self, loop, rest, var, label, hyps, fuel):
        inv = var.invariant or F.TRUE
        if not self.oracle.entails(hyps, Labeled(label, inv)):
            return False
        tau = self.fresh_store(label)
        pre = [Labeled(tau, inv), Labeled(tau, loop.cond)]
        if not self.oracle.entails(pre, Labeled(tau, F.Cmp(">", var.expr, _zero()))):
            return False
        if _has_loop(loop.body):
            return False
        before = tau.apply(var.expr)
        for final, branch in self.execute(loop.body, tau, pre, fuel):
            if final is None:
                return False
            if not self.oracle.entails(branch, Labeled(final, inv)):
                return False
            after = final.apply(var.expr)
            if not self.oracle.entails(branch, Labeled(Store(()), F.Cmp("<", after, before))):
                return False
        if rest is None:
            return True
        tau2 = self.fresh_store(label)
        post = [Labeled(tau2, inv), Labeled(tau2, F.negate(loop.cond))]
        return self.run(rest, tau2, post, fuel)

    def fresh_store(self, label):
        avoid = set(label.free_vars()) | set(label.domain)
        self.supply.avoid |= avoid
        return Store.of({x: Var(self.supply.fresh()) for x in sorted(label.domain)})

    def execute(self, prog, label, hyps, fuel):
        """Symbolically run a loop-free program to completion, splitting guards.

        Yields (final label, branch hypotheses); final is None when a branch
        blocks or runs out of fuel.
        """
        if isinstance(prog, P.Ter):
            yield label, hyps
            return
        if fuel <= 0:
            yield None, hyps
            return
        res = step(self.inst, hyps, prog, label, self.oracle)
        if res.undecided:
            g = res.undecided[0]
            neg = Labeled(g.label, F.negate(g.formula))
            yield from self.execute(prog, label, hyps + [g], fuel)
            yield from self.execute(prog, label, hyps + [neg], fuel)
            return
        if not res.successors:
            yield None, hyps
            return
        for s in res.successors:
            yield from self.execute(s.prog, s.label, hyps + list(s.guards), fuel - 1)


def _zero():
    return Num(0)


def _split_head(prog):
    if isinstance(prog, P.Seq):
        head, rest = _split_head(prog.first)
        if rest is None:
            return head, prog.second
        return head, P.Seq(rest, prog.second)
    return prog, None


def _has_loop(p):
    return bool(P.loops_of(p))


def terminates(inst, gamma, prog, label, certificate, oracle=None, node_budget=20_000):
    """TerminationProof when a terminating execution exists in every model of gamma."""
    from ..oracle import Oracle
    oracle = oracle or Oracle.from_spec()
    hyps = [lf for lf in gamma if isinstance(lf, Labeled) and not F.is_dynamic(lf.formula)]
    certs = certificate if isinstance(certificate, tuple) else (certificate,)
    fuel = max([c.k for c in certs if isinstance(c, Unroll)], default=64)
    variants = [c for c in certs if isinstance(c, Variant)]
    search = _Search(inst, oracle, variants, fuel, node_budget)
    if search.run(prog, label, hyps, fuel):
        return TerminationProof(certificate, search.used)
    return TerminationUnknown("no terminating execution found with the certificate")


__all__ = ["Unroll", "Variant", "TerminationProof", "TerminationUnknown", "terminates",
           "certificate_to_json", "certificate_from_json"]
