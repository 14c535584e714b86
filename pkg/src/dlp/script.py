"""Proof scripts: one command per line, applied to the focused open goal.

Commands (indices are 0-based; ``at L1`` / ``at R0`` overrides the target
occurrence; ``=> a, b`` names the new nodes)::

    boxR [split]                    dia [via (<p>, <l>)] [variant <e> | unroll <k>]
    boxL via (<p>, <l>) [variant <e> | unroll <k>]
    boxTer   diaTer   close   ax    cut <labeled formula>
    sub template <sequent> under [e/x, ...]
    backlink to <id> [via [e/x, ...]]
    wkL <i> ...   wkR <i> ...   con <L|R> <i> [with <j>]
    negR negL andR andL orL orR impR impL [<i>]
    le <i> <formula>   lift seq [<label>]   lift gen [<label>]
    slstar <addr>, ...   slframe   tfirst   tsufR1   tsufR2   tsufL
    goal <id>

``via`` may also name the source configuration:
``via (<p>, <l>) -> (<p'>, <l'>)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .core_model.canon import canon
from .core_model.parser import Parser, parse_expr, parse_formula, parse_label, parse_lf, parse_sequent
from .core_model.sequent import Labeled
from .core_model.subst import parse_subst
from .cyclic import ProofGraph, add_backlink
from .errors import DlpError, ParseError, RuleError
from .instantiations.termination import Unroll, Variant
from .kernel import RuleId, find_target, guard_case_split
from .instantiations.base import step


class ScriptError(DlpError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


_NAMES = re.compile(r"\s=>\s*([\w.']+(?:\s*,\s*[\w.']+)*)\s*$")
_AT = re.compile(r"\sat\s+([LR])(\d+)\s*$")

_SIMPLE = {
    "boxTer": RuleId.BoxTer, "diaTer": RuleId.DiaTer, "close": RuleId.TerClose,
    "negR": RuleId.NegR, "negL": RuleId.NegL, "andR": RuleId.AndR, "andL": RuleId.AndL,
    "orL": RuleId.OrL, "orR": RuleId.OrR, "impR": RuleId.ImpR, "impL": RuleId.ImpL,
    "slframe": RuleId.SLFrame, "tfirst": RuleId.TempFirst, "tsufR1": RuleId.TempSufR1,
    "tsufR2": RuleId.TempSufR2, "tsufL": RuleId.TempSufL,
}
_NATURAL_SIDE = {
    RuleId.NegR: "R", RuleId.NegL: "L", RuleId.AndR: "R", RuleId.AndL: "L", RuleId.OrL: "L",
    RuleId.OrR: "R", RuleId.ImpR: "R", RuleId.ImpL: "L", RuleId.SLFrame: "R",
    RuleId.TempSufR1: "R", RuleId.TempSufR2: "R", RuleId.TempSufL: "L",
}
_UNTARGETED = {RuleId.TerClose}


@dataclass
class _Cmd:
    word: str
    rest: str
    occ: tuple | None
    names: list | None


def _split_command(text):
    names = None
    m = _NAMES.search(text)
    if m:
        names = [n.strip() for n in m.group(1).split(",")]
        text = text[:m.start()]
    occ = None
    m = _AT.search(" " + text)
    if m:
        occ = (m.group(1), int(m.group(2)))
        text = (" " + text)[:m.start()].strip()
    word, _, rest = text.strip().partition(" ")
    return _Cmd(word, rest.strip(), occ, names)


class ScriptRunner:
    """Applies script commands to a ProofGraph."""

    def __init__(self, graph: ProofGraph, env=None):
        self.graph = graph
        self.env = env or {}
        self.focus = graph.root

    @property
    def inst_name(self):
        return self.graph.inst.name

    # -- focus handling
    def open_in_order(self):
        opened = set(self.graph.open_goals())
        return [k for k in self.graph.subtree(self.graph.root) if k in opened]

    def _refocus(self):
        order = self.open_in_order()
        self.focus = order[0] if order else None

    def run(self, lines):
        for no, text in lines:
            try:
                self.command(text)
            except ScriptError as exc:
                if exc.line is None:
                    raise ScriptError(str(exc), no) from None
                raise
            except DlpError as exc:
                raise ScriptError(str(exc), no) from None
        return self.graph

    # -- dispatch
    def command(self, text):
        cmd = _split_command(text)
        if cmd.word == "goal":
            if cmd.rest not in self.graph.nodes:
                raise ScriptError(f"no node {cmd.rest!r}")
            if cmd.rest not in self.graph.open_goals():
                raise ScriptError(f"node {cmd.rest} is not an open goal")
            self.focus = cmd.rest
            return
        if self.focus is None:
            raise ScriptError("no open goal left")
        handler = getattr(self, "_cmd_" + cmd.word, None)
        if handler is not None:
            handler(cmd)
        elif cmd.word in _SIMPLE:
            rule = _SIMPLE[cmd.word]
            params = {}
            if rule not in _UNTARGETED:
                params["occ"] = self._occ(cmd, rule)
            self._apply(rule, params, cmd.names)
        else:
            raise ScriptError(f"unknown command {cmd.word!r}")
        self._refocus()

    def _apply(self, rule, params, names=None):
        return self.graph.apply(self.focus, rule, params, names)

    def _goal(self):
        return self.graph.nodes[self.focus].sequent

    def _occ(self, cmd, rule, side=None):
        if cmd.occ is not None:
            return cmd.occ
        if cmd.rest and cmd.rest.split()[0].isdigit():
            side = side or _NATURAL_SIDE.get(rule)
            if side is None:
                raise ScriptError("give the side with 'at L<i>' or 'at R<i>'")
            return (side, int(cmd.rest.split()[0]))
        occ = find_target(self._goal(), rule)
        if occ is None:
            raise ScriptError(f"{rule.value}: no suitable formula in the goal")
        return occ

    # -- parsing helpers
    def _parser(self, text):
        return Parser(text, self.env, self.inst_name)

    def _config(self, p):
        p.expect("(")
        prog = p.program()
        p.expect(",")
        lab = p.label()
        p.expect(")")
        return prog, lab

    def _via(self, text):
        """Parse ``via (p, l) [-> (p', l')] [variant e [invariant f] | unroll k]``."""
        to, cert = None, None
        rest = text.strip()
        m = re.search(r"\b(variant|unroll)\b", rest)
        tail = ""
        if m:
            rest, tail = rest[:m.start()].strip(), rest[m.start():].strip()
        if rest:
            if not rest.startswith("via"):
                raise ScriptError(f"expected 'via', found {rest!r}")
            p = self._parser(rest[3:])
            to = self._config(p)
            if p.at("->"):
                p.advance()
                to = self._config(p)
            p.done()
        if tail.startswith("unroll"):
            cert = Unroll(int(tail.split()[1]))
        elif tail.startswith("variant"):
            body = tail[len("variant"):]
            inv = None
            if " invariant " in body:
                body, inv_text = body.split(" invariant ", 1)
                inv = parse_formula(inv_text, self.env, self.inst_name)
            cert = Variant(parse_expr(body.strip(), self.env), inv)
        return to, cert

    # -- commands with arguments
    def _cmd_boxR(self, cmd):
        occ = self._occ(cmd, RuleId.BoxR, "R")
        if cmd.rest.split()[:1] == ["split"]:
            self._split_then(RuleId.BoxR, occ, self.focus)
            return
        self._apply(RuleId.BoxR, {"occ": occ}, cmd.names)

    def _split_then(self, rule, occ, node_id):
        """Case-split undecided guards at ``node_id`` until ``rule`` applies."""
        g = self.graph
        seq = g.nodes[node_id].sequent
        target = seq.at(occ)
        res = step(g.inst, [f for f in seq.left if isinstance(f, Labeled)],
                   target.formula.prog, target.label, g.oracle)
        if not res.undecided:
            g.apply(node_id, rule, {"occ": occ})
            return
        at = {(): node_id}
        for path, app in guard_case_split(seq, res.undecided[0], inst=g.inst, oracle=g.oracle):
            kids = g.attach(at[path], app)
            for k, kid in enumerate(kids):
                at[path + (k,)] = kid
        for leaf in (at[(1, 0)], at[(1, 1)]):
            self._split_then(rule, occ, leaf)

    def _cmd_boxL(self, cmd):
        occ = self._occ(cmd, RuleId.BoxL, "L")
        to, cert = self._via(cmd.rest)
        if to is None:
            raise ScriptError("boxL needs 'via (<program>, <label>)'")
        params = {"occ": occ, "to": to}
        if cert is not None:
            params["termination"] = cert
        self._apply(RuleId.BoxL, params, cmd.names)

    def _cmd_dia(self, cmd):
        occ = self._occ(cmd, RuleId.DiaStep)
        to, cert = self._via(cmd.rest)
        params = {"occ": occ}
        if occ[0] == "R":
            if to is None:
                to = self._only_successor(occ)
            params["to"] = to
            if cert is not None:
                params["termination"] = cert
        self._apply(RuleId.DiaStep, params, cmd.names)

    def _only_successor(self, occ):
        seq = self._goal()
        lf = seq.at(occ)
        res = step(self.graph.inst, list(seq.left), lf.formula.prog, lf.label, self.graph.oracle)
        if len(res.successors) != 1 or res.undecided:
            raise ScriptError("the step is not deterministic here; give 'via (<program>, <label>)'")
        s = res.successors[0]
        return (s.prog, s.label)

    def _cmd_ax(self, cmd):
        params = {}
        if cmd.rest:
            i, j = cmd.rest.split()
            params["pair"] = (int(i), int(j))
        self._apply(RuleId.Ax, params, cmd.names)

    def _cmd_cut(self, cmd):
        lf = parse_lf(cmd.rest, self.env, self.inst_name)
        self._apply(RuleId.Cut, {"formula": lf}, cmd.names)

    def _cmd_sub(self, cmd):
        m = re.match(r"^template\s+(.*)\s+under\s+(\[.*\])$", cmd.rest, re.S)
        if not m:
            raise ScriptError("expected 'sub template <sequent> under [e/x, ...]'")
        template = parse_sequent(m.group(1), self.env, self.inst_name)
        theta = parse_subst(m.group(2))
        self._apply(RuleId.Sub, {"template": template, "subst": theta}, cmd.names)

    def _cmd_backlink(self, cmd):
        m = re.match(r"^to\s+([\w.']+)(?:\s+via\s+(\[.*\]))?$", cmd.rest)
        if not m:
            raise ScriptError("expected 'backlink to <id> [via [e/x, ...]]'")
        theta = parse_subst(m.group(2)) if m.group(2) else None
        add_backlink(self.graph, self.focus, m.group(1), theta)

    def _weak(self, cmd, rule):
        idx = [int(t) for t in cmd.rest.replace(",", " ").split()]
        self._apply(rule, {"indices": idx}, cmd.names)

    def _cmd_wkL(self, cmd):
        self._weak(cmd, RuleId.WkL)

    def _cmd_wkR(self, cmd):
        self._weak(cmd, RuleId.WkR)

    def _cmd_con(self, cmd):
        m = re.match(r"^([LR])\s+(\d+)(?:\s+with\s+(\d+))?$", cmd.rest)
        if not m:
            raise ScriptError("expected 'con <L|R> <i> [with <j>]'")
        params = {"occ": (m.group(1), int(m.group(2)))}
        if m.group(3):
            params["with"] = int(m.group(3))
        self._apply(RuleId.Con, params, cmd.names)

    def _cmd_le(self, cmd):
        idx, _, text = cmd.rest.partition(" ")
        try:
            new = parse_lf(text, self.env, self.inst_name)
        except ParseError:
            new = parse_formula(text, self.env, self.inst_name)
        self._apply(RuleId.LE, {"occ": ("L", int(idx)), "formula": new}, cmd.names)

    def _cmd_lift(self, cmd):
        kind, _, lab_text = cmd.rest.partition(" ")
        rule = {"seq": RuleId.LiftedSeq, "gen": RuleId.LiftedGen}.get(kind)
        if rule is None:
            raise ScriptError("expected 'lift seq' or 'lift gen'")
        params = {}
        if rule is RuleId.LiftedSeq:
            params["occ"] = cmd.occ or find_target(self._goal(), rule)
            if params["occ"] is None:
                raise ScriptError("no box over a sequence to lift")
        if lab_text.strip():
            want = parse_label(lab_text, self.env, self.inst_name)
            target = self._goal().at(params["occ"]) if "occ" in params else self._goal().right[0]
            if canon(target.label) != canon(want):
                raise ScriptError(f"the target is labeled {target.label}, not {want}")
        self._apply(rule, params, cmd.names)

    def _cmd_slstar(self, cmd):
        addrs = [int(a) for a in re.findall(r"-?\d+", cmd.rest)]
        occ = cmd.occ or find_target(self._goal(), RuleId.SLStar)
        self._apply(RuleId.SLStar, {"occ": occ, "split": addrs}, cmd.names)


def run_script(inst, goal, lines, env=None, oracle=None, root_id="1") -> ProofGraph:
    """Build a proof graph for ``goal`` from ``lines`` of ``(line number, text)``."""
    graph = ProofGraph(inst, goal, oracle, root_id)
    if lines and isinstance(lines[0], str):
        lines = list(enumerate(lines, 1))
    return ScriptRunner(graph, env).run(lines)


__all__ = ["ScriptError", "ScriptRunner", "run_script"]
