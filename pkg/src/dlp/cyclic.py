"""Proof graphs with back-links, the global trace condition, and certificate
replay.

The trace condition is decided with size-change closure: every path segment
from a companion down to one of the buds below it, followed by that bud's
back-link, contributes a graph over formula occurrences whose arcs are the
composed CP pairs (strict when some step on the way is progressive).  The
proof is accepted iff every idempotent graph in the composition closure that
returns to its companion has a strict self-arc, which holds exactly when
every infinite path carries a trace with infinitely many progressive steps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import count
from typing import Optional

from .core_model.canon import canon
from .core_model.parser import parse_label, parse_lf, parse_program, parse_sequent
from .core_model.printer import show_lf, show_program, show_sequent, show_label
from .core_model.sequent import Sequent
from .core_model.subst import NoMatch, Substitution, match_sequent, parse_subst, substitute
from .errors import DlpError, OpenGoals, RuleError, SequentMismatch, SubstitutionError
from .instantiations.base import get_instantiation
from .instantiations.termination import certificate_from_json, certificate_to_json
from .kernel import RuleApplication, RuleId, apply_rule
from .oracle import Oracle


@dataclass
class Node:
    id: str
    sequent: Sequent
    app: Optional[RuleApplication] = None
    children: list = field(default_factory=list)

    @property
    def is_open(self):
        return self.app is None


@dataclass(frozen=True)
class Backlink:
    bud: str
    companion: str
    subst: Substitution
    pairs: tuple  # (bud_flat, companion_flat)


@dataclass(frozen=True)
class Accept:
    note: str = ""

    def __bool__(self):
        return True

    def __str__(self):
        return "Accept" + (f" ({self.note})" if self.note else "")


@dataclass(frozen=True)
class Reject:
    reason: str
    code: str = "Rejected"
    node: Optional[str] = None
    witness: tuple = ()

    def __bool__(self):
        return False

    def __str__(self):
        where = f" at {self.node}" if self.node is not None else ""
        cyc = f" cycle {' -> '.join(self.witness)}" if self.witness else ""
        return f"Reject({self.code}{where}: {self.reason}{cyc})"


class ProofGraph:
    """A derivation tree whose open leaves may be closed by back-links."""

    def __init__(self, inst, root: Sequent, oracle=None, root_id="1"):
        self.inst = get_instantiation(inst) if isinstance(inst, str) else inst
        self.oracle = oracle or Oracle.from_spec()
        self.nodes: dict = {}
        self.parent: dict = {}
        self.backlinks: dict = {}
        self._ids = count(1)
        self.root = self.add_node(root, root_id)

    # -- construction
    def new_id(self):
        while True:
            k = str(next(self._ids))
            if k not in self.nodes:
                return k

    def add_node(self, seq, node_id=None):
        node_id = str(node_id) if node_id is not None else self.new_id()
        if node_id in self.nodes:
            raise DlpError(f"duplicate node id {node_id}")
        self.nodes[node_id] = Node(node_id, seq)
        return node_id

    def apply(self, node_id, rule, params=None, child_ids=None):
        """Apply a rule at an open node; returns the new child ids."""
        node = self.nodes[node_id]
        if not node.is_open or node_id in self.backlinks:
            raise DlpError(f"node {node_id} is already closed")
        app = apply_rule(node.sequent, rule, params, inst=self.inst, oracle=self.oracle)
        return self.attach(node_id, app, child_ids)

    def attach(self, node_id, app: RuleApplication, child_ids=None):
        node = self.nodes[node_id]
        if child_ids is not None and len(child_ids) != len(app.premises):
            raise DlpError(f"{app.rule.value} has {len(app.premises)} premises, "
                           f"{len(child_ids)} names given")
        kids = []
        for k, prem in enumerate(app.premises):
            kid = self.add_node(prem, child_ids[k] if child_ids else None)
            self.parent[kid] = node_id
            kids.append(kid)
        node.app, node.children = app, kids
        return kids

    def ancestors(self, node_id):
        out = []
        while node_id in self.parent:
            node_id = self.parent[node_id]
            out.append(node_id)
        return out

    def open_goals(self):
        return [n.id for n in self.nodes.values() if n.is_open and n.id not in self.backlinks]

    def subtree(self, node_id):
        out, stack = [], [node_id]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(reversed(self.nodes[k].children))
        return out

    def remove_subtree(self, node_id):
        """Reopen ``node_id`` by dropping everything below it."""
        for k in self.subtree(node_id)[1:]:
            self.nodes.pop(k, None)
            self.parent.pop(k, None)
            self.backlinks.pop(k, None)
        for bud in [b for b, bl in self.backlinks.items() if bl.companion not in self.nodes]:
            del self.backlinks[bud]
        node = self.nodes[node_id]
        node.app, node.children = None, []

    def edge_pairs(self, node_id, pos):
        return self.nodes[node_id].app.pairs[pos]

    def __len__(self):
        return len(self.nodes)


def add_backlink(graph: ProofGraph, bud, companion, theta=None):
    """Close the open leaf ``bud`` by pointing it at its ancestor ``companion``."""
    bud, companion = str(bud), str(companion)
    if bud not in graph.nodes or companion not in graph.nodes:
        raise SequentMismatch("unknown node")
    if not graph.nodes[bud].is_open:
        raise SequentMismatch(f"node {bud} is not an open leaf")
    if companion not in graph.ancestors(bud):
        raise SequentMismatch(f"{companion} is not an ancestor of {bud}")
    comp_seq, bud_seq = graph.nodes[companion].sequent, graph.nodes[bud].sequent
    if theta is None:
        try:
            theta, lp, rp = match_sequent(comp_seq, bud_seq)
        except NoMatch as exc:
            raise SequentMismatch(str(exc)) from None
    else:
        theta = Substitution(theta)
        try:
            inst = substitute(comp_seq, theta)
        except SubstitutionError as exc:
            raise SequentMismatch(str(exc)) from None
        if inst != bud_seq:
            raise SequentMismatch(f"companion {companion} under {theta} is not bud {bud}")
    pairs = _instance_pairs(comp_seq, bud_seq, theta)
    graph.backlinks[bud] = Backlink(bud, companion, Substitution(theta), pairs)
    return graph


def _instance_pairs(template, target, theta):
    """(target_flat, template_flat) pairing of an instance with its template."""
    avail = {}
    for occ in template.occurrences():
        key = (occ[0], canon(substitute(template.at(occ), theta)))
        avail.setdefault(key, []).append(template.flat_index(occ))
    out = []
    for occ in target.occurrences():
        out.append((target.flat_index(occ), avail[(occ[0], canon(target.at(occ)))].pop(0)))
    return tuple(out)


def is_progressive(graph: ProofGraph, edge, cp_pair) -> bool:
    """Whether the CP pair on tree edge ``(node, premise_position)`` is progressive."""
    node_id, pos = edge
    for a, b, prog in graph.edge_pairs(node_id, pos):
        if (a, b) == tuple(cp_pair):
            return prog
    return False


# --- global trace condition --------------------------------------------------------

def _compose(g1, g2):
    mid = {}
    for a, b, s in g2:
        mid.setdefault(a, []).append((b, s))
    best = {}
    for a, b, s in g1:
        for c, t in mid.get(b, ()):
            best[(a, c)] = best.get((a, c), False) or s or t
    return frozenset((a, c, s) for (a, c), s in best.items())


def _segment_graph(graph, top, bud):
    """Composed arcs from the occurrences of ``top`` to those of the bud's companion."""
    path = [bud]
    while path[-1] != top:
        path.append(graph.parent[path[-1]])
    path.reverse()
    n = len(graph.nodes[top].sequent.left) + len(graph.nodes[top].sequent.right)
    cur = frozenset((i, i, False) for i in range(n))
    for parent, child in zip(path, path[1:]):
        pos = graph.nodes[parent].children.index(child)
        cur = _compose(cur, frozenset(graph.edge_pairs(parent, pos)))
    bl = graph.backlinks[bud]
    return _compose(cur, frozenset((a, b, False) for a, b in bl.pairs))


def check_cyclic(graph: ProofGraph):
    """Accept iff every infinite path has a trace with infinitely many progressive steps."""
    open_ = graph.open_goals()
    if open_:
        raise OpenGoals(f"open goals: {', '.join(open_)}")
    if not graph.backlinks:
        return Accept("no cycles")
    companions = {bl.companion for bl in graph.backlinks.values()}
    edges = []
    for top in sorted(companions):
        for bud in graph.subtree(top):
            if bud in graph.backlinks:
                edges.append((top, graph.backlinks[bud].companion,
                              _segment_graph(graph, top, bud), (top, bud)))
    # closure: (src, dst, arcs) -> witness segment list
    closure = {}
    work = []
    for src, dst, g, seg in edges:
        key = (src, dst, g)
        if key not in closure:
            closure[key] = (seg,)
            work.append(key)
    while work:
        src, dst, g = work.pop()
        wit = closure[(src, dst, g)]
        for src2, dst2, g2, seg in edges:
            if src2 != dst:
                continue
            key = (src, dst2, _compose(g, g2))
            if key not in closure:
                closure[key] = wit + (seg,)
                work.append(key)
        for (s0, d0, g0), w0 in list(closure.items()):
            if d0 != src:
                continue
            key = (s0, dst, _compose(g0, g))
            if key not in closure:
                closure[key] = w0 + wit
                work.append(key)
    for (src, dst, g), wit in sorted(closure.items(), key=lambda kv: (len(kv[1]), kv[0][0], kv[0][1])):
        if src != dst or _compose(g, g) != g:
            continue
        if not any(a == b and s for a, b, s in g):
            return Reject("a cycle has no trace with a progressive step",
                          "NoProgressiveTrace", src, _cycle_nodes(graph, wit))
    return Accept(f"{len(graph.backlinks)} back-link(s)")


def _cycle_nodes(graph, segments):
    out = []
    for top, bud in segments:
        path = [bud]
        while path[-1] != top:
            path.append(graph.parent[path[-1]])
        out += list(reversed(path))
    out.append(graph.backlinks[segments[-1][1]].companion)
    return tuple(out)


def cycle_progress_counts(graph: ProofGraph):
    """For each back-link, the progressive steps of the target trace around its cycle.

    Follows every trace from the companion to the bud and back, returning
    ``{bud: max progressive steps over traces that return to their start}``
    (``None`` when no trace returns).
    """
    out = {}
    for bud, bl in graph.backlinks.items():
        path = [bud]
        while path[-1] != bl.companion:
            path.append(graph.parent[path[-1]])
        path.reverse()
        comp = graph.nodes[bl.companion].sequent
        best = None
        for start in range(len(comp.left) + len(comp.right)):
            states = {start: 0}
            for parent, child in zip(path, path[1:]):
                pos = graph.nodes[parent].children.index(child)
                nxt = {}
                for a, b, s in graph.edge_pairs(parent, pos):
                    if a in states:
                        nxt[b] = max(nxt.get(b, -1), states[a] + int(s))
                states = nxt
            back = {c: n for b, c in bl.pairs if b in states for n in [states[b]]}
            if start in back:
                best = back[start] if best is None else max(best, back[start])
        out[bud] = best
    return out


# --- certificate replay -----------------------------------------------------------------

def check_proof(graph: ProofGraph, listed_obligations=None):
    """Re-validate every rule application, obligation and back-link, then the cycles."""
    listed_obligations = listed_obligations or {}
    for node_id in graph.subtree(graph.root):
        node = graph.nodes[node_id]
        for seq_text, seq, claimed in listed_obligations.get(node_id, ()):
            verdict = graph.oracle.check_sequent(seq)
            if type(verdict).__name__ != "Valid":
                return Reject(f"listed obligation {seq_text} is {verdict}", "ObligationFailed", node_id)
            # any backend's Valid agrees; anything else was not re-derived
            if claimed is not None and not str(claimed).startswith("Valid"):
                return Reject(f"listed verdict {claimed} contradicts {verdict}", "VerdictMismatch", node_id)
        if node.is_open:
            if node_id in graph.backlinks:
                bl = graph.backlinks[node_id]
                shadow = _Shadow(graph)
                try:
                    add_backlink(shadow, node_id, bl.companion, bl.subst)
                except SequentMismatch as exc:
                    return Reject(str(exc), "SequentMismatch", node_id)
                graph.backlinks[node_id] = shadow.backlinks[node_id]
                continue
            return Reject("open goal", "OpenGoals", node_id)
        app = node.app
        params = dict(app.params)
        if app.rule is RuleId.Sub:
            params["template"] = graph.nodes[node.children[0]].sequent
        try:
            again = apply_rule(node.sequent, app.rule, params, inst=graph.inst, oracle=graph.oracle)
        except RuleError as exc:
            return Reject(exc.message, exc.code, node_id)
        if len(again.premises) != len(node.children):
            return Reject("premise count differs", "PremiseMismatch", node_id)
        for prem, kid in zip(again.premises, node.children):
            if prem != graph.nodes[kid].sequent:
                return Reject(f"premise {kid} is not what {app.rule.value} produces", "PremiseMismatch", node_id)
        if again.progressive_pairs != app.progressive_pairs:
            return Reject("progress marks differ from the replayed rule", "ProgressMismatch", node_id)
        for ob_seq in (entry[1] for entry in listed_obligations.get(node_id, ())):
            if not any(ob.kind == "valid" and ob.subject == ob_seq for ob in again.obligations):
                return Reject("listed obligation does not belong to this rule application",
                              "ObligationFailed", node_id)
        node.app = RuleApplication(again.rule, app.params, again.premises, again.obligations, again.pairs)
    try:
        return check_cyclic(graph)
    except OpenGoals as exc:
        return Reject(str(exc), "OpenGoals")


class _Shadow:
    """Graph view used to re-validate a recorded back-link without mutating it."""

    def __init__(self, graph):
        self.nodes = graph.nodes
        self.backlinks = {}
        self._graph = graph

    def ancestors(self, node_id):
        return self._graph.ancestors(node_id)


# --- parameters <-> JSON ---------------------------------------------------------------

def params_to_json(params):
    out = {}
    for k, v in params.items():
        if k == "template":
            continue
        if k == "occ":
            out[k] = [v[0], int(v[1])]
        elif k == "to":
            out[k] = [show_program(v[0]), show_label(v[1])]
        elif k == "termination":
            out[k] = certificate_to_json(v)
        elif k == "formula":
            out[k] = show_lf(v)
        elif k == "subst":
            out[k] = Substitution(v).to_json()
        elif k in ("pair", "indices", "split"):
            out[k] = [int(x) for x in v]
        elif k == "with":
            out[k] = int(v)
        else:
            raise DlpError(f"unknown rule parameter {k!r}")
    return out


def params_from_json(data, inst_name):
    out = {}
    for k, v in data.items():
        if k == "occ":
            if v[0] not in ("L", "R"):
                raise DlpError(f"bad side {v[0]!r}")
            out[k] = (v[0], int(v[1]))
        elif k == "to":
            out[k] = (parse_program(v[0], None, inst_name), parse_label(v[1], None, inst_name))
        elif k == "termination":
            out[k] = certificate_from_json(v, None, inst_name)
        elif k == "formula":
            out[k] = parse_lf(v, None, inst_name)
        elif k == "subst":
            out[k] = parse_subst("[" + ", ".join(f"{e}/{x}" for x, e in v.items()) + "]")
        elif k in ("pair", "indices", "split"):
            out[k] = tuple(int(x) for x in v)
        elif k == "with":
            out[k] = int(v)
        else:
            raise DlpError(f"unknown rule parameter {k!r}")
    return out


# --- certificates ------------------------------------------------------------------------

CERT_VERSION = 1
_TOP = {"version", "instantiation", "nodes", "backlinks", "obligations", "root", "goal", "oracle"}
_NODE = {"id", "sequent", "rule", "params", "children", "progressive"}
_LINK = {"bud", "companion", "subst"}
_OBL = {"node", "sequent", "verdict"}


class CertificateError(DlpError):
    """The certificate document does not follow the schema."""


class BrokenStructure(CertificateError):
    """Well-formed JSON whose nodes do not form a derivation tree."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


def _flat_progressive(app):
    return sorted([a, b] for a, b in app.progressive_pairs)


def to_certificate(graph: ProofGraph, goal_name=None) -> dict:
    nodes, obligations = [], []
    for node_id in graph.subtree(graph.root):
        node = graph.nodes[node_id]
        entry = {"id": node_id, "sequent": show_sequent(node.sequent)}
        if node.app is not None:
            entry.update(rule=node.app.rule.value, params=params_to_json(node.app.params),
                         children=list(node.children), progressive=_flat_progressive(node.app))
            for ob in node.app.obligations:
                if ob.kind == "valid":
                    obligations.append({"node": node_id, "sequent": show_sequent(ob.subject),
                                        "verdict": str(ob.verdict)})
        nodes.append(entry)
    doc = {
        "version": CERT_VERSION,
        "instantiation": graph.inst.name,
        "root": graph.root,
        "oracle": graph.oracle.describe(),
        "nodes": nodes,
        "backlinks": [{"bud": b, "companion": bl.companion, "subst": bl.subst.to_json()}
                      for b, bl in sorted(graph.backlinks.items())],
        "obligations": obligations,
    }
    if goal_name:
        doc["goal"] = goal_name
    return doc


def _require(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise CertificateError(f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise CertificateError(f"unknown field(s) {sorted(extra)} in {where}")
    missing = required - set(obj)
    if missing:
        raise CertificateError(f"missing field(s) {sorted(missing)} in {where}")


def from_certificate(doc: dict, oracle=None):
    """Rebuild a graph from a certificate; returns ``(graph, listed_obligations)``.

    Rule applications are recorded as claimed; ``check_proof`` replays them.
    Raises CertificateError on schema violations.
    """
    _require(doc, _TOP, {"version", "instantiation", "nodes"}, "certificate")
    if doc["version"] != CERT_VERSION:
        raise CertificateError(f"unsupported version {doc['version']!r}")
    inst_name = doc["instantiation"]
    try:
        inst = get_instantiation(inst_name)
    except DlpError as exc:
        raise CertificateError(str(exc)) from None
    entries = doc["nodes"]
    if not isinstance(entries, list) or not entries:
        raise CertificateError("nodes must be a non-empty list")
    table = {}
    for e in entries:
        _require(e, _NODE, {"id", "sequent"}, "node")
        nid = str(e["id"])
        if nid in table:
            raise CertificateError(f"duplicate node id {nid}")
        table[nid] = e
    root = str(doc.get("root", entries[0]["id"]))
    if root not in table:
        raise CertificateError(f"root {root} is not a node")
    try:
        graph = ProofGraph(inst, parse_sequent(table[root]["sequent"], None, inst_name), oracle, root)
        stack = [root]
        while stack:
            nid = stack.pop()
            e = table[nid]
            if "rule" not in e:
                continue
            kids = [str(k) for k in e.get("children", [])]
            for k in kids:
                if k not in table:
                    raise BrokenStructure(f"node {nid} names missing child {k}", nid)
                if k in graph.nodes:
                    raise BrokenStructure(f"node {k} has two parents", k)
            rule = RuleId(e["rule"])
            params = params_from_json(e.get("params", {}), inst_name)
            prems = tuple(parse_sequent(table[k]["sequent"], None, inst_name) for k in kids)
            prog = {(int(a), int(b)) for a, b in e.get("progressive", [])}
            # claimed pairs only carry progress marks; replay recomputes the rest
            pairs = tuple(tuple((a, b, True) for a, b in sorted(prog)) for _ in kids)
            app = RuleApplication(rule, params, prems, (), pairs)
            graph.attach(nid, app, kids)
            stack.extend(reversed(kids))
        unreachable = set(table) - set(graph.nodes)
        if unreachable:
            raise BrokenStructure(f"nodes not reachable from the root: {sorted(unreachable)}", None)
        for bl in doc.get("backlinks", []):
            _require(bl, _LINK, {"bud", "companion"}, "backlink")
            bud, comp = str(bl["bud"]), str(bl["companion"])
            theta = params_from_json({"subst": bl.get("subst", {})}, inst_name)["subst"]
            if bud not in graph.nodes or comp not in graph.nodes:
                raise BrokenStructure(f"back-link {bud} -> {comp} names a missing node", bud)
            # recorded without checking; check_proof re-validates
            graph.backlinks[bud] = _recorded_backlink(graph, bud, comp, theta)
        listed = {}
        for ob in doc.get("obligations", []):
            _require(ob, _OBL, {"node", "sequent"}, "obligation")
            nid = str(ob["node"])
            if nid not in graph.nodes:
                raise BrokenStructure(f"obligation names missing node {nid}", nid)
            listed.setdefault(nid, []).append(
                (ob["sequent"], parse_sequent(ob["sequent"], None, inst_name), ob.get("verdict")))
    except CertificateError:
        raise
    except (DlpError, ValueError, KeyError, TypeError, IndexError) as exc:
        raise CertificateError(f"{type(exc).__name__}: {exc}") from None
    return graph, listed


def _recorded_backlink(graph, bud, comp, theta):
    try:
        pairs = _instance_pairs(graph.nodes[comp].sequent, graph.nodes[bud].sequent, theta)
    except (KeyError, IndexError, SubstitutionError):
        pairs = ()
    return Backlink(bud, comp, theta, pairs)


def check_certificate(doc, oracle=None):
    """Parse and replay a certificate document (dict or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise CertificateError(f"not JSON: {exc}") from None
    try:
        graph, listed = from_certificate(doc, oracle)
    except BrokenStructure as exc:
        return Reject(str(exc), "BrokenStructure", exc.node)
    return check_proof(graph, listed)


# --- rendering -------------------------------------------------------------------------------

def render_table(graph: ProofGraph) -> str:
    """One row per node: id, left side, =>, right side, and how the node is closed."""
    rows = []
    for node_id in graph.subtree(graph.root):
        node = graph.nodes[node_id]
        left = ", ".join(show_lf(f) for f in node.sequent.left)
        right = ", ".join(show_lf(f) for f in node.sequent.right)
        if node.app is not None:
            how = node.app.rule.value
            if node.children:
                how += " -> " + ", ".join(node.children)
        elif node_id in graph.backlinks:
            bl = graph.backlinks[node_id]
            how = f"back-link to {bl.companion} {bl.subst}"
        else:
            how = "open"
        rows.append((node_id, left, right, how))
    w_id = max(len(r[0]) for r in rows)
    return "\n".join(f"{i:>{w_id}}: {l}  =>  {r}    [{h}]" for i, l, r, h in rows)


__all__ = ["ProofGraph", "Node", "Backlink", "Accept", "Reject", "add_backlink", "is_progressive",
           "check_cyclic", "check_proof", "to_certificate", "from_certificate", "check_certificate",
           "CertificateError", "render_table", "cycle_progress_counts", "params_to_json",
           "params_from_json"]
