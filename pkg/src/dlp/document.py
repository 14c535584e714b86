"""Input documents (``.dlp`` files).

A document fixes one instantiation and then lists named definitions, goals,
proof scripts and execution requests::

    instantiation: wp
    program W := while n > 0 do s := s + n; n := n - 1 end
    formula phi := s = ((N + 1) * N) / 2
    label s1 := {n -> N, s -> 0}
    goal nu : s1 : n >= 0 |- s1 : [W] phi
    sample N 0 15
    proof nu
      boxR
      ...
    qed
    world n = 5, s = 0
    exec W
    check ev x > 0

A line that starts with whitespace continues the previous statement (outside
proof blocks).  ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .core_model.parser import parse_formula, parse_label, parse_program, parse_sequent
from .core_model.sequent import Labeled
from .errors import DlpError, ParseError
from .instantiations.base import get_instantiation


class DocumentError(DlpError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass
class ProofScript:
    goal: str
    lines: list  # (line number, command text)


@dataclass
class Document:
    inst: object
    env: dict = field(default_factory=dict)
    goals: dict = field(default_factory=dict)
    proofs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    worlds: list = field(default_factory=list)
    execs: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    path: Path | None = None

    @property
    def inst_name(self):
        return self.inst.name


_DEF = re.compile(r"^(program|formula|label)\s+([A-Za-z_][A-Za-z0-9_']*)\s*:=\s*(.+)$", re.S)
_GOAL = re.compile(r"^goal\s+([A-Za-z_][A-Za-z0-9_']*)\s*:\s*(.+)$", re.S)
_SAMPLE = re.compile(r"^sample\s+([A-Za-z_][A-Za-z0-9_']*)\s+(-?\d+)\s+(-?\d+)$")
_WORLD_ITEM = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_']*)\s*=\s*(-?\d+)\s*$")


def _strip(line):
    return line.split("#", 1)[0].rstrip()


def _statements(text):
    """Yield (line number, statement, proof lines or None)."""
    lines = text.splitlines()
    i = 0
    pending = None
    while i < len(lines):
        raw = _strip(lines[i])
        no = i + 1
        i += 1
        if not raw.strip():
            continue
        if raw[0].isspace() and pending is not None:
            pending = (pending[0], pending[1] + " " + raw.strip())
            continue
        if pending is not None:
            yield pending[0], pending[1], None
            pending = None
        stmt = raw.strip()
        if stmt.startswith("proof ") or stmt == "proof":
            body = []
            while i < len(lines):
                inner = _strip(lines[i]).strip()
                i += 1
                if inner == "qed":
                    break
                if inner:
                    body.append((i, inner))
            else:
                raise DocumentError("proof block without qed", no)
            yield no, stmt, body
            continue
        pending = (no, stmt)
    if pending is not None:
        yield pending[0], pending[1], None


def parse_world(text):
    """``"n=5, s=0"`` -> ``{"n": 5, "s": 0}``."""
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        m = _WORLD_ITEM.match(item)
        if not m:
            raise ParseError(f"bad world entry {item!r}")
        out[m.group(1)] = int(m.group(2))
    return out


def parse_document(text, path=None, alloc_base=None) -> Document:
    doc = None
    for no, stmt, body in _statements(text):
        try:
            if doc is None:
                m = re.match(r"^instantiation\s*:\s*(\w+)$", stmt)
                if not m:
                    raise DocumentError("the first statement must be 'instantiation: <name>'", no)
                doc = Document(get_instantiation(m.group(1), alloc_base), path=path)
                continue
            _statement(doc, no, stmt, body)
        except DocumentError:
            raise
        except DlpError as exc:
            raise DocumentError(str(exc), no) from None
    if doc is None:
        raise DocumentError("empty document")
    for name in doc.proofs:
        if name not in doc.goals:
            raise DocumentError(f"proof for unknown goal {name!r}")
    return doc


def _fresh_name(doc, name, no):
    if name in doc.env or name in doc.goals:
        raise DocumentError(f"name {name!r} defined twice", no)


def _statement(doc, no, stmt, body):
    name = doc.inst_name
    if body is not None:
        parts = stmt.split()
        if len(parts) != 2:
            raise DocumentError("expected 'proof <goal>'", no)
        if parts[1] in doc.proofs:
            raise DocumentError(f"second proof for {parts[1]!r}", no)
        doc.proofs[parts[1]] = ProofScript(parts[1], body)
        return
    m = _DEF.match(stmt)
    if m:
        kind, ident, rhs = m.groups()
        _fresh_name(doc, ident, no)
        parse = {"program": parse_program, "formula": parse_formula, "label": parse_label}[kind]
        value = parse(rhs, doc.env, name)
        if kind == "program":
            doc.inst.check_program(value)
        elif kind == "formula":
            doc.inst.check_formula(value)
        else:
            doc.inst.check_label(value)
        doc.env[ident] = value
        return
    m = _GOAL.match(stmt)
    if m:
        ident, rhs = m.groups()
        _fresh_name(doc, ident, no)
        seq = parse_sequent(rhs, doc.env, name)
        for lf in list(seq.left) + list(seq.right):
            _check_lf(doc.inst, lf)
        doc.goals[ident] = seq
        return
    m = _SAMPLE.match(stmt)
    if m:
        lo, hi = int(m.group(2)), int(m.group(3))
        if lo > hi:
            raise DocumentError("empty sample range", no)
        doc.samples[m.group(1)] = (lo, hi)
        return
    head, _, rest = stmt.partition(" ")
    rest = rest.strip()
    if head == "option":
        key, _, value = rest.partition(" ")
        doc.options[key] = value.strip()
    elif head == "world":
        doc.worlds.append(_world_for(doc, rest))
    elif head == "exec":
        prog = parse_program(rest, doc.env, name)
        doc.inst.check_program(prog)
        doc.execs.append(prog)
    elif head == "check":
        doc.checks.append(parse_formula(rest, doc.env, name))
    else:
        raise DocumentError(f"unknown statement {head!r}", no)


def _check_lf(inst, lf):
    if isinstance(lf, Labeled):
        inst.check_label(lf.label)
        inst.check_formula(lf.formula)


def _world_for(doc, text):
    if doc.inst_name == "sl":
        m = re.match(r"^(.*?)(?:;\s*heap\s*(.*))?$", text)
        store = parse_world(m.group(1))
        return (store, _heap(m.group(2) or ""))
    world = parse_world(text)
    return (world,) if doc.inst_name == "pl" else world


def _heap(text):
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        k, _, v = item.partition("=")
        out[int(k)] = int(v)
    return out


def load_document(path, alloc_base=None) -> Document:
    path = Path(path)
    return parse_document(path.read_text(), path=path, alloc_base=alloc_base)
