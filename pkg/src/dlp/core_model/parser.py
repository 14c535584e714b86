"""Recursive-descent parser for expressions, programs, formulas, labels and
sequents.

Named definitions (programs, formulas, labels) can be supplied through
``env``; a bare identifier resolves to a definition only where a variable
would not make sense.
"""
from __future__ import annotations

import re

from ..errors import ParseError
from . import formula as F
from . import program as P
from .expr import Add, Div, Mul, Neg, Num, Sub, Var
from .label import Store, StoreHeap, StoreSeq
from .sequent import Labeled, Sequent, Termination, Transition

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>\|->|\|-|-->|->|:=|<=|>=|\*\*|&&|\|\||[!=<>+\-*/()\[\]{},;:?.])
""", re.VERBOSE)

KEYWORDS = {
    "if", "then", "else", "end", "while", "do", "true", "false", "first", "Suf",
    "next", "ev", "ter", "cons", "dispose", "trans", "term",
}
CMP = {"=", "<", "<=", ">", ">="}


def tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("eof", "", pos))
    return toks


class Parser:
    def __init__(self, text, env=None, inst=None):
        self.toks = tokenize(text)
        self.i = 0
        self.env = env or {}
        self.inst = inst
        self.in_program = 0

    # -- token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value, k=0):
        t = self.peek(k)
        return t[0] in ("op", "ident") and t[1] == value

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.peek()
        if not self.at(value):
            raise ParseError(f"expected {value!r}, found {t[1]!r}", t[2])
        return self.advance()

    def ident(self):
        t = self.peek()
        if t[0] != "ident" or t[1] in KEYWORDS:
            raise ParseError(f"expected identifier, found {t[1]!r}", t[2])
        return self.advance()[1]

    def integer(self):
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.peek()
        if t[0] != "int":
            raise ParseError(f"expected integer, found {t[1]!r}", t[2])
        self.advance()
        return -int(t[1]) if neg else int(t[1])

    def done(self):
        t = self.peek()
        if t[0] != "eof":
            raise ParseError(f"unexpected trailing input {t[1]!r}", t[2])

    def attempt(self, fn):
        save = self.i
        try:
            return fn()
        except ParseError:
            self.i = save
            return None

    def _named(self, kind):
        t = self.peek()
        if t[0] == "ident" and t[1] in self.env and isinstance(self.env[t[1]], kind):
            return self.env[t[1]]
        return None

    # -- expressions
    def expr(self):
        e = self.term()
        while self.at("+") or self.at("-"):
            if self.in_program and self.at("+"):
                save = self.i
                self.advance()
                if self._starts_program_only():
                    self.i = save
                    break
                rhs = self.attempt(self.term)
                if rhs is None:
                    self.i = save
                    break
                e = Add(e, rhs)
                continue
            op = self.advance()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def _starts_program_only(self):
        t = self.peek()
        if t[0] == "ident" and self.at(":=", 1):
            return True
        return t[1] in ("if", "while", "dispose", "[", "ter") or (
            t[0] == "ident" and isinstance(self.env.get(t[1]), P.Program))

    def term(self):
        e = self.factor()
        while self.at("*"):
            nxt = self.peek(1)
            if not (nxt[0] in ("int", "ident") and nxt[1] not in KEYWORDS or nxt[1] in ("(", "-")):
                break
            self.advance()
            e = Mul(e, self.factor())
        return e

    def factor(self):
        e = self.unary()
        while self.at("/"):
            self.advance()
            t = self.peek()
            if t[0] != "int":
                raise ParseError("division is only by integer literals", t[2])
            self.advance()
            if int(t[1]) == 0:
                raise ParseError("division by zero", t[2])
            e = Div(e, int(t[1]))
        return e

    def unary(self):
        t = self.peek()
        if self.at("-"):
            self.advance()
            inner = self.unary()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return Neg(inner)
        if t[0] == "int":
            self.advance()
            return Num(int(t[1]))
        if t[0] == "ident" and t[1] not in KEYWORDS:
            self.advance()
            return Var(t[1])
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"expected expression, found {t[1]!r}", t[2])

    # -- programs
    def program(self):
        self.in_program += 1
        try:
            return self._choice()
        finally:
            self.in_program -= 1

    def _choice(self):
        left = self._seq()
        if self.at("+"):
            self.advance()
            return P.Choice(left, self._choice())
        return left

    def _seq(self):
        left = self._postfix()
        if self.at(";"):
            self.advance()
            return P.Seq(left, self._seq())
        return left

    def _postfix(self):
        p = self._patom()
        while self.at("*"):
            self.advance()
            p = P.Loop(p)
        return p

    def _patom(self):
        t = self.peek()
        if self.at("ter"):
            self.advance()
            return P.TER
        if self.at("if"):
            self.advance()
            c = self._guard()
            self.expect("then")
            a = self.program()
            self.expect("else")
            b = self.program()
            self.expect("end")
            return P.If(c, a, b)
        if self.at("while"):
            self.advance()
            c = self._guard()
            self.expect("do")
            body = self.program()
            self.expect("end")
            return P.While(c, body)
        if self.at("dispose"):
            self.advance()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return P.Dispose(e)
        if self.at("["):
            self.advance()
            a = self.expr()
            self.expect("]")
            self.expect(":=")
            return P.Mutate(a, self.expr())
        if t[0] == "ident" and self.at(":=", 1):
            x = self.ident()
            self.advance()
            if self.at("cons") and self.at("(", 1):
                self.advance()
                self.advance()
                e = self.expr()
                self.expect(")")
                return P.Alloc(x, e)
            if self.at("["):
                self.advance()
                e = self.expr()
                self.expect("]")
                return P.Load(x, e)
            return P.Assign(x, self.expr())
        named = self._named(P.Program)
        if named is not None:
            self.advance()
            return named
        if self.at("("):
            save = self.i

            def paren():
                self.advance()
                p = self.program()
                self.expect(")")
                if self.at("?"):
                    raise ParseError("test", self.peek()[2])
                return p
            p = self.attempt(paren)
            if p is not None:
                return p
            self.i = save
        c = self._guard()
        self.expect("?")
        return P.Test(c)

    def _guard(self):
        self.in_program += 1
        try:
            return self.formula()
        finally:
            self.in_program -= 1

    # -- formulas
    def formula(self):
        saved, self.in_program = self.in_program, 0
        try:
            return self._imp()
        finally:
            self.in_program = saved

    def _imp(self):
        left = self._or()
        if self.at("->"):
            self.advance()
            return F.Imp(left, self._imp())
        return left

    def _or(self):
        f = self._and()
        while self.at("||"):
            self.advance()
            f = F.Or(f, self._and())
        return f

    def _and(self):
        f = self._star()
        while self.at("&&"):
            self.advance()
            f = F.And(f, self._star())
        return f

    def _star(self):
        f = self._suf()
        while self.at("**"):
            self.advance()
            f = F.Star(f, self._suf())
        return f

    def _suf(self):
        f = self._unary()
        while self.at("Suf"):
            self.advance()
            f = F.Suf(f, self._unary())
        return f

    def _unary(self):
        if self.at("!"):
            self.advance()
            return F.Not(self._unary())
        if self.at("first"):
            self.advance()
            return F.First(self._unary())
        if self.at("next"):
            self.advance()
            return F.next_(self._unary())
        if self.at("ev"):
            self.advance()
            return F.eventually(self._unary())
        if self.at("["):
            self.advance()
            p = self.program()
            self.expect("]")
            return F.Box(p, self._unary())
        if self.at("<"):
            self.advance()
            p = self.program()
            self.expect(">")
            return F.Dia(p, self._unary())
        return self._fatom()

    def _fatom(self):
        if self.at("true"):
            self.advance()
            return F.TRUE
        if self.at("false"):
            self.advance()
            return F.FALSE
        named = self._named(F.Formula)
        if named is not None:
            nxt = self.peek(1)
            if not (nxt[1] in CMP or nxt[1] in ("+", "-", "*", "/", "|->")):
                self.advance()
                return named
        if self.at("("):
            save = self.i

            def paren():
                self.advance()
                f = self.formula()
                self.expect(")")
                nxt = self.peek()
                if nxt[1] in CMP or nxt[1] in ("+", "-", "*", "/", "|->"):
                    raise ParseError("parenthesized expression", nxt[2])
                return f
            f = self.attempt(paren)
            if f is not None:
                return f
            self.i = save
        saved, self.in_program = self.in_program, 0
        try:
            lhs = self.expr()
        finally:
            self.in_program = saved
        t = self.peek()
        if t[1] == "|->":
            self.advance()
            return F.PointsTo(lhs, self.expr())
        if t[1] in CMP:
            self.advance()
            return F.Cmp(t[1], lhs, self.expr())
        raise ParseError(f"expected comparison, found {t[1]!r}", t[2])

    # -- labels, labeled formulas, sequents
    def store(self):
        self.expect("{")
        entries = {}
        while not self.at("}"):
            x = self.ident()
            self.expect("->")
            if x in entries:
                raise ParseError(f"variable {x} mapped twice", self.peek()[2])
            entries[x] = self.expr()
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return Store.of(entries)

    def _int_map(self, keys_int):
        self.expect("{")
        out = {}
        while not self.at("}"):
            k = self.integer() if keys_int else self.ident()
            self.expect("->")
            out[k] = self.integer()
            if not self.at("}"):
                self.expect(",")
        self.expect("}")
        return out

    def _label_atom(self):
        if self.at("{"):
            return self.store()
        if self.at("(") and self.at("{", 1):
            self.advance()
            s = self._int_map(False)
            self.expect(",")
            h = self._int_map(True)
            self.expect(")")
            return StoreHeap.of(s, h)
        named = self._named(Store) or self._named(StoreSeq) or self._named(StoreHeap)
        if named is not None:
            self.advance()
            return named
        t = self.peek()
        raise ParseError(f"expected label, found {t[1]!r}", t[2])

    def label(self):
        parts = [self._label_atom()]
        while self.at("."):
            self.advance()
            parts.append(self._label_atom())
        stores = []
        for p in parts:
            if isinstance(p, StoreSeq):
                stores.extend(p.stores)
            elif isinstance(p, Store):
                stores.append(p)
            elif len(parts) == 1:
                return p
            else:
                raise ParseError("store-heap labels cannot form a sequence")
        if len(stores) > 1 or self.inst == "pl":
            return StoreSeq(tuple(stores))
        return stores[0]

    def labeled(self):
        if self.at("trans"):
            self.advance()
            self.expect("[")
            p1 = self.program()
            self.expect("]")
            l1 = self.label()
            self.expect("-->")
            self.expect("[")
            p2 = self.program()
            self.expect("]")
            return Transition(p1, l1, p2, self.label())
        if self.at("term"):
            self.advance()
            lab = self.label()
            self.expect("[")
            p = self.program()
            self.expect("]")
            return Termination(lab, p)
        lab = self.label()
        self.expect(":")
        return Labeled(lab, self.formula())

    def _lf_list(self, stop):
        out = []
        if self.peek()[0] == "eof" or any(self.at(s) for s in stop):
            return out
        out.append(self.labeled())
        while self.at(","):
            self.advance()
            out.append(self.labeled())
        return out

    def sequent(self):
        left = self._lf_list(["|-"])
        self.expect("|-")
        right = self._lf_list([])
        return Sequent(left, right)


def _run(method, text, env=None, inst=None):
    p = Parser(text, env, inst)
    out = getattr(p, method)()
    p.done()
    return out


def parse_expr(text, env=None):
    return _run("expr", text, env)


def parse_program(text, env=None, inst=None):
    return _run("program", text, env, inst)


def parse_formula(text, env=None, inst=None):
    return _run("formula", text, env, inst)


def parse_label(text, env=None, inst=None):
    return _run("label", text, env, inst)


def parse_lf(text, env=None, inst=None):
    return _run("labeled", text, env, inst)


def parse_sequent(text, env=None, inst=None):
    return _run("sequent", text, env, inst)
