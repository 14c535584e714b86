"""Substitutions over labels, formulas and sequents; one-sided matching and
anti-unification of labels; freeness of labels."""
from __future__ import annotations

from dataclasses import fields, is_dataclass
from fractions import Fraction
from itertools import count
from typing import Mapping

from ..errors import DlpError, KindMismatch, SubstitutionError
from .expr import Expr, Poly, Var, const, expr_vars, normalize_expr, show_expr, subst_expr, to_expr
from .formula import formula_assigned, formula_vars, map_formula_exprs
from .label import Store, StoreHeap, StoreSeq
from .program import assigned_vars, map_program_exprs, program_vars
from .sequent import Labeled, Sequent, Termination, Transition


class NoMatch(DlpError):
    pass


class Substitution(dict):
    """Finite map from variable names to expressions, applied simultaneously."""

    @classmethod
    def of(cls, mapping=None, **kw):
        out = cls()
        for k, v in dict(mapping or {}, **kw).items():
            out[k] = v if isinstance(v, Expr) else _as_expr(v)
        return out

    def compose(self, after: "Substitution") -> "Substitution":
        """The substitution that applies ``self`` then ``after``."""
        out = Substitution({k: normalize_expr(subst_expr(v, after)) for k, v in self.items()})
        for k, v in after.items():
            out.setdefault(k, v)
        return Substitution({k: v for k, v in out.items() if v.poly != Poly.var(k)})

    def nontrivial(self) -> "Substitution":
        return Substitution({k: v for k, v in self.items() if v.poly != Poly.var(k)})

    def __str__(self):
        return "[" + ", ".join(f"{show_expr(v)}/{k}" for k, v in sorted(self.items())) + "]"

    def to_json(self):
        return {k: show_expr(v) for k, v in sorted(self.items())}


def _as_expr(v):
    if isinstance(v, int):
        return const(v)
    from .parser import parse_expr
    return parse_expr(str(v))


def parse_subst(text) -> Substitution:
    """Parse ``[e1/x1, e2/x2]`` (brackets optional, empty allowed)."""
    from .parser import parse_expr
    text = text.strip()
    if text.startswith("["):
        text = text[1:-1] if text.endswith("]") else text[1:]
    out = Substitution()
    depth = 0
    parts, cur = [], ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        parts.append(cur)
    for part in parts:
        e, _, x = part.rpartition("/")
        x = x.strip()
        # "e/2/x" style: the last slash separates the variable only if it is an identifier
        if not x or not (x[0].isalpha() or x[0] == "_"):
            raise SubstitutionError(f"malformed substitution entry {part!r}")
        out[x] = parse_expr(e)
    return out


# --- application -------------------------------------------------------------

def _subst_under(f, theta, shadow, assigned):
    """Substitute the free variables of a formula evaluated under a label."""
    active = {k: v for k, v in theta.items() if k not in shadow}
    if not active:
        return f
    present = formula_vars(f)
    active = {k: v for k, v in active.items() if k in present}
    for k, v in active.items():
        if k in assigned:
            raise SubstitutionError(f"{k} is assigned by a program in the formula")
        if expr_vars(v) & shadow:
            raise SubstitutionError(f"substituting {k} would be captured by the label")
    return map_formula_exprs(f, lambda e: subst_expr(e, active))


def _subst_program(p, theta, shadow):
    active = {k: v for k, v in theta.items() if k not in shadow and k in program_vars(p)}
    if not active:
        return p
    for k, v in active.items():
        if k in assigned_vars(p):
            raise SubstitutionError(f"{k} is assigned by the program")
        if expr_vars(v) & shadow:
            raise SubstitutionError(f"substituting {k} would be captured by the label")
    return map_program_exprs(p, lambda e: subst_expr(e, active),
                             lambda g: map_formula_exprs(g, lambda e: subst_expr(e, active)))


def substitute(obj, theta: Mapping[str, Expr]):
    if not theta:
        return obj
    if isinstance(obj, Expr):
        return subst_expr(obj, theta)
    if isinstance(obj, Store):
        return Store.of({k: subst_expr(v, theta) for k, v in obj.entries})
    if isinstance(obj, StoreSeq):
        return StoreSeq(tuple(substitute(s, theta) for s in obj.stores))
    if isinstance(obj, StoreHeap):
        return obj
    if isinstance(obj, Labeled):
        shadow = obj.label.domain
        return Labeled(substitute(obj.label, theta),
                       _subst_under(obj.formula, theta, shadow, formula_assigned(obj.formula)))
    if isinstance(obj, Transition):
        return Transition(_subst_program(obj.prog, theta, obj.label.domain), substitute(obj.label, theta),
                          _subst_program(obj.prog2, theta, obj.label2.domain), substitute(obj.label2, theta))
    if isinstance(obj, Termination):
        return Termination(substitute(obj.label, theta), _subst_program(obj.prog, theta, obj.label.domain))
    if isinstance(obj, Sequent):
        return Sequent([substitute(f, theta) for f in obj.left], [substitute(f, theta) for f in obj.right])
    if hasattr(obj, "__dataclass_fields__"):
        # bare formula: no shadowing
        return map_formula_exprs(obj, lambda e: subst_expr(e, theta))
    raise TypeError(obj)


# --- matching ---------------------------------------------------------------

_SHADOW = "@"


def _shape(lf):
    """Skeleton key plus expression slots ``(expr, shadow)`` in traversal order."""
    slots = []

    def walk(obj, shadow):
        if isinstance(obj, Expr):
            slots.append((obj, shadow))
            return "E"
        if isinstance(obj, Store):
            for _, v in obj.entries:
                slots.append((v, frozenset()))
            return ("Store",) + tuple(k for k, _ in obj.entries)
        if isinstance(obj, StoreSeq):
            return ("Seq",) + tuple(walk(s, shadow) for s in obj.stores)
        if isinstance(obj, StoreHeap):
            return ("Heap", obj.store, obj.heap)
        if is_dataclass(obj):
            return (type(obj).__name__,) + tuple(walk(getattr(obj, f.name), shadow) for f in fields(obj))
        if isinstance(obj, tuple):
            return tuple(walk(x, shadow) for x in obj)
        return obj

    if isinstance(lf, Labeled):
        key = ("Labeled", walk(lf.label, frozenset()), walk(lf.formula, lf.label.domain))
    elif isinstance(lf, Transition):
        key = ("Transition", walk(lf.prog, lf.label.domain), walk(lf.label, frozenset()),
               walk(lf.prog2, lf.label2.domain), walk(lf.label2, frozenset()))
    elif isinstance(lf, Termination):
        key = ("Termination", walk(lf.label, frozenset()), walk(lf.prog, lf.label.domain))
    else:
        raise TypeError(lf)
    return key, slots


def _hide(poly, shadow):
    if not shadow:
        return poly
    return poly.compose({v: Poly.var(_SHADOW + v) for v in shadow})


def _solve(equations, candidates, target_vars):
    bound = {}
    while True:
        progress = False
        for tp, gp in equations:
            cur = tp.compose(bound)
            free = (cur.variables & candidates) - bound.keys()
            if len(free) == 1:
                v = next(iter(free))
                aff = cur.affine_in(v)
                if aff is not None:
                    a, rest = aff
                    bound[v] = (gp - rest).scale(Fraction(1) / a)
                    progress = True
        if progress:
            continue
        remaining = sorted(candidates - bound.keys(), key=lambda v: (v not in target_vars, v))
        if not remaining:
            break
        bound[remaining[0]] = Poly.var(remaining[0])
    return bound


def _pairings(tshapes, gshapes, limit=20000):
    n = len(tshapes)
    used = [False] * n
    chosen = [None] * n
    budget = [limit]

    def rec(i):
        if budget[0] <= 0:
            return
        if i == n:
            budget[0] -= 1
            yield list(chosen)
            return
        seen = set()
        for j in range(n):
            if used[j] or gshapes[j][0] != tshapes[i][0]:
                continue
            sig = gshapes[j][2]
            if sig in seen:
                continue
            seen.add(sig)
            used[j] = True
            chosen[i] = j
            yield from rec(i + 1)
            used[j] = False

    yield from rec(0)


def match_label(template: Sequent, target: Sequent) -> Substitution:
    """theta with substitute(template, theta) == target (multiset equality)."""
    return match_sequent(template, target)[0]


def match_sequent(template: Sequent, target: Sequent):
    """Like match_label, also returning the left and right pairings."""
    nl = len(template.left)
    if nl != len(target.left) or len(template.right) != len(target.right):
        raise NoMatch("sequents differ in size")
    # tag sides so formulas never pair across the turnstile
    tl = [_Side("L", f) for f in template.left] + [_Side("R", f) for f in template.right]
    gl = [_Side("L", f) for f in target.left] + [_Side("R", f) for f in target.right]
    theta, pairing = _match_sided(tl, gl)
    return theta, pairing[:nl], [j - nl for j in pairing[nl:]]


class _Side:
    __slots__ = ("side", "lf")

    def __init__(self, side, lf):
        self.side, self.lf = side, lf


def _match_sided(tl, gl):
    from .canon import canon
    if len(tl) != len(gl):
        raise NoMatch("different number of formulas")
    tsh = [((t.side,) + (_shape(t.lf)[0],), _shape(t.lf)[1]) for t in tl]
    gsh = [((g.side,) + (_shape(g.lf)[0],), _shape(g.lf)[1], canon(g.lf)) for g in gl]
    candidates, target_vars = set(), set()
    for _, slots in tsh:
        for e, shadow in slots:
            candidates |= {v for v in expr_vars(e) if v not in shadow}
    for _, slots, _c in gsh:
        for e, shadow in slots:
            target_vars |= {v for v in expr_vars(e) if v not in shadow}
    for pairing in _pairings(tsh, gsh):
        eqs = []
        for i, j in enumerate(pairing):
            for (te, tsd), (ge, gsd) in zip(tsh[i][1], gsh[j][1]):
                eqs.append((_hide(te.poly, tsd), _hide(ge.poly, gsd)))
        bound = _solve(eqs, frozenset(candidates), target_vars)
        theta = Substitution({v: to_expr(p) for v, p in bound.items()}).nontrivial()
        try:
            ok = all(canon(substitute(tl[i].lf, theta)) == gsh[j][2] for i, j in enumerate(pairing))
        except SubstitutionError:
            ok = False
        if ok:
            return theta, pairing
    raise NoMatch("no substitution maps the template onto the target")


# --- anti-unification and freeness -----------------------------------------------

class FreshSupply:
    """Generates variable names in the reserved ``_`` namespace."""

    def __init__(self, avoid=(), prefix="_u"):
        self.avoid = set(avoid)
        self.prefix = prefix
        self._counter = count(1)

    def fresh(self):
        while True:
            name = f"{self.prefix}{next(self._counter)}"
            if name not in self.avoid:
                self.avoid.add(name)
                return name


def anti_unify(a, b, supply: FreshSupply):
    """Least general common template of two labels.

    Returns ``(template, theta_a, theta_b)`` with substitute(template, theta_x) == x.
    """
    if isinstance(a, Store) and isinstance(b, Store):
        if a.domain != b.domain:
            raise KindMismatch("stores with different domains cannot be anti-unified")
        ta, tb, out, memo = Substitution(), Substitution(), {}, {}
        for (x, ea), (_, eb) in zip(a.entries, b.entries):
            if ea.poly == eb.poly:
                out[x] = ea
                continue
            key = (ea.poly, eb.poly)
            if key not in memo:
                u = supply.fresh()
                memo[key] = u
                ta[u], tb[u] = ea, eb
            out[x] = Var(memo[key])
        return Store.of(out), ta, tb
    if isinstance(a, StoreSeq) and isinstance(b, StoreSeq) and len(a.stores) == len(b.stores):
        parts, ta, tb = [], Substitution(), Substitution()
        for sa, sb in zip(a.stores, b.stores):
            t, x, y = anti_unify(sa, sb, supply)
            parts.append(t)
            ta.update(x)
            tb.update(y)
        return StoreSeq(tuple(parts)), ta, tb
    if a == b:
        return a, Substitution(), Substitution()
    raise KindMismatch("labels of different kinds cannot be anti-unified")


def _all_vars(formulas):
    out = set()
    for f in formulas:
        out |= formula_vars(f)
    return out


def is_free_label(sigma, formulas) -> bool:
    """Every entry is ``+-t + b`` with distinct variables t absent from the formulas."""
    if not isinstance(sigma, Store):
        return False
    used = _all_vars(formulas)
    seen = set()
    for _, e in sigma.entries:
        p = e.poly
        lin = [(m, c) for m, c in p.terms.items() if m != ()]
        if len(lin) != 1:
            return False
        m, c = lin[0]
        if len(m) != 1 or m[0][1] != 1 or c not in (1, -1):
            return False
        if p.const_value().denominator != 1:
            return False
        t = m[0][0]
        if t in used or t in seen:
            return False
        seen.add(t)
    return True
