"""Labels: symbolic stores, store sequences (paths) and ground store-heap pairs.

``apply_label`` turns a labeled non-dynamic formula into a plain arithmetic
formula over the label's free variables.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from ..errors import KindMismatch, UnsupportedConnective, VariableCapture
from .expr import Expr, const, expr_vars, normalize_expr, subst_expr
from .formula import (
    And, Bool, Box, Cmp, Dia, First, FALSE, Imp, Not, Or, PointsTo, Star, Suf,
    conj, disj,
)


class Label:
    def __str__(self):
        from .printer import show_label
        return show_label(self)


@dataclass(frozen=True)
class Store(Label):
    """Finite map from program variables to normalized expressions."""
    entries: tuple

    @staticmethod
    def of(mapping: Mapping[str, Expr]) -> "Store":
        return Store(tuple(sorted((k, normalize_expr(v)) for k, v in mapping.items())))

    @property
    def mapping(self) -> dict:
        return dict(self.entries)

    @property
    def domain(self) -> frozenset:
        return frozenset(k for k, _ in self.entries)

    def get(self, x):
        for k, v in self.entries:
            if k == x:
                return v
        return None

    def free_vars(self) -> frozenset:
        out = frozenset()
        for _, v in self.entries:
            out |= expr_vars(v)
        return out

    def apply(self, e: Expr) -> Expr:
        """sigma(e): replace mapped variables by their stored values."""
        return subst_expr(e, self.mapping)


@dataclass(frozen=True)
class StoreSeq(Label):
    """A non-empty path of stores; new states are appended at the tail."""
    stores: tuple

    def __post_init__(self):
        if not self.stores:
            raise ValueError("a store sequence is never empty")

    @property
    def last(self) -> Store:
        return self.stores[-1]

    @property
    def head(self) -> Store:
        return self.stores[0]

    @property
    def domain(self) -> frozenset:
        out = frozenset()
        for s in self.stores:
            out |= s.domain
        return out

    def free_vars(self):
        out = frozenset()
        for s in self.stores:
            out |= s.free_vars()
        return out

    def extend(self, store: Store) -> "StoreSeq":
        return StoreSeq(self.stores + (store,))


@dataclass(frozen=True)
class StoreHeap(Label):
    """Ground separation-logic state: integer store and finite heap."""
    store: tuple
    heap: tuple

    @staticmethod
    def of(store: Mapping[str, int], heap: Mapping[int, int]) -> "StoreHeap":
        return StoreHeap(tuple(sorted(store.items())), tuple(sorted(heap.items())))

    @property
    def s(self) -> dict:
        return dict(self.store)

    @property
    def h(self) -> dict:
        return dict(self.heap)

    @property
    def domain(self) -> frozenset:
        return frozenset(k for k, _ in self.store)

    def free_vars(self):
        return frozenset()

    def with_heap(self, heap) -> "StoreHeap":
        return StoreHeap(self.store, tuple(sorted(dict(heap).items())))


def config_update(sigma: Store, x: str, e: Expr) -> Store:
    """Label after the assignment x := e."""
    if not isinstance(sigma, Store):
        raise KindMismatch(f"config_update expects a store, got {type(sigma).__name__}")
    value = normalize_expr(sigma.apply(e))
    m = sigma.mapping
    if x not in m:
        for k, v in m.items():
            if x in expr_vars(v):
                raise VariableCapture(f"{x} occurs free in the value stored for {k}")
    m[x] = value
    return Store.of(m)


# --- label application -----------------------------------------------------

def apply_label(label: Label, f):
    """Resolve ``label : f`` into a plain formula (non-dynamic ``f`` only)."""
    if isinstance(label, Store):
        return _apply_store(label, f)
    if isinstance(label, StoreSeq):
        return _apply_path(label.stores, f)
    if isinstance(label, StoreHeap):
        return _apply_heap(label, dict(label.heap), f)
    raise TypeError(label)


def _structural(f, rec):
    if isinstance(f, Bool):
        return f
    if isinstance(f, Not):
        return Not(rec(f.arg))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(rec(f.left), rec(f.right))
    if isinstance(f, (Box, Dia)):
        raise UnsupportedConnective("modalities cannot be resolved by a label")
    return None


def _apply_store(store, f):
    out = _structural(f, lambda g: _apply_store(store, g))
    if out is not None:
        return out
    if isinstance(f, Cmp):
        return Cmp(f.op, store.apply(f.lhs), store.apply(f.rhs))
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful under a plain store")


def _apply_path(stores, f):
    out = _structural(f, lambda g: _apply_path(stores, g))
    if out is not None:
        return out
    if isinstance(f, Cmp):
        # atoms are read at the head of the path
        return _apply_store(stores[0], f)
    if isinstance(f, First):
        return _apply_path(stores[:1], f.arg)
    if isinstance(f, Suf):
        options = []
        for j in range(1, len(stores)):
            parts = [_apply_path(stores[j:], f.right)]
            parts += [_apply_path(stores[i:], f.left) for i in range(1, j)]
            options.append(conj(parts))
        return disj(options)
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful on a path")


def _ground(store: dict, e: Expr) -> Expr:
    return normalize_expr(subst_expr(e, {k: const(v) for k, v in store.items()}))


def _apply_heap(label, heap, f):
    out = _structural(f, lambda g: _apply_heap(label, heap, g))
    if out is not None:
        return out
    s = label.s
    if isinstance(f, Cmp):
        return Cmp(f.op, _ground(s, f.lhs), _ground(s, f.rhs))
    if isinstance(f, PointsTo):
        a = _ground(s, f.addr)
        v = _ground(s, f.value)
        if a.poly.is_const():
            addr = a.poly.const_value()
            if addr.denominator == 1 and int(addr) in heap:
                return Cmp("=", const(heap[int(addr)]), v)
            return FALSE
        return disj(And(Cmp("=", a, const(k)), Cmp("=", v, const(w))) for k, w in sorted(heap.items()))
    if isinstance(f, Star):
        dom = sorted(heap)
        options = []
        for r in range(len(dom) + 1):
            for part in combinations(dom, r):
                h1 = {k: heap[k] for k in part}
                h2 = {k: heap[k] for k in dom if k not in h1}
                options.append(And(_apply_heap(label, h1, f.left), _apply_heap(label, h2, f.right)))
        return disj(options)
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful on a store-heap state")


def label_kind(label) -> str:
    return {Store: "store", StoreSeq: "path", StoreHeap: "heap"}[type(label)]


def world_of(label: Label, env: Mapping[str, int]):
    """Ground the label under an assignment of its free variables."""
    from .expr import eval_expr
    if isinstance(label, Store):
        w = dict(env)
        w.update({k: eval_expr(v, env) for k, v in label.entries})
        return w
    if isinstance(label, StoreSeq):
        return [world_of(s, env) for s in label.stores]
    if isinstance(label, StoreHeap):
        w = dict(env)
        w.update(label.s)
        return (w, label.h)
    raise TypeError(label)


