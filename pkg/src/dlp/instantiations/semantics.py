"""Ground truth of formulas in concrete worlds (three-valued when execution
has to be cut off)."""
from __future__ import annotations

from itertools import combinations

from ..core_model import formula as F
from ..core_model.label import world_of
from ..core_model.sequent import Labeled
from ..errors import BudgetExceeded, KindMismatch, UnsupportedConnective
from .interp import _Zero, holds, minimum_paths, run_to_completion


class _UnknownType:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Unknown"

    def __bool__(self):
        raise TypeError("Unknown has no boolean value")


UNKNOWN = _UnknownType()


def _not(a):
    return UNKNOWN if a is UNKNOWN else not a


def _and(a, b):
    if a is False or b is False:
        return False
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return True


def _or(a, b):
    if a is True or b is True:
        return True
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return False


def _cmp(f, env):
    env = _Zero(env)
    return holds(f, env)


def eval_dlp_formula(inst, world, f, budget=100_000):
    """True, False or UNKNOWN (when a modality needs more than ``budget`` states)."""
    name = inst if isinstance(inst, str) else inst.name
    alloc = getattr(inst, "alloc_base", 37)
    return _eval(name, world, f, budget, alloc)


def _eval(name, world, f, budget, alloc):
    if isinstance(f, F.Bool):
        return f.value
    if isinstance(f, F.Not):
        return _not(_eval(name, world, f.arg, budget, alloc))
    if isinstance(f, F.And):
        a = _eval(name, world, f.left, budget, alloc)
        if a is False:
            return False
        return _and(a, _eval(name, world, f.right, budget, alloc))
    if isinstance(f, F.Or):
        a = _eval(name, world, f.left, budget, alloc)
        if a is True:
            return True
        return _or(a, _eval(name, world, f.right, budget, alloc))
    if isinstance(f, F.Imp):
        a = _eval(name, world, f.left, budget, alloc)
        if a is False:
            return True
        return _or(_not(a), _eval(name, world, f.right, budget, alloc))
    if isinstance(f, (F.Box, F.Dia)):
        try:
            finals = run_to_completion(name, f.prog, world, budget, alloc)
        except BudgetExceeded:
            return UNKNOWN
        vals = [_eval(name, w, f.body, budget, alloc) for w in finals]
        if isinstance(f, F.Box):
            out = True
            for v in vals:
                out = _and(out, v)
            return out
        out = False
        for v in vals:
            out = _or(out, v)
        return out
    if name == "pl":
        return _eval_path(world, f, lambda w, g: _eval(name, w, g, budget, alloc))
    if name == "sl":
        return _eval_heap(world[0], world[1], f, lambda st, g: _eval(name, st, g, budget, alloc))
    if isinstance(f, F.Cmp):
        return _cmp(f, world)
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful in {name}")


def _eval_path(path, f, rec):
    path = tuple(path)
    if isinstance(f, F.Cmp):
        return _cmp(f, path[0])
    if isinstance(f, F.First):
        return rec(path[:1], f.arg)
    if isinstance(f, F.Suf):
        out = False
        for j in range(1, len(path)):
            part = rec(path[j:], f.right)
            for i in range(1, j):
                part = _and(part, rec(path[i:], f.left))
            out = _or(out, part)
        return out
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful on paths")


def _eval_heap(store, heap, f, rec):
    if isinstance(f, F.Cmp):
        return _cmp(f, store)
    if isinstance(f, F.PointsTo):
        from .interp import _ev
        a = _ev(f.addr, store)
        return a in heap and heap[a] == _ev(f.value, store)
    if isinstance(f, F.Star):
        dom = sorted(heap)
        out = False
        for r in range(len(dom) + 1):
            for part in combinations(dom, r):
                h1 = {k: heap[k] for k in part}
                h2 = {k: heap[k] for k in dom if k not in h1}
                out = _or(out, _and(rec((store, h1), f.left), rec((store, h2), f.right)))
                if out is True:
                    return True
        return out
    raise UnsupportedConnective(f"{type(f).__name__} is not meaningful on heaps")


def eval_temporal(path, f, budget=100_000):
    """Truth of a path formula; atoms are read at the head of the path."""
    return _eval("pl", tuple(path), f, budget, 37)


def eval_sl_formula(state, f, budget=100_000):
    """Truth of a separation-logic formula in ``(store, heap)``."""
    return _eval("sl", state, f, budget, 37)


def validate_termination_finiteness(inst, prog, world, budget=10_000):
    """Number of minimum terminating execution paths; BudgetExceeded if unbounded."""
    name = inst if isinstance(inst, str) else inst.name
    return minimum_paths(name, prog, world, budget, getattr(inst, "alloc_base", 37))


# --- labeled formulas and sequents under a ground assignment ------------------------

def eval_lf(inst, lf, env, budget=100_000):
    if not isinstance(lf, Labeled):
        raise KindMismatch("only labeled formulas can be evaluated")
    world = world_of(lf.label, env)
    if isinstance(world, list):
        world = tuple(world)
    return eval_dlp_formula(inst, world, lf.formula, budget)


def eval_sequent(inst, seq, env, budget=100_000):
    """Truth of ``/\\ left -> \\/ right`` at one ground assignment."""
    left = True
    for lf in seq.left:
        left = _and(left, eval_lf(inst, lf, env, budget))
        if left is False:
            return True
    right = False
    for lf in seq.right:
        right = _or(right, eval_lf(inst, lf, env, budget))
        if right is True:
            return True
    return _or(_not(left), right)
