"""Concrete interpreters over ground worlds.

Kept independent of the symbolic ``step`` so the two can be cross-checked.
Worlds are:

* wp / fodl: ``dict`` variable -> int (missing variables read as 0)
* pl: tuple of such dicts (the path so far, newest state last)
* sl: ``(store, heap)`` pair of dicts
"""
from __future__ import annotations

from collections import deque

from ..core_model import formula as F
from ..core_model import program as P
from ..core_model.expr import eval_expr
from ..errors import BudgetExceeded, KindMismatch


class _Zero(dict):
    def __missing__(self, key):
        return 0


def holds(f, env) -> bool:
    """Truth of a guard (plain arithmetic formula) in a concrete store."""
    env = _Zero(env)
    if isinstance(f, F.Cmp):
        a = f.lhs.poly.evaluate(_vals(f.lhs.poly, env))
        b = f.rhs.poly.evaluate(_vals(f.rhs.poly, env))
        return {"=": a == b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[f.op]
    if isinstance(f, F.Bool):
        return f.value
    if isinstance(f, F.Not):
        return not holds(f.arg, env)
    if isinstance(f, F.And):
        return holds(f.left, env) and holds(f.right, env)
    if isinstance(f, F.Or):
        return holds(f.left, env) or holds(f.right, env)
    if isinstance(f, F.Imp):
        return not holds(f.left, env) or holds(f.right, env)
    raise KindMismatch(f"{type(f).__name__} is not a guard")


def _vals(poly, env):
    return {v: env[v] for v in poly.variables}


def _ev(e, env):
    return eval_expr(e, _Zero(env))


def freeze(world):
    if isinstance(world, dict):
        return tuple(sorted(world.items()))
    if isinstance(world, tuple) and world and isinstance(world[0], dict):
        return tuple(freeze(w) for w in world)
    if isinstance(world, tuple) and len(world) == 2 and isinstance(world[1], dict):
        return (freeze(world[0]), freeze(world[1]))
    return world


def current_store(inst_name, world) -> dict:
    if inst_name == "pl":
        return world[-1]
    if inst_name == "sl":
        return world[0]
    return world


def _assign(inst_name, world, x, v):
    if inst_name == "pl":
        nxt = dict(world[-1])
        nxt[x] = v
        return world + (nxt,)
    if inst_name == "sl":
        s = dict(world[0])
        s[x] = v
        return (s, world[1])
    w = dict(world)
    w[x] = v
    return w


def concrete_step(inst_name, prog, world, alloc_base=37):
    """One-step successors ``[(prog', world')]`` of a ground configuration."""
    cur = current_store(inst_name, world)
    if isinstance(prog, P.Ter):
        return []
    if isinstance(prog, P.Assign):
        return [(P.TER, _assign(inst_name, world, prog.var, _ev(prog.expr, cur)))]
    if isinstance(prog, P.Seq):
        out = []
        for q, w in concrete_step(inst_name, prog.first, world, alloc_base):
            out.append((prog.second if isinstance(q, P.Ter) else P.Seq(q, prog.second), w))
        return out
    if isinstance(prog, P.If):
        branch = prog.then if holds(prog.cond, cur) else prog.orelse
        return concrete_step(inst_name, branch, world, alloc_base)
    if isinstance(prog, P.While):
        if not holds(prog.cond, cur):
            return [(P.TER, world)]
        out = []
        for q, w in concrete_step(inst_name, prog.body, world, alloc_base):
            out.append((prog if isinstance(q, P.Ter) else P.Seq(q, prog), w))
        return out
    if isinstance(prog, P.Test):
        return [(P.TER, world)] if holds(prog.cond, cur) else []
    if isinstance(prog, P.Choice):
        return [(prog.left, world), (prog.right, world)]
    if isinstance(prog, P.Loop):
        return [(P.Choice(P.Seq(prog.body, prog), P.Test(F.TRUE)), world)]
    if inst_name != "sl":
        raise KindMismatch(f"{type(prog).__name__} is a heap statement")
    s, h = dict(world[0]), dict(world[1])
    if isinstance(prog, P.Alloc):
        n = alloc_base
        while n in h:
            n += 1
        h[n] = _ev(prog.expr, s)
        s[prog.var] = n
    elif isinstance(prog, P.Load):
        a = _ev(prog.addr, s)
        if a not in h:
            return []
        s[prog.var] = h[a]
    elif isinstance(prog, P.Mutate):
        h[_ev(prog.addr, s)] = _ev(prog.value, s)
    elif isinstance(prog, P.Dispose):
        h.pop(_ev(prog.addr, s), None)
    else:
        raise KindMismatch(type(prog).__name__)
    return [(P.TER, (s, h))]


def run_to_completion(inst_name, prog, world, budget=100_000, alloc_base=37):
    """All final worlds reachable by terminating executions.

    Explores the reachable configuration graph; raises BudgetExceeded when
    more than ``budget`` configurations would be visited.
    """
    start = (prog, world)
    seen = {(prog, freeze(world))}
    queue = deque([start])
    finals = {}
    while queue:
        p, w = queue.popleft()
        if isinstance(p, P.Ter):
            finals.setdefault(freeze(w), w)
            continue
        for q, w2 in concrete_step(inst_name, p, w, alloc_base):
            key = (q, freeze(w2))
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > budget:
                raise BudgetExceeded(f"more than {budget} configurations explored")
            queue.append((q, w2))
    return list(finals.values())


def trace(inst_name, prog, world, budget=100_000, alloc_base=37):
    """Execution of a deterministic program: the world after each transition."""
    states = [world]
    p, w = prog, world
    for _ in range(budget):
        if isinstance(p, P.Ter):
            return states
        succ = concrete_step(inst_name, p, w, alloc_base)
        if len(succ) != 1:
            raise KindMismatch("trace needs a deterministic, non-blocking program")
        q, w2 = succ[0]
        states.append(w2)
        p, w = q, w2
    raise BudgetExceeded(f"no termination within {budget} steps")


def minimum_paths(inst_name, prog, world, budget=10_000, alloc_base=37):
    """Count terminating execution paths that never repeat a configuration."""
    count = 0
    visited = 0

    def dfs(p, w, on_path):
        nonlocal count, visited
        visited += 1
        if visited > budget:
            raise BudgetExceeded(f"more than {budget} path nodes explored")
        if isinstance(p, P.Ter):
            count += 1
            return
        for q, w2 in concrete_step(inst_name, p, w, alloc_base):
            key = (q, freeze(w2))
            if key in on_path:
                continue
            on_path.add(key)
            dfs(q, w2, on_path)
            on_path.discard(key)

    dfs(prog, world, {(prog, freeze(world))})
    return count
