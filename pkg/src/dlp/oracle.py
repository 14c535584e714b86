"""Validity oracle for non-dynamic labeled sequents.

Two backends:

* ``bounded``: exhaustive integer enumeration over ``[-B, B]^k``.  A Valid
  verdict from it only means "no counterexample inside the box".
* ``smt``: an external SMT-LIB v2 solver run as a subprocess (enabled by
  the ``DLP_SMT`` environment variable or ``--oracle smt``).
"""
from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core_model.expr import Poly
from .core_model.formula import And, Bool, Cmp, Imp, Not, Or, formula_vars, is_dynamic
from .core_model.label import apply_label
from .core_model.sequent import Labeled, Sequent
from .errors import DlpError, SolverProcessError

DEFAULT_BOUND = 25
MAX_POINTS = 20_000_000
CHUNK = 1 << 20


# --- verdicts ---------------------------------------------------------------

@dataclass(frozen=True)
class Valid:
    backend: str
    bound: Optional[int] = None

    def __str__(self):
        if self.bound is not None:
            return f"Valid({self.backend}, B={self.bound})"
        return f"Valid({self.backend})"


@dataclass(frozen=True)
class Counterexample:
    assignment: dict = field(hash=False)

    def __str__(self):
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.assignment.items()))
        return f"Counterexample({inner})"


@dataclass(frozen=True)
class Unknown:
    reason: str

    def __str__(self):
        return f"Unknown({self.reason})"


def is_valid(v) -> bool:
    return isinstance(v, Valid)


# --- problems ---------------------------------------------------------------

class NotGround(DlpError):
    pass


@dataclass(frozen=True)
class EntailmentProblem:
    """Valid iff every integer assignment satisfying all hyps satisfies a goal."""
    hyps: tuple
    goals: tuple

    @property
    def variables(self):
        out = set()
        for f in self.hyps + self.goals:
            out |= formula_vars(f)
        return sorted(out)

    def key(self):
        from .core_model.canon import canon
        return (tuple(canon(f) for f in self.hyps), tuple(canon(f) for f in self.goals))


def ground_sequent(seq: Sequent) -> EntailmentProblem:
    hyps, goals = [], []
    for side, out in ((seq.left, hyps), (seq.right, goals)):
        for lf in side:
            if not isinstance(lf, Labeled):
                raise NotGround(f"cannot ground {lf}")
            if is_dynamic(lf.formula):
                raise NotGround(f"dynamic formula {lf}")
            out.append(apply_label(lf.label, lf.formula))
    return EntailmentProblem(tuple(hyps), tuple(goals))


# --- ground evaluation ---------------------------------------------------------

_CMP = {
    "=": lambda d: d == 0,
    "<": lambda d: d < 0,
    "<=": lambda d: d <= 0,
    ">": lambda d: d > 0,
    ">=": lambda d: d >= 0,
}


def eval_plain(f, env) -> bool:
    """Truth of a plain (label-free, non-dynamic) formula under integer values."""
    if isinstance(f, Cmp):
        return _CMP[f.op](f.lhs.poly.evaluate(env) - f.rhs.poly.evaluate(env))
    if isinstance(f, Bool):
        return f.value
    if isinstance(f, Not):
        return not eval_plain(f.arg, env)
    if isinstance(f, And):
        return eval_plain(f.left, env) and eval_plain(f.right, env)
    if isinstance(f, Or):
        return eval_plain(f.left, env) or eval_plain(f.right, env)
    if isinstance(f, Imp):
        return (not eval_plain(f.left, env)) or eval_plain(f.right, env)
    raise NotGround(f"{type(f).__name__} cannot be evaluated as plain arithmetic")


def problem_holds(problem: EntailmentProblem, env) -> bool:
    if all(eval_plain(h, env) for h in problem.hyps):
        return any(eval_plain(g, env) for g in problem.goals)
    return True


# --- vectorized bounded search ------------------------------------------------------

def _int_poly(p: Poly):
    d = p.denominator()
    return [(m, int(c * d)) for m, c in p.terms.items()]


def _magnitude(terms, bound):
    return sum(abs(c) * bound ** sum(k for _, k in m) for m, c in terms)


class _Compiled:
    def __init__(self, problem, bound):
        self.bound = bound
        self.safe = True
        self.hyps = [self._compile(f) for f in problem.hyps]
        self.goals = [self._compile(f) for f in problem.goals]

    def _compile(self, f):
        if isinstance(f, Cmp):
            terms = _int_poly(f.lhs.poly - f.rhs.poly)
            if _magnitude(terms, self.bound) >= 2 ** 62:
                self.safe = False
            op = _CMP[f.op]
            return lambda env: np.asarray(op(self._poly(terms, env)), dtype=bool)
        if isinstance(f, Bool):
            val = f.value
            return lambda env: np.full(env["__n"], val)
        if isinstance(f, Not):
            a = self._compile(f.arg)
            return lambda env: ~a(env)
        if isinstance(f, (And, Or, Imp)):
            a, b = self._compile(f.left), self._compile(f.right)
            if isinstance(f, And):
                return lambda env: a(env) & b(env)
            if isinstance(f, Or):
                return lambda env: a(env) | b(env)
            return lambda env: ~a(env) | b(env)
        raise NotGround(f"{type(f).__name__} cannot be checked by the oracle")

    def _poly(self, terms, env):
        total = np.zeros(env["__n"], dtype=env["__dtype"])
        for m, c in terms:
            t = np.full(env["__n"], c, dtype=env["__dtype"])
            for v, k in m:
                for _ in range(k):
                    t = t * env[v]
            total = total + t
        return total

    def falsified(self, env):
        n = env["__n"]
        ok = np.ones(n, dtype=bool)
        for h in self.hyps:
            ok &= h(env)
        bad = ok.copy()
        for g in self.goals:
            bad &= ~g(env)
        return bad


def bounded_check(problem: EntailmentProblem, bound=DEFAULT_BOUND, max_points=MAX_POINTS):
    names = problem.variables
    k = len(names)
    if k == 0:
        if problem_holds(problem, {}):
            return Valid("ground")
        return Counterexample({})
    b = bound
    while b > 0 and (2 * b + 1) ** k > max_points:
        b -= 1
    if b == 0:
        return Unknown(f"{k} variables exceed the enumeration budget")
    comp = _Compiled(problem, b)
    dtype = np.int64 if comp.safe else object
    side = 2 * b + 1
    total = side ** k
    best = None
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        env = {"__n": len(idx), "__dtype": dtype}
        cols = []
        rem = idx
        for name in reversed(names):
            col = rem % side - b
            rem = rem // side
            cols.append((name, col))
        for name, col in cols:
            env[name] = col.astype(dtype) if dtype is object else col
        bad = comp.falsified(env)
        if not bad.any():
            continue
        pts = np.stack([np.asarray(env[n], dtype=np.int64)[bad] for n in names], axis=1)
        absv = np.abs(pts)
        score = absv.max(axis=1) * (k * b + 1) + absv.sum(axis=1)
        order = np.lexsort(tuple(pts[:, i] for i in reversed(range(k))) + (score,))
        cand = pts[order[0]]
        cand_key = (int(score[order[0]]), tuple(int(x) for x in cand))
        if best is None or cand_key < best[0]:
            best = (cand_key, {n: int(v) for n, v in zip(names, cand)})
    if best is not None:
        return Counterexample(best[1])
    return Valid("bounded", b)


# --- SMT-LIB backend ----------------------------------------------------------

def _smt_name(v):
    return "|" + v + "|"


def _smt_poly(p: Poly):
    terms = _int_poly(p)
    if not terms:
        return "0"
    parts = []
    for m, c in terms:
        factors = [_smt_int(c)] + [_smt_name(v) for v, k in m for _ in range(k)]
        parts.append(factors[0] if len(factors) == 1 else "(* " + " ".join(factors) + ")")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def _smt_int(c):
    return str(c) if c >= 0 else f"(- {-c})"


def _smt_formula(f):
    if isinstance(f, Cmp):
        d = f.lhs.poly - f.rhs.poly
        op = {"=": "="}.get(f.op, f.op)
        return f"({op} {_smt_poly(d)} 0)"
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.arg)})"
    if isinstance(f, And):
        return f"(and {_smt_formula(f.left)} {_smt_formula(f.right)})"
    if isinstance(f, Or):
        return f"(or {_smt_formula(f.left)} {_smt_formula(f.right)})"
    if isinstance(f, Imp):
        return f"(=> {_smt_formula(f.left)} {_smt_formula(f.right)})"
    raise NotGround(f"{type(f).__name__} cannot be sent to the solver")


def smt_script(problem: EntailmentProblem) -> str:
    lines = ["(set-logic ALL)"]
    names = problem.variables
    lines += [f"(declare-const {_smt_name(v)} Int)" for v in names]
    for h in problem.hyps:
        lines.append(f"(assert {_smt_formula(h)})")
    goals = " ".join(_smt_formula(g) for g in problem.goals) or "false"
    lines.append(f"(assert (not (or false {goals})))")
    lines.append("(check-sat)")
    if names:
        lines.append("(get-value (" + " ".join(_smt_name(v) for v in names) + "))")
    return "\n".join(lines) + "\n"


_VALUE = re.compile(r"\(\|([^|]+)\|\s+(\(\s*-\s*\d+\s*\)|-?\d+)\)")


def smt_check(problem: EntailmentProblem, solver: str, timeout=20.0):
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(smt_script(problem))
        path = fh.name
    try:
        proc = subprocess.run([solver, path], capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return Unknown("solver timeout")
    except OSError as exc:
        raise SolverProcessError(f"cannot run {solver}: {exc}") from exc
    finally:
        os.unlink(path)
    out = proc.stdout.strip()
    first = out.split("\n", 1)[0].strip() if out else ""
    if first == "unsat":
        return Valid("smt")
    if first == "unknown":
        return Unknown("solver returned unknown")
    if first != "sat":
        raise SolverProcessError(f"unexpected solver output: {out[:200]!r} {proc.stderr[:200]!r}")
    env = {}
    for name, val in _VALUE.findall(out):
        env[name] = int(val.replace("(", "").replace(")", "").replace(" ", ""))
    for v in problem.variables:
        env.setdefault(v, 0)
    if problem_holds(problem, env):
        raise SolverProcessError("solver model does not falsify the entailment")
    return Counterexample(env)


# --- facade -----------------------------------------------------------------------

class Oracle:
    """Caching validity oracle; ``spec`` is ``bounded:B`` or ``smt``."""

    def __init__(self, bound=DEFAULT_BOUND, solver=None, max_points=MAX_POINTS):
        self.bound = bound
        self.solver = solver
        self.max_points = max_points
        self._cache = {}
        self.calls = 0

    @classmethod
    def from_spec(cls, spec=None):
        if spec is None:
            env = os.environ.get("DLP_SMT")
            return cls(solver=env) if env else cls()
        if spec == "smt":
            solver = os.environ.get("DLP_SMT") or shutil.which("z3")
            if not solver:
                raise SolverProcessError("no SMT solver: set DLP_SMT to a solver binary")
            return cls(solver=solver)
        if spec.startswith("bounded"):
            _, _, b = spec.partition(":")
            return cls(bound=int(b) if b else DEFAULT_BOUND)
        raise ValueError(f"unknown oracle specification {spec!r}")

    def describe(self):
        return f"smt:{self.solver}" if self.solver else f"bounded:{self.bound}"

    def check(self, problem: EntailmentProblem):
        key = problem.key()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        self.calls += 1
        verdict = None
        if self.solver and problem.variables:
            verdict = smt_check(problem, self.solver)
            if isinstance(verdict, Unknown):
                verdict = None
        if verdict is None:
            verdict = bounded_check(problem, self.bound, self.max_points)
        self._cache[key] = verdict
        return verdict

    def check_sequent(self, seq: Sequent):
        return self.check(ground_sequent(seq))

    def entails(self, hyps, goal_lf) -> bool:
        """True when the labeled hypotheses entail ``goal_lf``."""
        return is_valid(self.check_sequent(Sequent(hyps, [goal_lf])))


def check_validity(problem: EntailmentProblem, oracle: Oracle | None = None):
    return (oracle or Oracle.from_spec()).check(problem)


__all__ = [
    "Valid", "Counterexample", "Unknown", "EntailmentProblem", "ground_sequent", "check_validity",
    "Oracle", "bounded_check", "smt_check", "smt_script", "eval_plain", "problem_holds", "NotGround",
]
