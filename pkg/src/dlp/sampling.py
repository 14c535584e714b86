"""Random ground instances of sequents, evaluated with the reference semantics."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core_model import formula as F
from .core_model.label import Store, StoreHeap, StoreSeq
from .core_model.sequent import Labeled
from .errors import NonIntegralDivision
from .instantiations.semantics import UNKNOWN, eval_sequent

GENERIC_RANGE = (-20, 20)


def sequent_vars(seq) -> set:
    out = set()
    for lf in list(seq.left) + list(seq.right):
        if not isinstance(lf, Labeled):
            continue
        lab = lf.label
        if isinstance(lab, (Store, StoreSeq)):
            out |= set(lab.free_vars())
        elif isinstance(lab, StoreHeap):
            out |= set(lab.s)
        out |= set(F.formula_vars(lf.formula))
    return out


@dataclass
class SampleReport:
    checked: int = 0
    unknown: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def unknown_rate(self):
        total = self.checked + self.unknown
        return self.unknown / total if total else 0.0


def sample_sequent(inst, seq, n=200, ranges=None, seed=0, budget=20_000, stop_at_first=False,
                   give_up_after=None):
    """Evaluate ``seq`` at ``n`` random ground assignments of its variables.

    ``ranges`` maps variable names to inclusive ``(lo, hi)``; other variables
    are drawn from GENERIC_RANGE.  With ``give_up_after`` the run stops once
    that many samples came back Unknown before any sample was decided.
    """
    ranges = ranges or {}
    rng = random.Random(seed)
    names = sorted(sequent_vars(seq))
    report = SampleReport()
    for _ in range(n):
        env = {}
        for x in names:
            lo, hi = ranges.get(x, GENERIC_RANGE)
            env[x] = rng.randint(lo, hi)
        try:
            value = eval_sequent(inst, seq, env, budget)
        except NonIntegralDivision:
            value = UNKNOWN
        if value is UNKNOWN:
            report.unknown += 1
            if give_up_after is not None and not report.checked and report.unknown >= give_up_after:
                break
            continue
        report.checked += 1
        if value is False:
            report.counterexamples.append(env)
            if stop_at_first:
                break
    return report
