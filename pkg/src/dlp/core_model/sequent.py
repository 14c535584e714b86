"""Labeled formulas and multiset sequents."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .canon import canon
from .formula import Formula, is_dynamic
from .label import Label
from .program import Program


class LabeledFormula:
    def __str__(self):
        from .printer import show_lf
        return show_lf(self)


@dataclass(frozen=True)
class Labeled(LabeledFormula):
    label: Label
    formula: Formula


@dataclass(frozen=True)
class Transition(LabeledFormula):
    """(prog, label) --> (prog2, label2)."""
    prog: Program
    label: Label
    prog2: Program
    label2: Label


@dataclass(frozen=True)
class Termination(LabeledFormula):
    """label terminates on prog."""
    label: Label
    prog: Program


def lf_dynamic(lf) -> bool:
    if isinstance(lf, Labeled):
        return is_dynamic(lf.formula)
    return True


class Sequent:
    """Gamma => Delta, compared as multisets modulo arithmetic normal form."""

    __slots__ = ("left", "right", "_key")

    def __init__(self, left=(), right=()):
        self.left = tuple(left)
        self.right = tuple(right)
        self._key = None

    def key(self):
        if self._key is None:
            self._key = (
                tuple(sorted(Counter(canon(f) for f in self.left).items(), key=repr)),
                tuple(sorted(Counter(canon(f) for f in self.right).items(), key=repr)),
            )
        return self._key

    def __eq__(self, other):
        return isinstance(other, Sequent) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Sequent({self})"

    def __str__(self):
        from .printer import show_sequent
        return show_sequent(self)

    def side(self, name):
        return self.left if name == "L" else self.right

    def replace(self, side, index, new_items):
        """Copy with the formula at (side, index) replaced by ``new_items`` in place."""
        items = list(self.side(side))
        items[index:index + 1] = list(new_items)
        if side == "L":
            return Sequent(items, self.right)
        return Sequent(self.left, items)

    def add(self, side, items):
        if side == "L":
            return Sequent(self.left + tuple(items), self.right)
        return Sequent(self.left, self.right + tuple(items))

    def drop(self, side, indices):
        keep = [f for i, f in enumerate(self.side(side)) if i not in set(indices)]
        return Sequent(keep, self.right) if side == "L" else Sequent(self.left, keep)

    def occurrences(self):
        return [("L", i) for i in range(len(self.left))] + [("R", i) for i in range(len(self.right))]

    def at(self, occ):
        return self.side(occ[0])[occ[1]]

    def flat_index(self, occ):
        return occ[1] if occ[0] == "L" else len(self.left) + occ[1]

    def from_flat(self, k):
        return ("L", k) if k < len(self.left) else ("R", k - len(self.left))

    def is_dynamic_free(self):
        return not any(lf_dynamic(f) for f in self.left + self.right)
