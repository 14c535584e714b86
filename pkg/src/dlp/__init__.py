"""Labeled dynamic logic: program-independent cyclic proofs."""

__version__ = "0.1.0"
