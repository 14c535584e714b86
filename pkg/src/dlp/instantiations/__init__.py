"""Instantiation packs: while programs, regular programs, path formulas and
heap programs, each with a symbolic step relation and a concrete interpreter."""
from .base import (
    FODL, PACKS, PL, SL, WP, Instantiation, StepResult, Successor, get_instantiation, step,
)
from .interp import concrete_step, run_to_completion, trace
from .semantics import (
    UNKNOWN, eval_dlp_formula, eval_lf, eval_sequent, eval_sl_formula, eval_temporal,
    validate_termination_finiteness,
)
from .termination import TerminationProof, TerminationUnknown, Unroll, Variant, terminates

__all__ = [
    "FODL", "PACKS", "PL", "SL", "WP", "Instantiation", "StepResult", "Successor",
    "get_instantiation", "step", "concrete_step", "run_to_completion", "trace", "UNKNOWN",
    "eval_dlp_formula", "eval_lf", "eval_sequent", "eval_sl_formula", "eval_temporal",
    "validate_termination_finiteness", "TerminationProof", "TerminationUnknown", "Unroll",
    "Variant", "terminates",
]
