import os
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlp.core_model.parser import parse_formula, parse_sequent
from dlp.cyclic import to_certificate
from dlp.errors import SolverProcessError
from dlp.oracle import (
    Counterexample, EntailmentProblem, NotGround, Oracle, Unknown, Valid, bounded_check, check_validity,
    ground_sequent, problem_holds, smt_check, smt_script,
)

from helpers import corpus_graph
from strategies import plain_formulas

SMALL = ("x", "y")
Z3 = os.environ.get("DLP_SMT") or shutil.which("z3")
needs_z3 = pytest.mark.skipif(not Z3, reason="no SMT solver on PATH")


def problem(text):
    return ground_sequent(parse_sequent(text))


def is_valid_text(text):
    return isinstance(bounded_check(problem(text)), Valid)


@pytest.fixture(scope="module")
def sum_obligations():
    _, graph = corpus_graph("partial_sum")
    cert = to_certificate(graph, "sum")
    return {ob["node"]: parse_sequent(ob["sequent"]) for ob in cert["obligations"]}


def test_partial_sum_obligations_valid(sum_obligations):
    assert set(sum_obligations) == {"8", "13", "17"}
    for seq in sum_obligations.values():
        verdict = bounded_check(ground_sequent(seq))
        assert verdict == Valid("bounded", 25)
        assert str(verdict) == "Valid(bounded, B=25)"


def test_successor_positive():
    assert bounded_check(problem("{x -> t} : x >= 0 |- {x -> t + 1} : x > 0")) == Valid("bounded", 25)


def test_minimal_counterexample():
    verdict = bounded_check(problem("|- {x -> t} : t > 0"))
    assert isinstance(verdict, Counterexample)
    assert verdict.assignment == {"t": 0}
    assert str(verdict) == "Counterexample(t=0)"


def test_ground_problems():
    assert bounded_check(problem("|- {x -> 3} : x > 2")) == Valid("ground")
    assert bounded_check(problem("|- {x -> 3} : x > 4")) == Counterexample({})


def test_empty_succedent_means_unsatisfiable_hyps():
    assert is_valid_text("{x -> t} : t > 0, {x -> t} : t < 0 |-")
    assert not is_valid_text("{x -> t} : t > 0 |-")


def test_dynamic_formula_not_ground():
    with pytest.raises(NotGround):
        problem("|- {x -> t} : [x := 1] x > 0")


def test_budget_shrinks_then_gives_up():
    p = EntailmentProblem((), (parse_formula("a + b + c + d >= -100"),))
    verdict = bounded_check(p, bound=25, max_points=10_000)
    assert isinstance(verdict, Valid) and verdict.bound == 4
    assert isinstance(bounded_check(p, bound=25, max_points=1), Unknown)


def test_large_coefficients_do_not_overflow():
    p = EntailmentProblem((), (parse_formula("x*x*x*x*x*x*x*x*x*x*x*x*x*x >= 0 || x < 0"),))
    assert isinstance(bounded_check(p), Valid)


def test_oracle_caches():
    oracle = Oracle.from_spec("bounded:5")
    p = problem("|- {x -> t} : t*t >= 0")
    assert oracle.check(p) is oracle.check(p)
    assert oracle.calls == 1
    assert oracle.describe() == "bounded:5"


def test_oracle_spec_parsing():
    assert Oracle.from_spec("bounded").bound == 25
    with pytest.raises(ValueError):
        Oracle.from_spec("magic")


def test_check_validity_default():
    assert isinstance(check_validity(problem("|- {x -> t} : t = t")), Valid)


# --- properties --------------------------------------------------------------------

@settings(max_examples=150, deadline=None)
@given(st.lists(plain_formulas(SMALL), max_size=2), st.lists(plain_formulas(SMALL), min_size=1, max_size=2))
def test_counterexamples_refute(hyps, goals):
    p = EntailmentProblem(tuple(hyps), tuple(goals))
    verdict = bounded_check(p, bound=4)
    if isinstance(verdict, Counterexample):
        assert not problem_holds(p, {v: verdict.assignment.get(v, 0) for v in p.variables})


@settings(max_examples=100, deadline=None)
@given(st.lists(plain_formulas(SMALL), max_size=2), st.lists(plain_formulas(SMALL), min_size=1, max_size=2),
       st.integers(1, 5), st.integers(0, 4))
def test_bound_monotone(hyps, goals, small, extra):
    p = EntailmentProblem(tuple(hyps), tuple(goals))
    low, high = bounded_check(p, bound=small), bounded_check(p, bound=small + extra)
    if isinstance(high, Valid):
        assert isinstance(low, Valid)
    if isinstance(low, Counterexample):
        assert isinstance(high, Counterexample)


# --- SMT backend --------------------------------------------------------------------

def test_smt_script_shape():
    text = smt_script(problem("{x -> t} : t >= 0 |- {x -> t / 2} : x >= 0"))
    assert "(declare-const |t| Int)" in text and "(check-sat)" in text


def test_missing_solver_binary():
    with pytest.raises(SolverProcessError):
        smt_check(problem("|- {x -> t} : t > 0"), "/nonexistent/solver")


@needs_z3
def test_smt_agrees_with_bounded(sum_obligations):
    assert smt_check(ground_sequent(sum_obligations["17"]), Z3) == Valid("smt")
    cex = smt_check(problem("|- {x -> t} : t > 0"), Z3)
    assert isinstance(cex, Counterexample) and cex.assignment["t"] <= 0


@needs_z3
def test_smt_beyond_the_box():
    # valid inside [-25, 25] but not everywhere
    p = problem("|- {x -> t} : t < 100")
    assert isinstance(bounded_check(p), Valid)
    assert isinstance(smt_check(p, Z3), Counterexample)


@needs_z3
@settings(max_examples=40, deadline=None)
@given(st.lists(plain_formulas(SMALL), max_size=2), st.lists(plain_formulas(SMALL), min_size=1, max_size=2))
def test_smt_refutations_agree(hyps, goals):
    p = EntailmentProblem(tuple(hyps), tuple(goals))
    smt = smt_check(p, Z3)
    if isinstance(bounded_check(p, bound=6), Counterexample):
        assert isinstance(smt, Counterexample)
    if isinstance(smt, Valid):
        assert not isinstance(bounded_check(p, bound=6), Counterexample)
