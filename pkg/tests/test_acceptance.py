"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (``pytest tests/test_acceptance.py -s``) or directly
(``python3 tests/test_acceptance.py``).  Every check returns ``(ok, detail)``
so the printed line carries the measured numbers.
"""
import json
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dlp.autoprover import Failure, SearchConfig, auto_prove  # noqa: E402
from dlp.core_model.label import StoreSeq  # noqa: E402
from dlp.core_model.parser import parse_formula, parse_label, parse_program, parse_sequent  # noqa: E402
from dlp.core_model.sequent import Labeled  # noqa: E402
from dlp.core_model.subst import is_free_label  # noqa: E402
from dlp.cyclic import check_cyclic, check_proof, cycle_progress_counts, from_certificate  # noqa: E402
from dlp.instantiations import eval_sl_formula, eval_temporal, run_to_completion, trace  # noqa: E402
from dlp.kernel import RuleId, gen_rule_instance, lift_rule, seq_rule_instance  # noqa: E402
from dlp.oracle import Counterexample, EntailmentProblem, Valid, bounded_check, ground_sequent, problem_holds  # noqa: E402

from helpers import CORPUS, corpus_graph, corpus_proofs, sample_root, step_mismatch  # noqa: E402
from metamorphic import GENERATORS, check_rule  # noqa: E402
from strategies import rand_fodl, rand_plain, rand_world, rand_wp  # noqa: E402

# pinned tolerances
REPLAY_SECONDS = 1.0
SOUNDNESS_SAMPLES = 200
UNKNOWN_SHARE = 0.05
NEGATIVE_BUDGET = 1000
STEP_PAIRS = 1000
STEP_SECONDS = 30.0
ORACLE_SECONDS = 5.0
FALSE_ENTAILMENTS = 1000
RULE_INSTANCES = 500
RULE_SAMPLES = 100
AUTO_BUDGET = 500


def c1_partial_sum_replay():
    start = time.perf_counter()
    _, graph = corpus_graph("partial_sum")
    verdict = check_proof(graph)
    seconds = time.perf_counter() - start
    links = {bud: bl.companion for bud, bl in graph.backlinks.items()}
    progress = cycle_progress_counts(graph).get("16", 0)
    ok = bool(verdict) and links == {"16": "2"} and progress >= 2 and seconds < REPLAY_SECONDS
    return ok, f"{verdict}, back-links {links}, progressive steps {progress}, {seconds:.3f}s"


def c2_corpus_soundness():
    parts, ok = [], True
    for stem, name in corpus_proofs():
        doc, graph = corpus_graph(stem, name)
        if not check_proof(graph):
            continue
        bad, unknown = sample_root(doc.inst, graph.nodes[graph.root].sequent, SOUNDNESS_SAMPLES)
        ok &= not bad and unknown < UNKNOWN_SHARE * SOUNDNESS_SAMPLES
        parts.append(f"{stem}/{name}: {len(bad)} cex {unknown} unknown")
    return ok and bool(parts), "; ".join(parts)


def c3_negative_cycle():
    _, graph = corpus_graph("diverge_diamond")
    verdict = check_cyclic(graph)
    cert_graph, _ = from_certificate(json.loads((CORPUS / "diverge_diamond.cert.json").read_text()))
    cert_verdict = check_cyclic(cert_graph)
    result = auto_prove(parse_sequent("|- {x -> 1} : <while true do x := x + 1 end> true"),
                        SearchConfig(max_nodes=NEGATIVE_BUDGET))
    ok = (not verdict and verdict.code == "NoProgressiveTrace" and bool(verdict.witness)
          and not cert_verdict and isinstance(result, Failure) and result.reason == "TerminationUnknown")
    return ok, f"script: {verdict.code} witness {verdict.witness}; certificate: {cert_verdict.code}; auto: {result}"


def c4_step_equivalence():
    start = time.perf_counter()
    counts = {}
    for name, gen in (("wp", rand_wp), ("fodl", rand_fodl)):
        rng = random.Random(f"step-{name}")
        counts[name] = sum(step_mismatch(name, gen(rng, 4), rand_world(rng)) is not None for _ in range(STEP_PAIRS))
    seconds = time.perf_counter() - start
    ok = not any(counts.values()) and seconds < STEP_SECONDS
    return ok, f"mismatches {counts} over {STEP_PAIRS} pairs each, {seconds:.2f}s"


def _random_false_entailment(rng):
    while True:
        hyps = tuple(rand_plain(rng, 2) for _ in range(rng.randint(0, 2)))
        goals = tuple(rand_plain(rng, 2) for _ in range(rng.randint(1, 2)))
        problem = EntailmentProblem(hyps, goals)
        for _ in range(60):
            env = {v: rng.randint(-10, 10) for v in problem.variables}
            if not problem_holds(problem, env):
                return problem


def c5_oracle_fidelity():
    _, graph = corpus_graph("partial_sum")
    obligations = [graph.nodes[n].sequent for n in ("8", "13", "17")]
    start = time.perf_counter()
    verdicts = [bounded_check(ground_sequent(s), 25) for s in obligations]
    seconds = time.perf_counter() - start
    rng = random.Random("false-entailments")
    refuted = 0
    for _ in range(FALSE_ENTAILMENTS):
        problem = _random_false_entailment(rng)
        verdict = bounded_check(problem, 25)
        if isinstance(verdict, Counterexample):
            env = {v: verdict.assignment.get(v, 0) for v in problem.variables}
            refuted += not problem_holds(problem, env)
    ok = all(v == Valid("bounded", 25) for v in verdicts) and seconds < ORACLE_SECONDS and refuted == FALSE_ENTAILMENTS
    return ok, f"obligations {[str(v) for v in verdicts]} in {seconds:.2f}s; {refuted}/{FALSE_ENTAILMENTS} refuted"


def c6_heterogeneity():
    wp = parse_program("while n > 0 do s := s + n; n := n - 1 end", None, "wp")
    wpr = parse_program("((n > 0)?; s := s + n; n := n - 1)*; (!(n > 0))?", None, "fodl")
    diffs = []
    for n in range(0, 11):
        for s in (0, 7):
            world = {"n": n, "s": s}
            a = {tuple(sorted(w.items())) for w in run_to_completion("wp", wp, world)}
            b = {tuple(sorted(w.items())) for w in run_to_completion("fodl", wpr, world)}
            if a != b or len(a) != 1:
                diffs.append((world, a, b))
    return not diffs, f"{22 - len(diffs)}/22 inputs agree" + (f", first difference {diffs[0]}" if diffs else "")


def c7_process_logic():
    _, graph = corpus_graph("pl_future")
    verdict = check_proof(graph)
    want = [parse_label("{x -> -1}"), parse_label("{x -> 0}"), parse_label("{x -> 1}")]
    reached = any(
        isinstance(lf, Labeled) and isinstance(lf.label, StoreSeq) and list(lf.label.stores) == want
        and "Suf" in str(lf.formula) and lf.formula.__class__.__name__ == "Or"
        for node in graph.nodes.values() for lf in node.sequent.right
    )
    temporal = {n.app.rule for n in graph.nodes.values() if n.app} & {RuleId.TempSufR1, RuleId.TempSufR2}
    ev = parse_formula("ev x > 0", None, "pl")
    path_value = eval_temporal(({"x": -1}, {"x": 0}, {"x": 1}), ev)
    ok = bool(verdict) and reached and len(temporal) == 2 and path_value is True
    return ok, f"{verdict}, three-store label reached {reached}, temporal rules {sorted(r.value for r in temporal)}, path verdict {path_value}"


def c8_separation_logic():
    prog = parse_program("x := cons(1); y := cons(1); [y] := 37; y := [x + 1]; dispose(x + 1)", None, "sl")
    states = trace("sl", prog, ({"x": 3, "y": 4}, {}), alloc_base=37)
    want = [
        ({"x": 3, "y": 4}, {}),
        ({"x": 37, "y": 4}, {37: 1}),
        ({"x": 37, "y": 38}, {37: 1, 38: 1}),
        ({"x": 37, "y": 38}, {37: 1, 38: 37}),
        ({"x": 37, "y": 37}, {37: 1, 38: 37}),
        ({"x": 37, "y": 37}, {37: 1}),
    ]
    star = eval_sl_formula(states[-1], parse_formula("x |-> 1 ** y |-> 1", None, "sl"))
    both = eval_sl_formula(states[-1], parse_formula("x |-> 1 && y |-> 1", None, "sl"))
    ok = states == want and star is False and both is True
    return ok, f"{len(states)} rows {'match' if states == want else 'differ'}; last state: star {star}, conjunction {both}"


def c9_lifting():
    tau = parse_label("{x -> t}")
    prems, concl = seq_rule_instance(parse_program("x := x + 1"), parse_program("y := x"), parse_formula("y > 0"))
    seq_rule = lift_rule("seq", prems, concl, tau, register=False)
    prems, concl = gen_rule_instance(parse_program("x := x + 1"), parse_formula("x > 1"), parse_formula("x > 0"))
    gen_rule = lift_rule("gen", prems, concl, tau, register=False)
    replay = {name: bool(check_proof(corpus_graph("lift_seq", name)[1])) for name in ("seq", "gen")}
    closes_by_ax = any(n.app and n.app.rule is RuleId.Ax for n in corpus_graph("lift_seq", "seq")[1].nodes.values())
    phi = [parse_formula("x + y > 1")]
    free_ok = is_free_label(parse_label("{x -> t + 1}"), phi) and not is_free_label(parse_label("{x -> 0, y -> 0}"), phi)
    ok = seq_rule is not None and gen_rule is not None and all(replay.values()) and closes_by_ax and free_ok
    return ok, f"lifted rules built; replays {replay}; closes by Ax {closes_by_ax}; freeness examples {free_ok}"


def c10_rule_soundness(instances=RULE_INSTANCES, samples=RULE_SAMPLES):
    bad, vacuous = {}, []
    for rule in GENERATORS:
        report = check_rule(rule, instances=instances, samples=samples, seed=0)
        if report.violations:
            bad[rule.value] = len(report.violations)
        if not report.non_vacuous:
            vacuous.append(rule.value)
    detail = f"{len(GENERATORS)} rules x {instances} instances x {samples} samples, violations {bad or 0}"
    if vacuous:
        detail += f", never exercised: {vacuous}"
    return not bad, detail


def c11_autoprover_floor():
    goals = [
        "{x -> t} : x > 0 |- {x -> t} : [while x > 0 do x := x - 1 end] x <= 0",
        "|- {x -> t} : [if x > 0 then x := x else x := 0 - x end] x >= 0",
    ]
    out = []
    for text in goals:
        result = auto_prove(parse_sequent(text), SearchConfig(max_nodes=AUTO_BUDGET))
        out.append(bool(result) and bool(check_proof(result)))
    return all(out), f"proved and certified: {out}"


CRITERIA = [
    ("C1 partial-sum replay", c1_partial_sum_replay),
    ("C2 corpus soundness sampling", c2_corpus_soundness),
    ("C3 non-progressing cycle rejected", c3_negative_cycle),
    ("C4 symbolic step matches interpreter", c4_step_equivalence),
    ("C5 oracle fidelity", c5_oracle_fidelity),
    ("C6 while loop vs regular encoding", c6_heterogeneity),
    ("C7 process-logic replay", c7_process_logic),
    ("C8 separation-logic trace", c8_separation_logic),
    ("C9 lifting", c9_lifting),
    ("C10 per-rule metamorphic soundness", c10_rule_soundness),
    ("C11 auto-prover floor", c11_autoprover_floor),
]


def _line(title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {title}: {detail}"


@pytest.mark.parametrize("title, check", CRITERIA, ids=[t.split()[0] for t, _ in CRITERIA])
def test_criterion(title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for title, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
