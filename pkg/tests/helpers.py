"""Shared fixtures: step comparisons and corpus proof graphs."""
from pathlib import Path

from dlp.core_model.canon import canon
from dlp.core_model.expr import eval_expr
from dlp.instantiations import concrete_step, get_instantiation, step
from dlp.instantiations.base import ground_store
from dlp.instantiations.interp import freeze


def symbolic_successors(inst_name, prog, world):
    inst = get_instantiation(inst_name)
    res = step(inst, [], prog, ground_store(world))
    assert res.exhaustive, "ground guards must always be decided"
    out = set()
    for s in res.successors:
        w = {x: eval_expr(e, {}) for x, e in s.label.entries}
        out.add((canon(s.prog), freeze(w)))
    return out


def concrete_successors(inst_name, prog, world):
    return {(canon(q), freeze(w)) for q, w in concrete_step(inst_name, prog, world)}


def step_mismatch(inst_name, prog, world):
    """None when both relations agree, else the two successor sets."""
    a = symbolic_successors(inst_name, prog, world)
    b = concrete_successors(inst_name, prog, world)
    return None if a == b else (a, b)


CORPUS = Path(__file__).resolve().parents[1] / "src" / "dlp" / "corpus"


def corpus_graph(stem, goal=None):
    """The proof graph built by the script of ``goal`` in a corpus document."""
    from dlp.document import load_document
    from dlp.script import run_script

    doc = load_document(CORPUS / f"{stem}.dlp")
    goal = goal or next(iter(doc.proofs))
    graph = run_script(doc.inst, doc.goals[goal], doc.proofs[goal].lines, doc.env)
    return doc, graph


def corpus_proofs():
    """Every (stem, goal name) pair with a proof script in the corpus."""
    from dlp.document import load_document

    out = []
    for path in sorted(CORPUS.glob("*.dlp")):
        doc = load_document(path)
        out.extend((path.stem, name) for name in doc.proofs)
    return out


WIDE_RANGES = {"N": (0, 15), "m": (0, 15)}


def sample_root(inst, seq, samples=200, seed=0):
    """Evaluate ``seq`` at random ground assignments; returns ``(false_envs, unknown_count)``.

    ``N`` and ``m`` range over [0, 15], every other variable over [-20, 20].
    """
    from dlp.sampling import sample_sequent

    report = sample_sequent(inst, seq, n=samples, ranges=WIDE_RANGES, seed=seed)
    return report.counterexamples, report.unknown
