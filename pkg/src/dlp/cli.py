"""Command-line front end: ``dlp prove | check | exec | oracle``.

Exit codes: 0 everything proved / valid / accepted, 1 something disproved,
refuted or rejected, 2 something unknown or over budget, 3 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .autoprover import Failure, SearchConfig, auto_prove
from .core_model import program as P
from .core_model.parser import parse_expr, parse_program, parse_sequent
from .core_model.printer import show_formula
from .cyclic import CertificateError, check_certificate, check_proof, render_table, to_certificate
from .document import DocumentError, load_document, parse_world
from .errors import BudgetExceeded, DlpError, SolverProcessError
from .instantiations.base import get_instantiation
from .instantiations.interp import run_to_completion, trace
from .instantiations.semantics import eval_sl_formula, eval_temporal
from .instantiations.termination import Variant
from .oracle import Counterexample, Oracle, Valid, ground_sequent
from .sampling import sample_sequent
from .script import ScriptError, run_script

EXIT_OK, EXIT_REFUTED, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


# --- reports -------------------------------------------------------------------------

@dataclass
class GoalReport:
    goal: str
    verdict: str                 # Proved | Disproved | Unknown
    detail: str = ""
    seconds: float = 0.0
    certificate: str | None = None
    oracle: str = ""
    counterexample: dict | None = None
    table: str | None = None

    @property
    def exit_code(self):
        return {"Proved": EXIT_OK, "Disproved": EXIT_REFUTED}.get(self.verdict, EXIT_UNKNOWN)

    def line(self):
        parts = [f"{self.goal}: {self.verdict}"]
        if self.detail:
            parts.append(f"({self.detail})")
        if self.counterexample is not None:
            parts.append("counterexample " + ", ".join(f"{k}={v}" for k, v in sorted(self.counterexample.items())))
        parts.append(f"time={self.seconds:.3f}s")
        if self.certificate:
            parts.append(f"certificate={self.certificate}")
        if self.oracle:
            parts.append(f"oracle={self.oracle}")
        return "  ".join(parts)


@dataclass
class RunReport:
    goals: list = field(default_factory=list)

    @property
    def exit_code(self):
        return max((g.exit_code for g in self.goals), default=EXIT_OK)


# --- prove --------------------------------------------------------------------------

def _variants(doc, specs):
    """``--variant NAME:expr`` (NAME a program of the document, or ``*``)."""
    out = []
    for spec in specs or ():
        site, sep, text = spec.partition(":")
        if not sep:
            raise InputError(f"--variant expects <loop-site>:<expr>, got {spec!r}")
        expr = parse_expr(text.strip(), doc.env)
        site = site.strip()
        if site in ("", "*"):
            out.append(Variant(expr))
            continue
        prog = doc.env.get(site)
        if not isinstance(prog, P.Program):
            raise InputError(f"--variant names unknown program {site!r}")
        loops = P.loops_of(prog)
        if not loops:
            raise InputError(f"program {site!r} has no loop")
        out.extend(Variant(expr, None, loop) for loop in loops)
    return tuple(out)


def _oracle_tag(oracle):
    text = oracle.describe()
    return text + (" bound-relative" if "bounded" in text else "")


def prove_goal(doc, name, args, oracle):
    start = time.perf_counter()
    goal = doc.goals[name]
    report = GoalReport(name, "Unknown", oracle=_oracle_tag(oracle))
    script = doc.proofs.get(name)
    if script is not None and not args.auto:
        graph = run_script(doc.inst, goal, script.lines, doc.env, oracle)
        verdict = check_proof(graph)
        if not verdict:
            report.detail = f"{verdict.code}: {verdict}"
            graph = None
    elif args.auto:
        cfg = SearchConfig(max_depth=args.depth, max_nodes=args.budget, variants=_variants(doc, args.variant),
                           alloc_base=args.alloc_base)
        result = auto_prove(goal, cfg, doc.inst, oracle)
        graph = None if isinstance(result, Failure) else result
        if graph is None:
            report.detail = result.reason
    else:
        graph = None
        report.detail = "no proof script (use --auto)"
    if graph is not None:
        report.verdict = "Proved"
        cert = to_certificate(graph, name)
        if args.out is not None:
            stem = doc.path.stem if doc.path else "goal"
            path = Path(args.out) / f"{stem}.{name}.cert.json"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(cert, indent=1) + "\n")
            report.certificate = str(path)
        if args.render_text:
            report.table = render_table(graph)
    else:
        # a failed proof attempt may still have a concrete counterexample
        ranges = {k: v for k, v in doc.samples.items()}
        sampled = sample_sequent(doc.inst, goal, n=args.samples, ranges=ranges, budget=2_000,
                                 stop_at_first=True, give_up_after=5)
        if sampled.counterexamples:
            report.verdict = "Disproved"
            report.counterexample = sampled.counterexamples[0]
    report.seconds = time.perf_counter() - start
    return report


def cmd_prove(args) -> int:
    oracle = Oracle.from_spec(args.oracle)
    reports = RunReport()
    for file in args.files:
        doc = load_document(file, alloc_base=args.alloc_base)
        names = [args.goal] if args.goal else list(doc.goals)
        for n in names:
            if n not in doc.goals:
                raise InputError(f"{file}: no goal named {n!r}")
        if args.script and not doc.proofs:
            raise InputError(f"{file}: --script given but the document has no proof")
        with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
            done = list(pool.map(lambda n: prove_goal(doc, n, args, oracle), names))
        for rep in done:
            print(rep.line())
            if rep.table:
                print(rep.table)
        reports.goals.extend(done)
    return reports.exit_code


# --- check --------------------------------------------------------------------------

def cmd_check(args) -> int:
    oracle = Oracle.from_spec(args.oracle)
    code = EXIT_OK
    for path in args.certificates:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InputError(str(exc)) from None
        verdict = check_certificate(text, oracle)
        print(f"{path}: {verdict}")
        if not verdict:
            code = max(code, EXIT_REFUTED)
    return code


# --- exec ---------------------------------------------------------------------------

def _show_world(world):
    return ", ".join(f"{k}={v}" for k, v in sorted(world.items()))


def _show_store(store):
    return ", ".join(f"{k}: {v}" for k, v in sorted(store.items()))


def _show_heap(heap):
    return ", ".join(f"{k}: {v}" for k, v in sorted(heap.items())) or "empty"


def sl_table(states):
    """Rows ``(name, store, heap name, heap)`` of a store-heap execution."""
    rows = []
    for i, (s, h) in enumerate(states):
        suffix = str(i) if i else ""
        rows.append((f"s{suffix}", _show_store(s), f"h{suffix}", _show_heap(h)))
    return rows


def _programs(doc, args):
    if args.program:
        prog = doc.env.get(args.program)
        if not isinstance(prog, P.Program):
            prog = parse_program(args.program, doc.env, doc.inst_name)
        return [prog]
    if not doc.execs:
        raise InputError("nothing to execute: add 'exec <program>' or pass --program")
    return doc.execs


def _worlds(doc, args):
    if args.world is None:
        if not doc.worlds:
            raise InputError("no world given: pass --world or add a 'world' line")
        return doc.worlds
    if doc.inst_name == "sl":
        from .document import _heap
        store, _, heap = args.world.partition(";")
        return [(parse_world(store), _heap(heap.replace("heap", "")))]
    w = parse_world(args.world)
    return [(w,) if doc.inst_name == "pl" else w]


def cmd_exec(args) -> int:
    doc = load_document(args.file, alloc_base=args.alloc_base)
    inst = doc.inst
    for prog in _programs(doc, args):
        for world in _worlds(doc, args):
            if inst.name == "sl":
                states = trace("sl", prog, world, args.budget, inst.alloc_base)
                for row in sl_table(states):
                    print("\t".join(row))
                for f in doc.checks:
                    print(f"check {show_formula(f)}: {eval_sl_formula(states[-1], f)}")
                continue
            finals = run_to_completion(inst.name, prog, world, args.budget, inst.alloc_base)
            if inst.name == "pl":
                for path in finals:
                    print("path: " + " ; ".join(_show_world(w) for w in path))
                    for f in doc.checks:
                        print(f"check {show_formula(f)}: {eval_temporal(path, f)}")
            else:
                if not finals:
                    print("no terminating execution")
                for w in sorted(finals, key=lambda w: sorted(w.items())):
                    print("final: " + _show_world(w))
    return EXIT_OK


# --- oracle -------------------------------------------------------------------------

def cmd_oracle(args) -> int:
    seq = parse_sequent(args.sequent, None, args.inst)
    inst = get_instantiation(args.inst)
    for lf in list(seq.left) + list(seq.right):
        inst.check_label(lf.label)
    problem = ground_sequent(seq)
    verdict = Oracle.from_spec(args.oracle).check(problem)
    print(verdict)
    if isinstance(verdict, Valid):
        return EXIT_OK
    if isinstance(verdict, Counterexample):
        return EXIT_REFUTED
    return EXIT_UNKNOWN


# --- entry point --------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="dlp", description="Cyclic proofs in labeled dynamic logic.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="prove the goals of .dlp documents")
    p.add_argument("files", nargs="+")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--script", action="store_true", help="use the embedded proof scripts (default)")
    mode.add_argument("--auto", action="store_true", help="search for proofs automatically")
    p.add_argument("--goal", help="only this goal")
    p.add_argument("--budget", type=int, default=500, help="node budget of the automatic search")
    p.add_argument("--depth", type=int, default=200, help="branch depth limit of the automatic search")
    p.add_argument("--variant", action="append", default=[], metavar="SITE:EXPR",
                   help="termination measure for the loops of program SITE (or * for any loop)")
    p.add_argument("--oracle", default=None, help="bounded:B or smt")
    p.add_argument("--render-text", action="store_true", help="print the proof as a node table")
    p.add_argument("--out", default=".", help="directory for certificates (default: current)")
    p.add_argument("--samples", type=int, default=200, help="random samples when looking for a counterexample")
    p.add_argument("--alloc-base", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="goals proved in parallel")
    p.set_defaults(func=cmd_prove)

    c = sub.add_parser("check", help="replay proof certificates")
    c.add_argument("certificates", nargs="+")
    c.add_argument("--oracle", default=None)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("exec", help="run the programs of a document on ground worlds")
    e.add_argument("file")
    e.add_argument("--world", default=None, help='e.g. "n=5,s=0"; for sl "x=3,y=4; heap 37=1"')
    e.add_argument("--program", default=None, help="program name or text (default: the exec lines)")
    e.add_argument("--budget", type=int, default=100_000)
    e.add_argument("--alloc-base", type=int, default=None)
    e.set_defaults(func=cmd_exec)

    o = sub.add_parser("oracle", help="decide a non-dynamic sequent")
    o.add_argument("sequent")
    o.add_argument("--inst", default="wp", choices=["wp", "fodl", "pl", "sl"])
    o.add_argument("--oracle", default=None)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, SolverProcessError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (InputError, DocumentError, ScriptError, CertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DlpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
