import json
import subprocess
import sys

import pytest

from dlp.cli import main

from helpers import CORPUS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_prove_partial_sum_script(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CORPUS / "partial_sum.dlp", "--out", tmp_path)
    assert code == 0 and "sum: Proved" in out
    cert = tmp_path / "partial_sum.sum.cert.json"
    code, out, _ = run(capsys, "check", cert)
    assert code == 0 and "Accept" in out


def test_prove_trivial_goal(capsys, tmp_path):
    doc = tmp_path / "triv.dlp"
    doc.write_text("instantiation: wp\ngoal t : {x -> 0} : true |- {x -> 0} : true\n")
    code, out, _ = run(capsys, "prove", doc, "--auto", "--out", tmp_path)
    assert code == 0 and "t: Proved" in out


def test_prove_render_text(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CORPUS / "partial_sum.dlp", "--render-text", "--out", tmp_path)
    assert code == 0
    assert "16" in out and "BoxR" in out


def test_prove_diverging_auto(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CORPUS / "diverge_diamond.dlp", "--auto", "--budget", 1000,
                       "--out", tmp_path)
    assert code == 2 and "Unknown" in out and "TerminationUnknown" in out


def test_prove_script_rejected(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CORPUS / "diverge_diamond.dlp", "--out", tmp_path)
    assert code == 2 and "NoProgressiveTrace" in out


def test_prove_disproved(capsys, tmp_path):
    doc = tmp_path / "bad.dlp"
    doc.write_text("instantiation: wp\ngoal bad : |- {x -> t} : [x := x + 1] x > 5\n")
    code, out, _ = run(capsys, "prove", doc, "--auto", "--out", tmp_path)
    assert code == 1 and "Disproved" in out and "counterexample" in out


def test_prove_auto_corpus(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CORPUS / "auto_countdown.dlp", "--auto", "--out", tmp_path)
    assert code == 0 and out.count("Proved") == 2
    for cert in tmp_path.glob("*.cert.json"):
        assert run(capsys, "check", cert)[0] == 0


def test_parse_error_exit(capsys, tmp_path):
    doc = tmp_path / "broken.dlp"
    doc.write_text("instantiation: wp\ngoal g : |- {x -> } : x\n")
    code, _, err = run(capsys, "prove", doc)
    assert code == 3 and "error" in err


def test_unknown_goal_exit(capsys):
    code, _, _ = run(capsys, "prove", CORPUS / "partial_sum.dlp", "--goal", "nope")
    assert code == 3


def test_bad_variant_exit(capsys, tmp_path):
    code, _, _ = run(capsys, "prove", CORPUS / "auto_countdown.dlp", "--auto", "--variant", "x", "--out", tmp_path)
    assert code == 3


# --- check --------------------------------------------------------------------------

@pytest.mark.parametrize("stem", ["partial_sum", "diverge_diamond"])
def test_shipped_certificates(capsys, stem):
    code, out, _ = run(capsys, "check", CORPUS / f"{stem}.cert.json")
    assert code == (0 if stem == "partial_sum" else 1)


def test_check_mutations(capsys, tmp_path):
    cert = json.loads((CORPUS / "partial_sum.cert.json").read_text())
    cert["nodes"] = [n for n in cert["nodes"] if n["id"] != "13"]
    path = tmp_path / "cut.json"
    path.write_text(json.dumps(cert))
    code, out, _ = run(capsys, "check", path)
    assert code == 1 and "BrokenStructure" in out
    cert = json.loads((CORPUS / "partial_sum.cert.json").read_text())
    cert["obligations"][0]["verdict"] = "Counterexample(N=0)"
    path.write_text(json.dumps(cert))
    code, out, _ = run(capsys, "check", path)
    assert code == 1 and "VerdictMismatch" in out


def test_check_schema_violation(capsys, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text(json.dumps({"version": 1}))
    assert run(capsys, "check", path)[0] == 3
    path.write_text("not json")
    assert run(capsys, "check", path)[0] == 3
    assert run(capsys, "check", tmp_path / "missing.json")[0] == 3


# --- exec -------------------------------------------------------------------------

def test_exec_sum(capsys):
    code, out, _ = run(capsys, "exec", CORPUS / "wp_sum_exec.dlp")
    assert code == 0 and "final: n=0, s=15" in out


def test_exec_world_override(capsys):
    code, out, _ = run(capsys, "exec", CORPUS / "wp_sum_exec.dlp", "--world", "n=10,s=0")
    assert code == 0 and "final: n=0, s=55" in out


def test_exec_sl_table(capsys):
    code, out, _ = run(capsys, "exec", CORPUS / "sl_heap_cells.dlp")
    rows = [line.split("\t") for line in out.splitlines() if "\t" in line]
    assert code == 0 and len(rows) == 6
    assert [r[3] for r in rows] == ["empty", "37: 1", "37: 1, 38: 1", "37: 1, 38: 37", "37: 1, 38: 37", "37: 1"]
    assert "check x |-> 1 ** y |-> 1: False" in out
    assert "check x |-> 1 && y |-> 1: True" in out


def test_exec_pl_path(capsys):
    code, out, _ = run(capsys, "exec", CORPUS / "pl_future.dlp")
    assert code == 0
    assert "path: x=-1 ; x=0 ; x=1" in out
    assert "check x > 0 || true Suf x > 0: True" in out


def test_exec_budget(capsys, tmp_path):
    doc = tmp_path / "loop.dlp"
    doc.write_text("instantiation: wp\nprogram L := while true do x := x + 1 end\nworld x = 0\nexec L\n")
    assert run(capsys, "exec", doc, "--budget", 100)[0] == 2


# --- oracle -----------------------------------------------------------------------

def test_oracle_verdicts(capsys):
    code, out, _ = run(capsys, "oracle", "{x -> t} : t >= 0 |- {x -> t + 1} : x > 0")
    assert code == 0 and out.strip() == "Valid(bounded, B=25)"
    code, out, _ = run(capsys, "oracle", "|- {x -> t} : x > 0")
    assert code == 1 and out.strip() == "Counterexample(t=0)"
    assert run(capsys, "oracle", "|- {x -> t} : [x := 1] x > 0")[0] == 3
    assert run(capsys, "oracle", "|- {x -> t} : x > 0", "--oracle", "nonsense")[0] == 3


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "dlp.cli", "oracle", "|- {x -> 1} : x = 1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Valid" in proc.stdout
