import json
import subprocess
import sys

import pytest

from tll.cli import main

from conftest import CORPUS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_good_files(capsys):
    code, out, _ = run(capsys, "check", CORPUS / "identity.tll", CORPUS / "llist.tll")
    assert code == 0
    assert out.count(": ok") == 2


def test_check_reports_the_code(capsys):
    code, _, err = run(capsys, "check", CORPUS / "bad_dup.tll")
    assert code == 1
    assert "linear-duplicated" in err and "bad_dup.tll:" in err


def test_check_json(capsys):
    code, out, _ = run(capsys, "--json", "check", CORPUS / "bad_pack.tll", CORPUS / "identity.tll")
    assert code == 1
    recs = [json.loads(line) for line in out.splitlines()]
    assert recs[0]["code"] == "constraint-violation"
    assert recs[0]["span"]["line"] == 3
    assert recs[1]["status"] == "ok"


def test_missing_file(capsys):
    code, _, err = run(capsys, "check", CORPUS / "nope.tll")
    assert code == 1 and "file-not-found" in err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["run", str(CORPUS / "llist.tll"), "--semantics", "magic"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["run", str(CORPUS / "llist.tll"), "--fuel", "-3"])
    assert e.value.code == 2


def test_erase(capsys):
    code, out, _ = run(capsys, "erase", CORPUS / "erasure.tll", "--def", "example")
    assert code == 0
    assert out.strip() == "(lam0{L}(A:<>). lam1{L}(x:<>). x) <>"
    code, _, err = run(capsys, "erase", CORPUS / "llist.tll", "--def", "llen")
    assert code == 1 and "not-a-program" in err


def test_normalize(capsys):
    code, out, _ = run(capsys, "normalize", CORPUS / "identity.tll", "--def", "main")
    assert code == 0 and out.strip() == "2"


def test_run_both_semantics(capsys):
    _, prog, _ = run(capsys, "run", CORPUS / "llist.tll")
    code, heap, _ = run(capsys, "run", CORPUS / "llist.tll", "--semantics", "heap")
    assert code == 0
    assert prog.strip() == heap.splitlines()[0] == "6"
    assert "0 leaked" in heap


def test_run_heap_json_and_census(capsys):
    code, out, _ = run(capsys, "--json", "run", CORPUS / "closure.tll", "--semantics", "heap", "--leak-report")
    rec = json.loads(out)
    assert code == 0
    assert rec["leaked"] == [] and rec["live_linear"] == [rec["location"]]
    assert rec["steps"] == rec["program_steps"] + rec["allocations"]
    assert [c["sort"] for c in rec["census"] if c["reachable"]] == ["L"]


def test_heap_trace(capsys):
    _, out, _ = run(capsys, "run", CORPUS / "closure.tll", "--semantics", "heap", "--trace")
    rows = [line.split("\t") for line in out.splitlines()[:4]]
    assert [r[1] for r in rows] == ["delta", "alloc", "alloc", "beta1"]
    assert rows[-1][3] == "live_L=1"


def test_program_trace(capsys):
    _, out, _ = run(capsys, "run", CORPUS / "identity.tll", "--trace")
    lines = out.splitlines()
    assert lines[0].startswith("0\tstart\tmain")
    assert lines[-1] == "2"


def test_fuel_from_environment(capsys, monkeypatch):
    # the default bounds checking as well as evaluation
    monkeypatch.setenv("TLL_FUEL", "5")
    code, _, err = run(capsys, "run", CORPUS / "llist.tll")
    assert code == 1 and "fuel-exhausted" in err
    monkeypatch.setenv("TLL_FUEL", "2000")
    code, out, _ = run(capsys, "run", CORPUS / "llist.tll")
    assert code == 0 and out.strip() == "6"
    # --fuel bounds only the run
    code, _, err = run(capsys, "run", CORPUS / "llist.tll", "--fuel", "50")
    assert code == 1 and "fuel-exhausted" in err


def test_meta(capsys):
    code, out, _ = run(capsys, "meta", "--property", "confluence", "--seeds", "10", "--depth", "4")
    assert code == 0 and out.startswith("confluence: pass")
    code, out, _ = run(capsys, "--json", "meta", "--property", "erasure-lockstep", "--seeds", "50", "--mutant")
    rec = json.loads(out)
    assert code == 1 and rec["passed"] is False and rec["counterexample"]["term"]


def test_signature_export(capsys):
    code, out, _ = run(capsys, "signature", CORPUS / "poly.tll")
    names = [json.loads(line)["name"] for line in out.splitlines()]
    assert code == 0 and "list<L,U>" in names and "nat" not in names


def test_console_script():
    p = subprocess.run(
        [sys.executable, "-m", "tll.cli", "check", str(CORPUS / "bad_discard.tll")],
        capture_output=True,
        text=True,
    )
    assert p.returncode == 1 and "linear-unused" in p.stderr
