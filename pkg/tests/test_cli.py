import io
import json

import pytest

from wordste import benchmarks
from wordste.cli import main

solver = pytest.mark.needs_solver
B = benchmarks.HERE


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue()


@solver
def test_verify_pass():
    code, text = run("verify", B / "twogate.wdl", B / "twogate.spec")
    assert code == 0 and "PASS" in text


@solver
def test_verify_fail_with_replay():
    code, text = run("verify", B / "mult_mut3.wdl", B / "mult_p2.spec", "--param", "W=4")
    assert code == 1
    assert "FAIL" in text and "replay on the concrete simulator: confirmed" in text


@solver
def test_verify_antfail_and_assume():
    assert run("verify", B / "twogate.wdl", B / "twogate_antfail.spec")[0] == 2
    code, text = run("verify", B / "twogate.wdl", B / "twogate_antfail.spec", "--antfail", "assume")
    assert code == 0 and "vacuous" in text


def test_solver_error_is_three():
    code, text = run("verify", B / "twogate.wdl", B / "twogate.spec", "--solver", "/nonexistent/solver {file}")
    assert code == 3 and "UNKNOWN" in text


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", B / "twogate.wdl"],
        ["verify", B / "twogate.wdl", B / "nope.spec"],
        ["verify", B / "twogate.wdl", B / "twogate.spec", "--mode", "cegar"],
        ["verify", B / "sad.wdl", B / "sad_p1.spec", "--param", "W"],
        ["verify", B / "sad.wdl", B / "sad_p1.spec", "--param", "Q=3"],
        ["verify", B / "twogate.wdl", B / "twogate.spec", "--frames", "0"],
        ["verify", B / "twogate.spec", B / "twogate.spec"],
        ["simulate", B / "twogate.wdl"],
        ["frobnicate"],
    ],
)
def test_usage_errors_are_four(argv):
    assert run(*argv)[0] == 4


@solver
def test_json_report_stable(tmp_path):
    a = json.loads(run("verify", B / "sad.wdl", B / "sad_p1.spec", "--json")[1])
    b = json.loads(run("verify", B / "sad.wdl", B / "sad_p1.spec", "--json")[1])
    assert a["schema"] == "wordste-verify/1"
    assert sorted(a) == sorted([
        "schema", "verdict", "exit_code", "design", "mode", "antfail_policy", "shift_mode", "frames",
        "largest_atom", "checks", "antfail_conditions", "fresh_inputs", "model", "failed", "conflicts",
        "replay", "div_by_zero", "warnings", "diagnostics", "timings",
    ])
    assert sorted(a["timings"]) == ["atomize", "emit", "parse", "simulate", "solve"]
    a.pop("timings"), b.pop("timings")
    assert a == b
    assert a["verdict"] == "pass" and a["exit_code"] == 0


def test_dump_smt(tmp_path):
    path = tmp_path / "q.smt2"
    run("verify", B / "twogate.wdl", B / "twogate.spec", "--dump-smt", path, "--solver", "echo unsat")
    assert path.read_text() == benchmarks.read("twogate.golden.smt2")
    run("verify", B / "twogate.wdl", B / "twogate_antfail.spec", "--dump-smt", path, "--solver", "echo unsat")
    assert (tmp_path / "q.antfail.smt2").exists()


def test_atomize_table():
    code, text = run("atomize", B / "twogate.wdl", B / "twogate.spec")
    assert code == 0
    assert "y\t4\t3:2 1:0" in text and "largest atom: 4" in text
    code, text = run("atomize", B / "sad.wdl", "--param", "W=32", "--json")
    assert code == 0 and json.loads(text)["largest"] >= 32


def test_simulate_concrete_trace(tmp_path):
    design = tmp_path / "chain.wdl"
    design.write_text("input a:4; reg r:4 = 0; wire y:4; r <= a; y = r;")
    stim = tmp_path / "s.txt"
    stim.write_text("# a delayed by one frame\na=3\na=0x9\na=0b0100\n")
    code, text = run("simulate", design, stim)
    assert code == 0
    rows = [ln.split("\t") for ln in text.splitlines()]
    assert rows[0] == ["frame", "a", "r", "y"]
    assert [r[3] for r in rows[1:]] == ["0", "3", "9"]


def test_simulate_x_cells(tmp_path):
    design = tmp_path / "g.wdl"
    design.write_text("input a:2, b:2; wire s:2, z:2; s = a + b; z = a & b;")
    stim = tmp_path / "s.txt"
    stim.write_text("a=0b0x b=0\na=X b=0\n")
    code, text = run("simulate", design, stim)
    assert code == 0
    rows = [ln.split("\t") for ln in text.splitlines()]
    assert rows[1] == ["0", "0X", "0", "0X", "0"]
    assert rows[2] == ["1", "XX", "0", "XX", "0"]


@pytest.mark.parametrize("text", ["a=3 b=1\n", "a=3\n", "a=17\n", "a=0b12\n", "a 3\n"])
def test_simulate_malformed_stimulus(tmp_path, text):
    design = tmp_path / "g.wdl"
    design.write_text("input a:4, c:1; wire y:4; y = a;")
    stim = tmp_path / "s.txt"
    stim.write_text(text)
    assert run("simulate", design, stim)[0] == 4
