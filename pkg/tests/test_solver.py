import pytest

from wordste import benchmarks
from wordste.expr import ArrayValue, ExprContext, array_sort, eval_expr
from wordste.ir.elaborate import elaborate_text
from wordste.solver import emit_script, mangle, normalize_widths, parse_model, solve
from wordste.ste import elaborate_spec, run_ste

solver = pytest.mark.needs_solver


def _twogate_script():
    d = elaborate_text(benchmarks.read("twogate"))
    sp = elaborate_spec(benchmarks.read("twogate.spec"), d)
    return run_ste(d, sp)[0].emit("negok").text


def test_golden_twogate_script():
    assert _twogate_script() == benchmarks.read("twogate.golden.smt2")


def test_emission_is_deterministic():
    assert _twogate_script() == _twogate_script()


def test_every_variable_declared_once():
    c = ExprContext()
    x, y = c.var("x", 4), c.var("y", 4)
    s = emit_script([c.ult(x, y), c.eq(c.add(x, y), c.bv(3, 4))], declare=[x, c.var("z", 2)])
    decls = [ln for ln in s.text.splitlines() if ln.startswith("(declare-fun")]
    assert decls == ["(declare-fun x () (_ BitVec 4))", "(declare-fun y () (_ BitVec 4))",
                     "(declare-fun z () (_ BitVec 2))"]


def test_mangle_quotes_odd_names():
    assert mangle("x") == "x"
    assert mangle("a@3") == "a@3"
    assert mangle("y[3:2]@0").startswith("|")
    assert mangle("assert").startswith("|")


def test_normalize_widths():
    a = "(declare-fun x () (_ BitVec 8))\n(assert (= ((_ extract 7 4) x) (_ bv3 4)))"
    b = "(declare-fun x () (_ BitVec 64))\n(assert (= ((_ extract 63 32) x) (_ bv3 32)))"
    assert normalize_widths(a) == normalize_widths(b)


@solver
def test_assert_false_is_unsat():
    c = ExprContext()
    assert solve(emit_script([c.false])).status == "unsat"


@solver
def test_sat_model():
    c = ExprContext()
    x = c.var("x", 4)
    ans = solve(emit_script([c.eq(x, c.bv(0b0011, 4))]))
    assert ans.status == "sat" and ans.model == {"x": 3} and ans.validated


@solver
def test_array_model_round_trip():
    c = ExprContext()
    A = c.var("A", array_sort(2, 4))
    i = c.var("i", 2)
    f = [c.eq(c.select(A, i), c.bv(9, 4)), c.eq(c.select(A, c.bv(0, 2)), c.bv(1, 4)), c.ne(i, c.bv(0, 2))]
    ans = solve(emit_script(f))
    assert ans.status == "sat" and ans.validated
    assert all(eval_expr(x, ans.model) for x in f)


@solver
def test_timeout_is_unknown():
    c = ExprContext()
    x, y = c.var("x", 64), c.var("y", 64)
    one = c.bv(1, 64)
    # factor a large semiprime: far beyond a 10 ms budget
    hard = [c.eq(c.mul(c.zext(x, 128), c.zext(y, 128)), c.bv(18446744073709551557 * 18446744073709551533, 128)),
            c.ult(one, x), c.ult(one, y)]
    ans = solve(emit_script(hard), timeout=0.01)
    assert ans.status == "unknown" and ans.timeout


def test_missing_solver_is_unknown():
    c = ExprContext()
    ans = solve(emit_script([c.true]), cmd="/nonexistent/solver {file}")
    assert ans.status == "unknown" and "spawn" in ans.diagnostics


def test_garbage_output_is_unknown():
    c = ExprContext()
    ans = solve(emit_script([c.true]), cmd="echo garbage")
    assert ans.status == "unknown" and "garbage" in ans.raw


def test_solver_from_environment(monkeypatch):
    c = ExprContext()
    monkeypatch.setenv("WORDSTE_SOLVER", "echo unsat")
    assert solve(emit_script([c.true])).status == "unsat"


def test_parse_model_forms():
    text = """(
      (define-fun x () (_ BitVec 4) #b0011)
      (define-fun y () (_ BitVec 8) #x1f)
      (define-fun z () (_ BitVec 4) (_ bv7 4))
      (define-fun |p q| () Bool true)
      (define-fun A () (Array (_ BitVec 2) (_ BitVec 4)) (store ((as const (Array (_ BitVec 2) (_ BitVec 4))) #x0) #b01 #x9))
      (define-fun B () (Array (_ BitVec 2) (_ BitVec 4)) (_ as-array k!0))
      (define-fun k!0 ((x!0 (_ BitVec 2))) (_ BitVec 4) (ite (= x!0 #b10) #x5 #x2))
    )"""
    c = ExprContext()
    s = array_sort(2, 4)
    sorts = {"x": c.var("x", 4).sort, "y": c.var("y", 8).sort, "z": c.var("z", 4).sort, "p q": c.true.sort,
             "A": s, "B": s}
    model, problems = parse_model(text, sorts)
    assert problems == []
    assert (model["x"], model["y"], model["z"], model["p q"]) == (3, 31, 7, True)
    assert model["A"] == ArrayValue(0, {1: 9})
    assert model["B"] == ArrayValue(2, {2: 5})
