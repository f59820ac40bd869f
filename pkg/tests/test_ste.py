import itertools

import pytest

from wordste import benchmarks
from wordste.atomize import atomize_design
from wordste.expr import eval_expr
from wordste.ir.elaborate import elaborate_text
from wordste.oracle import TOP, X, LatticeValue, interpret, join
from wordste.ste import SpecError, check, elaborate_spec, replay, run_bmc, run_ste

solver = pytest.mark.needs_solver
NO_SOLVER = "/nonexistent/solver {file}"

TWOGATE = benchmarks.read("twogate")


def _ste(design_src, spec_src, params=None, **kw):
    d = elaborate_text(design_src, params)
    sp = elaborate_spec(spec_src, d)
    ob, trace = run_ste(d, sp, **kw)
    return d, sp, ob, trace


def test_direct_drive_is_valid():
    _, _, ob, _ = _ste(TWOGATE, "var k:4; ant (1) a = k @ 0; cons (1) a = k @ 0;")
    assert ob.ok.is_true()


def test_constant_ok_needs_no_solver():
    _, _, ob, _ = _ste(TWOGATE, "ant (1) a = 3 @ 0; ant (1) b = 1 @ 0; ant (1) c = 0 @ 0; cons (1) y = 1 @ 0;")
    assert ob.ok.is_true()
    res = check(ob, solver_cmd=NO_SOLVER)
    assert res.verdict == "pass" and res.answers == []


def test_trivially_unsat_constraint_is_vacuous():
    _, _, ob, _ = _ste(TWOGATE, "var x:4; constr x != x; cons (1) y = x @ 0;")
    res = check(ob, solver_cmd=NO_SOLVER)
    assert res.verdict == "pass"
    assert any(w.startswith("vacuous") for w in res.warnings)


@solver
def test_unsat_constraint_is_vacuous():
    _, _, ob, _ = _ste(TWOGATE, "var x:4; constr x < 2 && x > 5; ant (1) a = x @ 0; cons (1) a = x @ 0;")
    res = check(ob)
    assert res.verdict == "pass"
    assert any(w.startswith("vacuous") for w in res.warnings)


@solver
def test_all_x_satisfies_nothing():
    d, _, ob, _ = _ste(TWOGATE, "cons (1) y = 0 @ 0;")
    res = check(ob)
    assert res.verdict == "fail"
    assert [k.word for k in res.failed] == ["y"]
    assert replay(d, ob, res).confirmed


@solver
def test_twogate_passes():
    _, _, ob, _ = _ste(TWOGATE, benchmarks.read("twogate.spec"))
    assert check(ob).verdict == "pass"


@solver
def test_antecedent_failure_names_the_tuple():
    _, _, ob, _ = _ste(TWOGATE, benchmarks.read("twogate_antfail.spec"))
    res = check(ob, mode="report")
    assert res.verdict == "antfail" and res.exit_code == 2
    assert [(a.word, a.frame, a.tuples) for a in res.conflicts] == [("s", 0, (2,))]
    assumed = check(ob, mode="assume")
    assert assumed.verdict == "pass"
    assert any(w.startswith("vacuous") for w in assumed.warnings)


@solver
def test_division_witness_in_model():
    src = "input a:4, b:4; wire q:4; q = a / b;"
    d, _, ob, _ = _ste(src, (
        "var x:4, y:4, g:1; constr y != 0; ant (g) a = x @ 0; ant (1) b = y @ 0; cons (1) q = x / y @ 0;"
    ))
    res = check(ob)
    assert res.verdict == "fail"
    assert ob.witnesses
    for w in ob.witnesses:
        b = eval_expr(w.divisor, res.model)
        i = res.model[w.var.name]
        assert (1 << i) <= b < (1 << (i + 1))
    assert replay(d, ob, res).confirmed


def test_spec_errors():
    d = elaborate_text(TWOGATE)
    with pytest.raises(SpecError):
        elaborate_spec("cons (1) q = 0 @ 0;", d)
    with pytest.raises(SpecError):
        run_ste(d, elaborate_spec("cons (1) y = 0 @ [0, 4);", d), frames=2)


def test_bmc_fresh_variable_per_frame():
    d = elaborate_text("input a:8; reg r:8; r <= a;")
    sp = elaborate_spec("cons (1) r = 0 @ 11;", d)
    ob = run_bmc(d, sp, frames=12)
    names = [v.name for v in ob.fresh_inputs]
    assert len(names) == 12 and all(n.startswith("a@") for n in names)
    assert all(v.width == 8 for v in ob.fresh_inputs)


def test_bmc_conditional_drive_keeps_fresh_input():
    d = elaborate_text(TWOGATE)
    sp = elaborate_spec(benchmarks.read("twogate.spec"), d)
    ob = run_bmc(d, sp)
    assert [v.name for v in ob.fresh_inputs] == ["c@0"]


# -- defining sequence versus an independent join -----------------------------------------

TOY = "input a:2, b:2; wire y:2; y = a & b;"
TOY_SPEC = """
var g:1, h:1, u:2, v:2;
ant (g) a = u @ [0, 2);
ant (h) a = v @ 1;
ant (1) b = u @ 0;
ant (h) b[1:1] = v[0:0] @ [1, 3);
cons (1) y = 0 @ 2;
"""


def _expected(spec, env, frames, amap):
    """[ψ]^φ per frame and input atom: join of every satisfied drive, from X."""
    out = []
    for t in range(frames):
        frame = {}
        for word in ("a", "b"):
            for hi, lo in amap[word].atoms:
                acc = X
                for tup in spec.antecedents:
                    if tup.word != word or t not in tup.frames() or not eval_expr(tup.guard, env):
                        continue
                    if not (tup.lo <= lo and hi <= tup.hi):
                        continue
                    v = eval_expr(tup.vexpr, env) >> (lo - tup.lo) & ((1 << (hi - lo + 1)) - 1)
                    acc = join(acc, LatticeValue.defined(v))
                frame[(word, hi, lo)] = acc
        out.append(frame)
    return out


def test_defining_sequence_matches_join():
    d = elaborate_text(TOY)
    sp = elaborate_spec(TOY_SPEC, d)
    ob, _ = run_ste(d, sp)
    amap = atomize_design(d, sp)
    for g, h, u, v in itertools.product(range(2), range(2), range(4), range(4)):
        env = {"g": g, "h": h, "u": u, "v": v}
        want = _expected(sp, env, ob.frames, amap)
        for t, frame in enumerate(ob.input_values):
            tops = {(a.word, a.hi, a.lo) for a in ob.ant_fail if a.frame == t and eval_expr(a.cond, env)}
            for key, atom in frame.items():
                got = interpret(eval_expr(atom.val, env), eval_expr(atom.inv, env), key in tops)
                assert got == want[t][key], (env, t, key)
        assert any(want[t][k] == TOP for t in range(ob.frames) for k in want[t]) == bool(
            any(eval_expr(a.cond, env) for a in ob.ant_fail)
        )


# -- benchmarks ---------------------------------------------------------------------------


def _bench(name, prop, params):
    d = elaborate_text(benchmarks.read(name), params)
    sp = elaborate_spec(benchmarks.read(prop), d)
    return d, sp


@solver
@pytest.mark.parametrize("suite, params", [("sad", {"W": 8}), ("mult", {"W": 4})])
def test_ste_pass_implies_bmc_pass(suite, params):
    passed = 0
    for prop in benchmarks.SUITES[suite][0]:
        d, sp = _bench(suite, prop, params)
        if not sp.all_guards_true():
            continue
        ste = check(run_ste(d, sp)[0])
        if ste.verdict == "pass":
            passed += 1
            assert check(run_bmc(d, sp)).verdict == "pass", prop
    assert passed


@solver
def test_counterexamples_replay():
    d, sp = _bench("mult_mut3", "mult_p2", {"W": 4})
    ob, _ = run_ste(d, sp)
    res = check(ob)
    assert res.verdict == "fail"
    assert res.failed
    rep = replay(d, ob, res)
    assert rep.confirmed, rep.lines
    bmc = run_bmc(d, sp)
    res = check(bmc)
    assert res.verdict == "fail" and replay(d, bmc, res).confirmed
