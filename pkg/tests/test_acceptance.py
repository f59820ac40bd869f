"""Acceptance criteria 1-10, one test each, with a pass/fail line per criterion."""

import itertools
import random
import statistics
import time

import pytest

from wordste import benchmarks, solver
from wordste.atomize import atomize_accesses, atomize_design, design_accesses
from wordste.expr import ExprContext, eval_expr
from wordste.ir.elaborate import elaborate_text
from wordste.oracle import (
    TEMPLATE_OPS,
    check_array_soundness,
    check_lub_pairs,
    check_template_soundness,
    enumerate_stats,
    interpret,
    join,
    lattice_stats,
)
from wordste.solver import normalize_widths
from wordste.ste import check, elaborate_spec, replay, run_bmc, run_ste
from wordste.symsim import Simulator, SymAtom
from support import PY_CMP, PY_OPS, mask, random_design, record

solver_needed = pytest.mark.needs_solver


def report(n, ok, detail):
    record(n, ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# -- 1. template soundness ------------------------------------------------------------------


def _soundness_jobs():
    for m in range(1, 5):
        for op in TEMPLATE_OPS:
            if op in ("udiv", "urem") and m > 3:
                continue
            if op in ("not",):
                yield op, (m,), ()
            elif op == "ite":
                yield op, (1, m, m), ()
            elif op in ("shlc", "lshrc"):
                for k in range(m + 1):
                    yield op, (m,), (k,)
            elif op == "extract":
                for q in range(m):
                    for p in range(q + 1):
                        yield op, (m,), (q, p)
            elif op == "concat":
                for m2 in range(1, 5 - m):
                    yield op, (m, m2), ()
            else:
                yield op, (m, m), ()


def test_criterion_1_template_soundness():
    t0 = time.perf_counter()
    bad, checks, runs = [], 0, 0
    for op, widths, params in _soundness_jobs():
        rep = check_template_soundness(op, widths, params=params)
        runs += 1
        checks += rep.checks
        if not rep.ok:
            bad.append(rep.summary())
    for e in (1, 2):
        for updates in (0, 1, 2):
            for init in (True, False):
                rep = check_array_soundness(e, updates, init)
                runs += 1
                checks += rep.checks
                if not rep.ok:
                    bad.append(rep.summary())
    dt = time.perf_counter() - t0
    report(1, not bad and dt <= 600,
           f"{runs} template runs, {checks} checks, {len(bad)} unsound, {dt:.1f}s" + (f": {bad[:3]}" if bad else ""))


# -- 2. value rule ----------------------------------------------------------------------------

LEMMA_OPS = [f"a {s} b" for s in PY_OPS] + [f"a {s} b" for s in PY_CMP] + ["~a", "s ? a : b", "{a, b}", "a << 1",
                                                                            "a >> 1"]


def _py(expr, a, b, s, m):
    if expr == "~a":
        return mask(m) ^ a
    if expr == "s ? a : b":
        return a if s else b
    if expr == "{a, b}":
        return (a << m) | b
    if expr == "a << 1":
        return PY_OPS["<<"](a, 1, m)
    if expr == "a >> 1":
        return PY_OPS[">>"](a, 1, m)
    sym = expr.split()[1]
    return PY_CMP[sym](a, b) if sym in PY_CMP else PY_OPS[sym](a, b, m)


def _out_width(expr, m):
    if expr.split()[1:2] and expr.split()[1] in PY_CMP:
        return 1
    return 2 * m if expr == "{a, b}" else m


def test_criterion_2_value_rule():
    mismatches, rows = 0, 0
    for expr in LEMMA_OPS:
        for m in range(1, 5):
            ow = _out_width(expr, m)
            for q in range(ow):
                for p in range(q + 1):
                    for cut_operands in (False, True):
                        d = elaborate_text(f"input a:{m}, b:{m}, s:1; wire r:{ow}; r = {expr};")
                        extra = [("r", q, p)]
                        if cut_operands and q < m:
                            extra += [("a", q, p), ("b", q, p)]
                        amap = atomize_design(d, extra=extra)
                        sim = Simulator(d, amap, ExprContext())
                        c = sim.ctx
                        st = sim.initial_state()
                        for name in ("a", "b", "s"):
                            whole = c.var(name.upper(), d.words[name].width)
                            for hi, lo in amap[name].atoms:
                                st.atoms[(name, hi, lo)] = SymAtom(c.extract(hi, lo, whole), c.false)
                        atom = sim.settle(st).word(c, amap, "r", q, p)
                        for a, b, s in itertools.product(range(1 << m), range(1 << m), range(2)):
                            rows += 1
                            want = (_py(expr, a, b, s, m) >> p) & mask(q - p + 1)
                            got = eval_expr(atom.val, {"A": a, "B": b, "S": s})
                            mismatches += int(got) != want
    report(2, mismatches == 0, f"{len(LEMMA_OPS)} operators, {rows} valuations, {mismatches} value mismatches")


# -- 3. lub -----------------------------------------------------------------------------------


def test_criterion_3_lub():
    n, bad = check_lub_pairs(2)
    # the lattice pairs those encodings reach, recomputed here
    enc = [(v, False, False) for v in range(4)] + [(v, True, False) for v in range(4)] + [(0, False, True)]
    pairs = {(interpret(*x), interpret(*y)) for x, y in itertools.product(enc, repeat=2)}
    covered = len(pairs)
    # join against a hand table: X is the unit, top absorbs, distinct values clash
    for x, y in pairs:
        j = join(x, y)
        if "top" in (x.kind, y.kind):
            assert j.kind == "top"
        elif x.kind == "x":
            assert j == y
        elif y.kind == "x":
            assert j == x
        else:
            assert j == (x if x == y else j) and (x == y or j.kind == "top")
    report(3, not bad and covered == 36,
           f"{n} encoding pairs, {covered} lattice pairs (6 elements incl. X and top), {len(bad)} mismatches")


# -- 4. lattice counts ------------------------------------------------------------------------


def _compositions(total):
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def test_criterion_4_lattice_counts():
    tuples = [w for s in range(1, 7) for w in _compositions(s)]
    bad = [w for w in tuples if lattice_stats(w) != enumerate_stats(w)]
    h, size, levels = lattice_stats([3])
    ok = not bad and size == 10 and h == 2 and levels == [1, 8, 1]
    report(4, ok, f"{len(tuples)} width tuples (sum <= 6), {len(bad)} disagreements; 3-bit atom: {size} elements")


# -- 5. atomization ---------------------------------------------------------------------------


def _atoms(amap):
    return {w: tuple(at.atoms) for w, at in amap.items()}


def test_criterion_5_atomization():
    d = elaborate_text("input a:16, b:8; wire c:8; c[4:1] = a[10:7] + b[5:2]; c[7:5] = 0; c[0] = 0;")
    frag = _atoms(atomize_design(d))
    frag_ok = (frag["a"], frag["b"], frag["c"]) == (
        ((15, 11), (10, 7), (6, 0)), ((7, 6), (5, 2), (1, 0)), ((7, 5), (4, 1), (0, 0)))
    rng = random.Random(2024)
    misaligned = order_dependent = 0
    for _ in range(200):
        header, stmts = random_design(rng, disjoint=True)
        base_d = elaborate_text(header + "\n" + "\n".join(stmts))
        base = atomize_design(base_d)
        acc = design_accesses(base_d)
        misaligned += sum(not base[w].aligned(hi, lo) for w, hi, lo in acc)
        widths = {w.name: w.width for w in base_d.words.values()}
        for _ in range(10):
            perm = list(stmts)
            rng.shuffle(perm)
            if _atoms(atomize_design(elaborate_text(header + "\n" + "\n".join(perm)))) != _atoms(base):
                order_dependent += 1
            shuffled = list(acc)
            rng.shuffle(shuffled)
            if _atoms(atomize_accesses(widths, shuffled)) != _atoms(base):
                order_dependent += 1
    ok = frag_ok and misaligned == 0 and order_dependent == 0
    report(5, ok, f"fragment {'exact' if frag_ok else 'WRONG'}; 200 designs x 10 permutations of statements and of "
                  f"accesses: {misaligned} misaligned accesses, {order_dependent} order-dependent results")


# -- 6. end-to-end STE ------------------------------------------------------------------------


def _verify(design, prop, params, mode="ste"):
    t0 = time.perf_counter()
    d = elaborate_text(benchmarks.read(design), params)
    sp = elaborate_spec(benchmarks.read(prop), d)
    ob = run_ste(d, sp)[0] if mode == "ste" else run_bmc(d, sp)
    res = check(ob, mode="report" if mode == "ste" else "assume")
    rep = replay(d, ob, res) if res.verdict == "fail" else None
    return res, rep, time.perf_counter() - t0, sp


@solver_needed
def test_criterion_6_end_to_end():
    props, mutants, widths = benchmarks.SUITES["sad"]
    problems, runs, slowest = [], 0, 0.0
    for w in widths:
        for prop in props:
            res, _, dt, _ = _verify("sad", prop, {"W": w})
            runs += 1
            slowest = max(slowest, dt)
            if res.verdict != "pass" or dt >= 60:
                problems.append(f"sad W={w} {prop}: {res.verdict} {dt:.1f}s")
    fails = confirmed = 0
    for suite, w in (("sad", 8), ("mult", 4)):
        s_props, s_mutants, _ = benchmarks.SUITES[suite]
        for mut in s_mutants:
            caught = 0
            for prop in s_props:
                res, rep, dt, _ = _verify(mut, prop, {"W": w})
                runs += 1
                slowest = max(slowest, dt)
                if res.verdict == "fail":
                    caught += 1
                    fails += 1
                    confirmed += rep.confirmed
                    if not rep.confirmed:
                        problems.append(f"{mut} {prop}: replay not confirmed")
                elif res.verdict != "pass":
                    problems.append(f"{mut} {prop}: {res.verdict}")
            if not caught:
                problems.append(f"{mut}: no property fails")
    ok = not problems and fails > 0 and confirmed == fails
    report(6, ok, f"P1-P6 at widths {list(widths)}; {fails} mutant failures, {confirmed} replays confirmed; "
                  f"{runs} runs, slowest {slowest:.2f}s" + (f"; {problems}" if problems else ""))


# -- 7. width insensitivity -------------------------------------------------------------------


def _generate(prop, w):
    t0 = time.perf_counter()
    d = elaborate_text(benchmarks.read("sad"), {"W": w})
    sp = elaborate_spec(benchmarks.read(prop), d, ctx=ExprContext(simplify=False))
    text = run_ste(d, sp)[0].emit("negok").text
    return text, time.perf_counter() - t0


def test_criterion_7_width_insensitivity():
    props = benchmarks.SUITES["sad"][0]
    differ = [p for p in props if normalize_widths(_generate(p, 8)[0]) != normalize_widths(_generate(p, 64)[0])]
    p1_8 = _generate("sad_p1", 8)[0]
    asserts = p1_8.count("(assert ")
    t8 = statistics.median(_generate("sad_p1", 8)[1] for _ in range(7))
    t64 = statistics.median(_generate("sad_p1", 64)[1] for _ in range(7))
    ratio = t64 / t8
    ok = not differ and ratio <= 2.0 and asserts > 1
    report(7, ok, f"width-erased scripts identical at 8 and 64 for {len(props) - len(differ)}/{len(props)} "
                  f"properties (P1: {asserts} assertions); generation time ratio {ratio:.2f}")


# -- 8. STE vs BMC ----------------------------------------------------------------------------


def _expected_fresh(d, sp, frames):
    """Input atoms per frame that no constant-true antecedent pins down."""
    amap = atomize_design(d, sp)
    n = 0
    for t in range(frames):
        for w in d.inputs:
            for hi, lo in amap[w.name].atoms:
                pinned = any(tup.word == w.name and tup.lo <= lo and hi <= tup.hi and t in tup.frames()
                             and tup.guard.is_true() for tup in sp.antecedents)
                n += not pinned
    return n


@solver_needed
def test_criterion_8_ste_vs_bmc():
    compared, disagree = 0, []
    for suite, w in (("sad", 8), ("mult", 4)):
        props, mutants, _ = benchmarks.SUITES[suite]
        for design in (suite, *mutants):
            for prop in props:
                ste, _, _, sp = _verify(design, prop, {"W": w})
                if not sp.all_guards_true():
                    continue
                bmc = _verify(design, prop, {"W": w}, mode="bmc")[0]
                compared += 1
                if ste.verdict != bmc.verdict:
                    disagree.append(f"{design} {prop}: ste {ste.verdict}, bmc {bmc.verdict}")
    d = elaborate_text(benchmarks.read("mult"), {"W": 4})
    sp = elaborate_spec(benchmarks.read("mult_p3"), d)
    ob = run_bmc(d, sp)
    script = ob.emit("negok").text
    inputs = {w.name for w in d.inputs}
    declared = [ln.split()[1].strip("|") for ln in script.splitlines() if ln.startswith("(declare-fun")]
    fresh = [n for n in declared if "@" in n and n.split("@")[0].split("[")[0] in inputs
             and n.split("@")[1].isdigit()]
    want = _expected_fresh(d, sp, ob.frames)
    ok = compared > 0 and not disagree and len(fresh) == want
    report(8, ok, f"{compared} all-true-guard runs agree" + (f" except {disagree}" if disagree else "")
           + f"; mult P3 BMC over {ob.frames} frames declares {len(fresh)} fresh input variables (expected {want})")


# -- 9. variable shift finding ------------------------------------------------------------------


def test_criterion_9_shift_modes():
    faithful = sum(len(check_template_soundness(op, (3, 3), mode="paper-faithful").violations) for op in ("shl", "lshr"))
    strict = sum(len(check_template_soundness(op, (3, 3)).violations) for op in ("shl", "lshr"))
    report(9, faithful > 0 and strict == 0,
           f"width 3 variable shifts: paper-faithful {faithful} violations (capped per op), strict-sound {strict}")


# -- 10. solver round trip --------------------------------------------------------------------


@pytest.mark.session_last
def test_criterion_10_model_validation():
    v = solver.VALIDATION
    ok = v["failures"] == 0 and v["sat_answers"] > 0 and v["validated"] == v["sat_answers"]
    report(10, ok, f"{v['sat_answers']} sat answers this session, {v['validated']} validated, {v['failures']} failures")
