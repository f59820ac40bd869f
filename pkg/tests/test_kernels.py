import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wordste import kernels
from wordste.expr import ExprContext, array_sort, eval_expr
from wordste.kernels import _reference
from wordste.oracle import TernaryWord, eval_exact
from wordste.tape import OPCODES, compile_tape
from test_expr import RECIPES, build

native = pytest.mark.skipif("native" not in kernels.backends(), reason="compiled kernels not built")


@native
def test_opcode_tables_agree():
    from wordste.kernels import _native

    assert _native.OPCODE_TABLE == OPCODES


def test_backend_selected():
    assert kernels.BACKEND in kernels.backends()


@settings(max_examples=150, deadline=None)
@given(RECIPES, st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=20))
def test_eval_tape_matches_eval_expr(r, rows):
    c = ExprContext(simplify=False)
    e = build(c, r)
    tape = compile_tape([e], ["a", "b"])
    env = np.array(rows, dtype=np.uint64)
    want = [eval_expr(e, {"a": a, "b": b}) for a, b in rows]
    for name in kernels.backends():
        got = kernels.eval_tape(tape, env, name)[:, 0]
        assert [int(x) for x in got] == want, name


def test_eval_tape_arrays():
    c = ExprContext(simplify=False)
    A = c.var("A", array_sort(2, 4))
    i, v = c.var("i", 2), c.var("v", 4)
    e = c.select(c.store(A, i, v), c.bv(1, 2))
    tape = compile_tape([e], ["A", "i", "v"])
    from wordste.expr import ArrayValue

    envs = [{"A": ArrayValue(0, {1: 5, 2: 9}), "i": i_, "v": 3} for i_ in range(4)]
    m = tape.env_matrix(envs)
    want = [eval_expr(e, env) for env in envs]
    for name in kernels.backends():
        assert [int(x) for x in kernels.eval_tape(tape, m, name)[:, 0]] == want


@native
@pytest.mark.parametrize("op, widths", [("add", (3, 3)), ("mul", (3, 2)), ("udiv", (3, 3)), ("ite", (1, 2, 2)),
                                        ("bvand", (4, 4)), ("shl", (3, 3)), ("ult", (3, 3))])
def test_closure_backends_agree(op, widths):
    out_w = 1 if op == "ult" else widths[-1]
    grid = kernels.concrete_grid(widths)
    while len(grid) < 3:
        grid.append(np.zeros_like(grid[0]))
    res = _reference.apply_vec(op, out_w, grid[0], grid[1], grid[2], 0)
    allowed = (np.arange(len(res)) % 3 != 0).astype(np.uint8)
    for al in (None, allowed):
        a = kernels.ternary_closure(res, widths, out_w, al, "native")
        b = kernels.ternary_closure(res, widths, out_w, al, "reference")
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("op", ["add", "sub", "mul", "udiv", "urem", "bvand", "bvxor", "shl", "lshr"])
def test_exact_table_matches_enumeration(op):
    widths = (2, 2)
    nz = op in ("udiv", "urem")
    vals, xms = kernels.exact_table(op, widths, 2, nonzero_divisor=nz)
    words = [TernaryWord(2, v, x) for x in range(4) for v in range(4) if not v & x]
    for a, b in itertools.product(words, repeat=2):
        k = int(kernels.table_index(widths, [(a.value, a.xmask), (b.value, b.xmask)]))
        want = eval_exact(op, [a, b], nonzero_divisor=nz)
        assert (int(vals[k]), int(xms[k])) == (want.value, want.xmask), (op, str(a), str(b))


def test_closure_too_large():
    with pytest.raises(ValueError):
        kernels.ternary_closure(np.zeros(1 << 13, dtype=np.uint64), (7, 6), 7)
