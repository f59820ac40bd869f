import pytest
from hypothesis import given, settings, strategies as st

from wordste.expr import (
    ArrayValue,
    ExprContext,
    SideConstraints,
    SortError,
    apply_op,
    array_sort,
    eval_expr,
    free_vars,
    postorder,
)
from support import PY_OPS, mask

W = 4


def test_constant_folding():
    c = ExprContext()
    assert c.mk("add", c.bv(3, 4), c.bv(5, 4)) is c.bv(8, 4)


def test_ite_identical_branches():
    c = ExprContext()
    e = c.var("e", 4)
    assert c.mk("ite", c.var("b", c.true.sort), e, e) is e


def test_extract_of_constant():
    c = ExprContext()
    assert c.mk("extract", c.bv(0b0110, 4), params=(2, 1)) is c.bv(0b11, 2)


def test_free_vars():
    c = ExprContext()
    assert free_vars(c.bv(0, 8)) == []
    v = c.var("v", 8)
    assert free_vars(v) == [v]
    g, v1, v2 = c.var("g", c.true.sort), c.var("v1", 8), c.var("v2", 8)
    assert set(x.name for x in free_vars(c.ite(g, v1, v2))) == {"g", "v1", "v2"}


def test_eval_examples():
    c = ExprContext(simplify=False)
    assert eval_expr(c.add(c.bv(9, 4), c.bv(9, 4)), {}) == 2
    assert eval_expr(c.ult(c.bv(3, 4), c.bv(5, 4)), {}) is True
    assert eval_expr(c.udiv(c.bv(5, 4), c.bv(0, 4)), {}) == 15
    assert eval_expr(c.urem(c.bv(5, 4), c.bv(0, 4)), {}) == 5


def test_width_errors():
    c = ExprContext()
    with pytest.raises(SortError):
        c.add(c.var("a", 8), c.var("b", 4))
    with pytest.raises(SortError):
        c.extract(8, 0, c.var("a", 8))
    with pytest.raises(SortError):
        c.bv(1, 0)


def test_arrays_read_over_write():
    c = ExprContext()
    A = c.var("A", array_sort(2, 4))
    i, j = c.var("i", 2), c.var("j", 2)
    e = c.select(c.store(A, i, c.bv(7, 4)), j)
    env = {"A": ArrayValue(3, {1: 9}), "i": 1, "j": 1}
    assert eval_expr(e, env) == 7
    env["j"] = 2
    assert eval_expr(e, env) == 3
    # same index simplifies away entirely
    assert c.select(c.store(A, i, c.bv(7, 4)), i) is c.bv(7, 4)


def test_side_constraints_fresh_names():
    s = SideConstraints("w")
    assert s.fresh_name("i") != s.fresh_name("i")
    c = ExprContext()
    s.add(c.true)
    assert s.constraints == []


def test_postorder_children_first():
    c = ExprContext()
    a, b = c.var("a", 4), c.var("b", 4)
    e = c.add(c.mul(a, b), a)
    order = postorder([e])
    pos = {n.id: k for k, n in enumerate(order)}
    for n in order:
        for x in n.args:
            assert pos[x.id] < pos[n.id]
    assert len(order) == len({n.id for n in order})


# -- random terms: recipes evaluated both by the engine and by plain Python ------

LEAF = st.one_of(
    st.sampled_from([("a",), ("b",)]),
    st.integers(0, mask(W)).map(lambda v: ("k", v)),
)
BINOPS = ["+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"]
ENGINE = {"+": "add", "-": "sub", "*": "mul", "/": "udiv", "%": "urem", "&": "bvand", "|": "bvor",
          "^": "bvxor", "<<": "shl", ">>": "lshr"}


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from(BINOPS), children, children),
        st.tuples(st.just("~"), children),
        st.tuples(st.just("?"), st.sampled_from(["==", "<", "<="]), children, children, children, children),
        st.tuples(st.just("x"), children, st.integers(0, W - 1), st.integers(0, W - 1)),
    )


RECIPES = st.recursive(LEAF, _extend, max_leaves=10)


def build(c: ExprContext, r):
    tag = r[0]
    if tag in ("a", "b"):
        return c.var(tag, W)
    if tag == "k":
        return c.bv(r[1], W)
    if tag == "~":
        return c.bvnot(build(c, r[1]))
    if tag == "?":
        cmp = {"==": c.eq, "<": c.ult, "<=": c.ule}[r[1]]
        return c.ite(cmp(build(c, r[2]), build(c, r[3])), build(c, r[4]), build(c, r[5]))
    if tag == "x":
        hi, lo = max(r[2], r[3]), min(r[2], r[3])
        # slice then zero-extend back to W so every recipe is W bits wide
        e = c.extract(hi, lo, build(c, r[1]))
        return c.zext(e, W) if e.width < W else e
    return c.mk(ENGINE[tag], build(c, r[1]), build(c, r[2]))


def py(r, env):
    tag = r[0]
    if tag in ("a", "b"):
        return env[tag]
    if tag == "k":
        return r[1]
    if tag == "~":
        return ~py(r[1], env) & mask(W)
    if tag == "?":
        x, y = py(r[2], env), py(r[3], env)
        ok = {"==": x == y, "<": x < y, "<=": x <= y}[r[1]]
        return py(r[4], env) if ok else py(r[5], env)
    if tag == "x":
        hi, lo = max(r[2], r[3]), min(r[2], r[3])
        return (py(r[1], env) >> lo) & mask(hi - lo + 1)
    return PY_OPS[tag](py(r[1], env), py(r[2], env), W)


@settings(max_examples=300, deadline=None)
@given(RECIPES, st.integers(0, mask(W)), st.integers(0, mask(W)))
def test_simplification_preserves_semantics(r, a, b):
    env = {"a": a, "b": b}
    want = py(r, env)
    assert eval_expr(build(ExprContext(simplify=True), r), env) == want
    assert eval_expr(build(ExprContext(simplify=False), r), env) == want


@settings(max_examples=200, deadline=None)
@given(RECIPES, st.integers(0, mask(W)), st.integers(0, mask(W)))
def test_eval_is_homomorphic(r, a, b):
    c = ExprContext(simplify=False)
    e = build(c, r)
    env = {"a": a, "b": b}
    memo: dict = {}
    for n in postorder([e]):
        if n.op in ("const", "var", "concat"):
            continue
        vals = [eval_expr(x, env, memo=memo) for x in n.args]
        assert eval_expr(n, env, memo=memo) == apply_op(n.op, n.sort, n.params, vals)


@settings(max_examples=100, deadline=None)
@given(RECIPES)
def test_hash_consing(r):
    c = ExprContext()
    assert build(c, r) is build(c, r)
    size = len(c)
    build(c, r)
    assert len(c) == size
