"""Ground truth for testing the engine.

* the concrete atom-value lattice (defined values, X, top) with its join and
  brute-force counting;
* ternary words and an exact X-propagation evaluator that concretizes every
  X bit;
* a two-valued simulator for counterexample replay, plus a ternary variant
  that enumerates X inputs when the budget allows;
* the exhaustive template checker, which compares the engine's (val, inv)
  expressions against exact tables for every operand configuration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .atomize import Atomization, AtomMap
from .expr import (
    ArrayValue,
    Expr,
    ExprContext,
    SideConstraints,
    apply_op,
    bv_sort,
    default_value,
    eval_expr,
)
from .ir.model import Array, Design, Word
from .symsim import SHIFT_MODES, FrameEval, SymArray, SymAtom, Simulator, lub
from .tape import compile_tape


class OracleError(ValueError):
    pass


# ----------------------------------------------------------------------------
# atom-value lattice


@dataclass(frozen=True)
class LatticeValue:
    kind: str  # "def" | "x" | "top"
    value: int = 0

    @staticmethod
    def defined(v: int) -> "LatticeValue":
        return LatticeValue("def", v)

    def __str__(self) -> str:
        return {"x": "X", "top": "T"}.get(self.kind, str(self.value))


X = LatticeValue("x")
TOP = LatticeValue("top")


def leq(a: LatticeValue, b: LatticeValue) -> bool:
    """Information order: X below every value, top above everything."""
    return a == b or a.kind == "x" or b.kind == "top"


def join(a: LatticeValue, b: LatticeValue) -> LatticeValue:
    if a.kind == "top" or b.kind == "top":
        return TOP
    if a.kind == "x":
        return b
    if b.kind == "x":
        return a
    return a if a.value == b.value else TOP


def atom_lattice(m: int) -> list[LatticeValue]:
    return [X] + [LatticeValue.defined(v) for v in range(1 << m)] + [TOP]


def product_lattice(widths: Sequence[int]) -> list:
    """Elements of the product lattice over atoms of the given widths.

    A tuple per combination of atom values (X or defined), plus one shared
    top: any top component makes the whole state over-constrained.
    """
    per_atom = [[X] + [LatticeValue.defined(v) for v in range(1 << m)] for m in widths]
    return [tuple(t) for t in itertools.product(*per_atom)] + [TOP]


def product_leq(a, b) -> bool:
    if b is TOP:
        return True
    if a is TOP:
        return False
    return all(leq(x, y) for x, y in zip(a, b))


def enumerate_stats(widths: Sequence[int]) -> tuple[int, int, list[int]]:
    """(height, size, elements per level) by explicit enumeration.

    The level of an element is the length of the longest chain from bottom;
    height is the level of top.
    """
    elems = product_lattice(widths)

    def rank(e) -> int:
        if e is TOP:
            return -1
        return sum(1 for x in e if x.kind == "def")

    # longest chains follow strict order; process elements by a linear extension
    order = sorted(range(len(elems)), key=lambda i: (rank(elems[i]) if elems[i] is not TOP else 10**9))
    level = {}
    for i in order:
        e = elems[i]
        below = [level[j] for j in level if j != i and product_leq(elems[j], e)]
        level[i] = 1 + max(below) if below else 0
    height = max(level.values())
    counts = [0] * (height + 1)
    for v in level.values():
        counts[v] += 1
    return height, len(elems), counts


def lattice_stats(widths: Sequence[int]) -> tuple[int, int, list[int]]:
    """Closed forms: height r+1, size prod(2^m_j + 1) + 1, level sizes by subsets.

    Level i (0 <= i <= r) holds the states with exactly i defined atoms:
    the sum over i-subsets S of prod_{j in S} 2^m_j; level r+1 is top.
    """
    widths = list(widths)
    r = len(widths)
    if r < 1:
        raise OracleError("need at least one atom")
    size = reduce(lambda acc, m: acc * ((1 << m) + 1), widths, 1) + 1
    levels = []
    for i in range(r + 1):
        levels.append(sum(reduce(lambda acc, m: acc * (1 << m), s, 1) for s in itertools.combinations(widths, i)))
    levels.append(1)
    return r + 1, size, levels


def interpret(atom_val: int, atom_inv: bool, top: bool = False) -> LatticeValue:
    """Concrete (val, inv) pair (plus a top flag) as a lattice value."""
    if top:
        return TOP
    return X if atom_inv else LatticeValue.defined(atom_val)


# ----------------------------------------------------------------------------
# ternary words and exact evaluation


@dataclass(frozen=True)
class TernaryWord:
    width: int
    value: int = 0  # bits under the X mask are zero
    xmask: int = 0

    def __post_init__(self):
        m = (1 << self.width) - 1
        object.__setattr__(self, "xmask", self.xmask & m)
        object.__setattr__(self, "value", self.value & m & ~self.xmask)

    @staticmethod
    def parse(text: str) -> "TernaryWord":
        """MSB-first string over 0/1/X, e.g. ``"0X1"``."""
        v = x = 0
        for ch in text:
            v, x = v << 1, x << 1
            if ch in "xX":
                x |= 1
            elif ch == "1":
                v |= 1
            elif ch != "0":
                raise OracleError(f"bad ternary digit {ch!r}")
        return TernaryWord(len(text), v, x)

    @staticmethod
    def all_x(width: int) -> "TernaryWord":
        return TernaryWord(width, 0, (1 << width) - 1)

    def concretizations(self) -> Iterable[int]:
        bits = [b for b in range(self.width) if self.xmask >> b & 1]
        for combo in range(1 << len(bits)):
            v = self.value
            for k, b in enumerate(bits):
                if combo >> k & 1:
                    v |= 1 << b
            yield v

    def slice(self, q: int, p: int) -> "TernaryWord":
        return TernaryWord(q - p + 1, self.value >> p, self.xmask >> p)

    def refines(self, other: "TernaryWord") -> bool:
        """True if ``self`` is at least as defined as ``other`` and agrees on its bits."""
        return (self.xmask & ~other.xmask) == 0 and ((self.value ^ other.value) & ~other.xmask) == 0

    def __str__(self) -> str:
        return "".join(
            "X" if self.xmask >> b & 1 else str(self.value >> b & 1) for b in reversed(range(self.width))
        )


_BOOL_RESULT = {"eq", "ult", "ule"}


def eval_exact(
    op: str,
    operands: Sequence[TernaryWord],
    q: int | None = None,
    p: int = 0,
    params: tuple = (),
    budget: int = 12,
    nonzero_divisor: bool = False,
) -> TernaryWord:
    """Bit-blasted reference: concretize every X bit and merge the results.

    ``nonzero_divisor`` drops concretizations with a zero second operand
    (division's divide-by-zero case is handled separately by the engine).
    """
    nx = sum(bin(o.xmask).count("1") for o in operands)
    if nx > budget:
        raise OracleError(f"{nx} X bits exceed the budget of {budget}")
    if op in _BOOL_RESULT:
        out_w = 1
    elif op == "concat":
        out_w = sum(o.width for o in operands)
    elif op == "extract":
        out_w = params[0] - params[1] + 1
    elif op == "ite":
        out_w = operands[1].width
    else:
        out_w = operands[0].width
    first = None
    diff = 0
    for combo in itertools.product(*(o.concretizations() for o in operands)):
        if nonzero_divisor and combo[1] == 0:
            continue
        r = _apply_concrete(op, out_w, params, combo, [o.width for o in operands])
        if first is None:
            first = r
        else:
            diff |= r ^ first
    if first is None:
        res = TernaryWord.all_x(out_w)
    else:
        res = TernaryWord(out_w, first, diff)
    if q is None:
        return res
    return res.slice(q, p)


def _apply_concrete(op, out_w, params, vals, widths) -> int:
    if op == "ite":
        return vals[1] if vals[0] else vals[2]
    if op == "concat":
        acc = 0
        for v, w in zip(vals, widths):
            acc = (acc << w) | v
        return acc
    if op == "extract":
        return (vals[0] >> params[1]) & ((1 << out_w) - 1)
    sort = bv_sort(out_w) if op not in _BOOL_RESULT else None
    if sort is None:
        from .expr import BOOL

        return int(apply_op(op, BOOL, params, list(vals)))
    return apply_op(op, sort, params, list(vals))


# ----------------------------------------------------------------------------
# concrete and ternary simulation


@dataclass
class Trace:
    """Per-frame word values (ints) and array values; ``xmasks`` for ternary runs."""

    frames: list = field(default_factory=list)  # list of {word: int}
    arrays: list = field(default_factory=list)  # list of {array: ArrayValue}
    xmasks: list | None = None  # list of {word: int}
    flags: list = field(default_factory=list)

    def value(self, word: str, t: int, hi: int | None = None, lo: int = 0) -> int:
        v = self.frames[t][word]
        if hi is None:
            return v
        return (v >> lo) & ((1 << (hi - lo + 1)) - 1)


def simulate_concrete(
    d: Design,
    inputs: Sequence[Mapping[str, int]],
    frames: int | None = None,
    init_regs: Mapping[str, int] | None = None,
    init_arrays: Mapping[str, Any] | None = None,
    overrides: Mapping[int, Sequence[tuple[str, int, int, int]]] | None = None,
) -> Trace:
    """Two-valued simulation.

    Frame 0 registers take their init value, else ``init_regs`` (default 0).
    Arrays start from ``init_arrays`` (default all zero, flagged for
    uninitialized arrays).  Missing input values default to 0.
    ``overrides[t]`` forces slices ``(word, hi, lo, value)`` in frame ``t``;
    a forced wire slice holds from the assignment that computes it onward.
    """
    frames = len(inputs) if frames is None else frames
    init_regs = dict(init_regs or {})
    init_arrays = dict(init_arrays or {})
    trace = Trace()
    regs = {}
    for w in d.registers:
        regs[w.name] = w.init if w.init is not None else init_regs.get(w.name, 0)
    arrays = {}
    for a in d.arrays.values():
        if a.name in init_arrays:
            arrays[a.name] = init_arrays[a.name]
        else:
            arrays[a.name] = default_value(a.sort)
            if not a.initialized:
                trace.flags.append(f"array {a.name} uninitialized: replayed with zero contents")
    trans = d.transition()
    for t in range(frames):
        env: dict[str, Any] = dict(regs)
        env.update(arrays)
        stim = inputs[t] if t < len(inputs) else {}
        for w in d.inputs:
            env[w.name] = stim.get(w.name, 0) & ((1 << w.width) - 1)
        for w in d.wires:
            env[w.name] = 0
        forced: dict[str, list] = {}
        for w, hi, lo, v in (overrides or {}).get(t, ()):
            forced.setdefault(w, []).append((hi, lo, v))

        def force(word: str) -> None:
            for hi, lo, v in forced.get(word, ()):
                m = ((1 << (hi - lo + 1)) - 1) << lo
                env[word] = (env[word] & ~m) | ((v << lo) & m)

        for w in list(d.inputs) + list(d.registers):
            force(w.name)
        memo: dict = {}
        for ca in trans.comb:
            v = eval_expr(ca.rhs, env, memo=memo)
            m = ((1 << (ca.hi - ca.lo + 1)) - 1) << ca.lo
            env[ca.word] = (env[ca.word] & ~m) | ((v << ca.lo) & m)
            force(ca.word)
            memo = {}  # wire values changed
        trace.frames.append({w: env[w] for w in d.words})
        trace.arrays.append({a: env[a] for a in d.arrays})
        memo = {}
        regs = {r: eval_expr(e, env, memo=memo) for r, e in trans.reg_next.items()}
        arrays = {a: eval_expr(e, env, memo=memo) for a, e in trans.array_next.items()}
    return trace


def simulate_ternary(
    d: Design,
    inputs: Sequence[Mapping[str, TernaryWord | int]],
    frames: int | None = None,
    budget: int = 12,
) -> Trace:
    """Exact X-propagating simulation by enumerating every X input bit.

    Registers without an init value start all-X and count against the budget.
    """
    frames = len(inputs) if frames is None else frames
    slots = []  # (frame or None for init, name, width, TernaryWord)
    for w in d.registers:
        if w.init is None:
            slots.append((None, w.name, TernaryWord.all_x(w.width)))
    for t in range(frames):
        stim = inputs[t] if t < len(inputs) else {}
        for w in d.inputs:
            v = stim.get(w.name, TernaryWord.all_x(w.width))
            if isinstance(v, int):
                v = TernaryWord(w.width, v)
            slots.append((t, w.name, v))
    nx = sum(bin(s[2].xmask).count("1") for s in slots)
    if nx > budget:
        raise OracleError(f"{nx} X bits in the stimulus exceed the budget of {budget}")
    merged: Trace | None = None
    diff: list = []
    for combo in itertools.product(*(s[2].concretizations() for s in slots)):
        init = {}
        stim = [dict() for _ in range(frames)]
        for (t, name, _), v in zip(slots, combo):
            if t is None:
                init[name] = v
            else:
                stim[t][name] = v
        tr = simulate_concrete(d, stim, frames, init_regs=init)
        if merged is None:
            merged = tr
            diff = [{w: 0 for w in f} for f in tr.frames]
            continue
        for t, f in enumerate(tr.frames):
            for w, v in f.items():
                diff[t][w] |= v ^ merged.frames[t][w]
    assert merged is not None
    merged.xmasks = diff
    for t, f in enumerate(merged.frames):
        for w in f:
            f[w] &= ~diff[t][w]
    return merged


# ----------------------------------------------------------------------------
# exhaustive template checking


@dataclass
class Violation:
    op: str
    slice: tuple
    operands: dict  # atom name -> (payload, inv)
    engine: tuple  # (val, inv)
    exact: str  # ternary result slice

    def line(self) -> str:
        ops = " ".join(f"{k}=({v[0]},{int(v[1])})" for k, v in sorted(self.operands.items()))
        return f"{self.op}\t[{self.slice[0]}:{self.slice[1]}]\t{ops}\tengine=({self.engine[0]},{int(self.engine[1])})\texact={self.exact}"


@dataclass
class SoundnessReport:
    op: str
    widths: tuple
    mode: str
    configurations: int = 0
    checks: int = 0
    violations: list = field(default_factory=list)
    value_mismatches: int = 0
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations and self.value_mismatches == 0

    def summary(self) -> str:
        return (
            f"{self.op}{list(self.widths)} mode={self.mode}: {self.checks} checks, "
            f"{len(self.violations)} violations, {self.value_mismatches} value mismatches"
        )


# operator name -> (arity, builder over design-context operand vars, result width fn)
def _op_builder(op: str, params: tuple):
    def bin_(name):
        return lambda c, a, b: c.mk(name, a, b)

    table = {
        "add": bin_("add"),
        "sub": bin_("sub"),
        "mul": bin_("mul"),
        "udiv": bin_("udiv"),
        "urem": bin_("urem"),
        "and": bin_("bvand"),
        "or": bin_("bvor"),
        "xor": bin_("bvxor"),
        "nand": lambda c, a, b: c.bvnot(c.bvand(a, b)),
        "nor": lambda c, a, b: c.bvnot(c.bvor(a, b)),
        "xnor": lambda c, a, b: c.bvnot(c.bvxor(a, b)),
        "eq": bin_("eq"),
        "ult": bin_("ult"),
        "ule": bin_("ule"),
        "concat": lambda c, a, b: c.concat(a, b),
        "shl": bin_("shl"),
        "lshr": bin_("lshr"),
        "not": lambda c, a: c.bvnot(a),
        "extract": lambda c, a: c.extract(params[0], params[1], a),
        "shlc": lambda c, a: c.shl_const(a, params[0]),
        "lshrc": lambda c, a: c.lshr_const(a, params[0]),
        "ite": lambda c, s, a, b: c.ite(c.eq(s, c.bv(1, 1)), a, b),
    }
    if op not in table:
        raise OracleError(f"no soundness harness for operator {op!r}")
    return table[op]


TEMPLATE_OPS = (
    "add", "sub", "mul", "udiv", "urem", "ite", "not", "and", "or", "xor", "nand", "nor", "xnor",
    "eq", "ult", "ule", "concat", "extract", "shlc", "lshrc", "shl", "lshr",
)


def _arity(op: str) -> int:
    if op in ("not", "extract", "shlc", "lshrc"):
        return 1
    return 3 if op == "ite" else 2


def default_cut_sets(m: int) -> list[frozenset]:
    """Operand atomizations to try: every cut set up to 4 bits, a spread above."""
    if m <= 4:
        pos = range(1, m)
        return [frozenset(s) for k in range(m) for s in itertools.combinations(pos, k)]
    return [frozenset(), frozenset({m // 2}), frozenset(range(1, m))]


class _Harness:
    """One operator instance over symbolic atoms, ready for batch evaluation."""

    def __init__(self, names, widths, cut_sets, mode, track=True):
        self.dctx = ExprContext(simplify=False)
        self.names = names
        self.widths = widths
        words = {n: Word(n, w, "input") for n, w in zip(names, widths)}
        self.design = Design("harness", self.dctx, {}, words, {}, [], {}, {})
        self.amap = AtomMap((n, Atomization(w, cs)) for n, w, cs in zip(names, widths, cut_sets))
        self.side = SideConstraints("h")
        self.sim = Simulator(self.design, self.amap, shift_mode=mode, track_inv=track, side=self.side)
        c = self.sim.ctx
        atoms = {}
        self.fields = []  # (var name, bits, sort)
        self.atom_list = []  # (word, hi, lo, val name, inv name)
        for n in names:
            for hi, lo in self.amap[n].atoms:
                vn, iname = f"{n}{hi}_{lo}", f"i{n}{hi}_{lo}"
                atoms[(n, hi, lo)] = SymAtom(c.var(vn, hi - lo + 1), c.var(iname, c.true.sort))
                self.atom_list.append((n, hi, lo, vn, iname))
                self.fields.append((vn, hi - lo + 1))
        for *_, iname in self.atom_list:
            self.fields.append((iname, 1))
        self.fe = FrameEval(self.sim, atoms, {})

    def operand(self, n):
        return self.dctx.var(n, self.widths[self.names.index(n)])


def _grid(fields: list[tuple[str, int]]) -> tuple[dict, int]:
    total = sum(b for _, b in fields)
    if total > 24:
        raise OracleError(f"{total} enumeration bits is too many")
    rows = np.arange(1 << total, dtype=np.uint64)
    cols, pos = {}, 0
    for name, bits in fields:
        cols[name] = (rows >> np.uint64(pos)) & np.uint64((1 << bits) - 1)
        pos += bits
    return cols, 1 << total


def _exact_from_concrete(f: Expr, operand_vars: list[Expr], widths: tuple, out_w: int, nonzero: bool):
    """Exact ternary table of expression ``f`` over its operand words."""
    grid = kernels.concrete_grid(widths)
    tape = compile_tape([f], [v.name for v in operand_vars])
    env = np.stack(grid, axis=1) if grid else np.zeros((1, 0), dtype=np.uint64)
    results = kernels.eval_tape(tape, env)[:, 0]
    allowed = (grid[1] != 0).astype(np.uint8) if nonzero else None
    return kernels.ternary_closure(results, widths, out_w, allowed), results


def _evaluate(h: _Harness, roots: list[Expr], extra_fields: list[tuple[str, int]]):
    """Evaluate ``roots`` over every field combination; returns (cols, outputs)."""
    fields = list(h.fields) + extra_fields
    cols, n = _grid(fields)
    tape = compile_tape(roots, [name for name, _ in fields])
    env = np.stack([cols[name] for name in tape.var_names], axis=1)
    return cols, kernels.eval_tape(tape, env)


def _operand_ternary(h: _Harness, cols: dict, name: str):
    v = np.zeros_like(next(iter(cols.values())))
    x = np.zeros_like(v)
    for n, hi, lo, vn, iname in h.atom_list:
        if n != name:
            continue
        v |= cols[vn] << np.uint64(lo)
        x |= (cols[iname] * np.uint64((1 << (hi - lo + 1)) - 1)) << np.uint64(lo)
    return v, x


def check_template_soundness(
    op: str,
    widths: Sequence[int],
    slices: Sequence[tuple[int, int]] | None = None,
    mode: str = "strict-sound",
    params: tuple = (),
    cut_sets: Sequence[Sequence[frozenset]] | None = None,
    max_violations: int = 20,
) -> SoundnessReport:
    """Exhaustively compare one operator template against the exact oracle.

    For every operand atomization, every (payload, inv) configuration of the
    operand atoms and every division witness value allowed by the side
    constraints, each requested result slice whose engine inv is false must
    be fully defined in the exact result and equal the engine val.  The val
    component is also compared with the concrete result on every row.
    """
    if mode not in SHIFT_MODES:
        raise OracleError(f"unknown shift mode {mode!r}")
    widths = tuple(widths)
    arity = _arity(op)
    if len(widths) != arity:
        raise OracleError(f"{op} takes {arity} operands, got widths {widths}")
    names = ["s", "a", "b"] if op == "ite" else ["a", "b"][:arity]
    build = _op_builder(op, params)
    report = SoundnessReport(op, widths, mode)
    nonzero = op in ("udiv", "urem")
    cut_sets = cut_sets or [default_cut_sets(w) for w in widths]

    # the exact table depends only on the operator, not the atomization
    proto = _Harness(names, widths, [frozenset()] * arity, mode)
    f_proto = build(proto.dctx, *[proto.operand(n) for n in names])
    out_w = 1 if f_proto.sort.is_bool else f_proto.width
    (ex_v, ex_x), concrete = _exact_from_concrete(
        f_proto, [proto.operand(n) for n in names], widths, out_w, nonzero
    )
    if slices is None:
        slices = [(q, p) for q in range(out_w) for p in range(q + 1)]

    for cuts in itertools.product(*cut_sets):
        h = _Harness(names, widths, list(cuts), mode)
        f = build(h.dctx, *[h.operand(n) for n in names])
        results = [h.fe.slice(f, q, p) for q, p in slices]
        roots = []
        for r in results:
            roots.extend([r.val, r.inv])
        side = list(h.side.constraints)
        roots.extend(side)
        extra = [(w.var.name, w.var.width) for w in h.side.witnesses]
        cols, out = _evaluate(h, roots, extra)
        ok_rows = np.ones(out.shape[0], dtype=bool)
        for k in range(len(side)):
            ok_rows &= out[:, 2 * len(results) + k] != 0
        tern = [_operand_ternary(h, cols, n) for n in names]
        idx = kernels.table_index(widths, tern)
        exv, exx = ex_v[idx], ex_x[idx]
        # concrete_grid packs operand values back to back
        cidx = np.zeros_like(tern[0][0])
        pos = 0
        for w, (v, _) in zip(widths, tern):
            cidx |= v << np.uint64(pos)
            pos += w
        conc = concrete[cidx.astype(np.int64)]
        report.configurations += int(ok_rows.sum())
        for k, (q, p) in enumerate(slices):
            sw = q - p + 1
            m = np.uint64((1 << sw) - 1)
            eval_ = out[:, 2 * k]
            einv = out[:, 2 * k + 1]
            want_val = (conc >> np.uint64(p)) & m
            report.value_mismatches += int((eval_ != want_val).sum())
            xs = (exx >> np.uint64(p)) & m
            vs = (exv >> np.uint64(p)) & m
            bad = ok_rows & (einv == 0) & ((xs != 0) | (vs != eval_))
            report.checks += int(ok_rows.sum())
            for r in np.nonzero(bad)[0][: max(0, max_violations - len(report.violations))]:
                operands = {vn: (int(cols[vn][r]), bool(cols[iname][r])) for _, _, _, vn, iname in h.atom_list}
                for name, _ in extra:
                    operands[name] = (int(cols[name][r]), False)
                exact = TernaryWord(sw, int(vs[r]), int(xs[r]))
                report.violations.append(Violation(op, (q, p), operands, (int(eval_[r]), bool(einv[r])), str(exact)))
            if bad.sum() and len(report.violations) >= max_violations:
                report.truncated = True
    return report


def check_array_soundness(elem_width: int, updates: int, initialized: bool = True, max_violations: int = 20) -> SoundnessReport:
    """Read-after-updates over a 2-entry array, against the exact oracle.

    ``select(store(...store(A, i1, e1)..., ik, ek), j)`` with every index and
    element an atom that may be X, and the base contents either valid
    (enumerated) or wholly X.
    """
    e = elem_width
    dctx = ExprContext(simplify=False)
    names = []
    widths = []
    for k in range(updates):
        names += [f"i{k}", f"e{k}"]
        widths += [1, e]
    names.append("j")
    widths.append(1)
    words = {n: Word(n, w, "input") for n, w in zip(names, widths)}
    arr = Array("M", (1,), e, initialized)
    design = Design("harness", dctx, {}, words, {"M": arr}, [], {}, {})
    amap = AtomMap((n, Atomization(w)) for n, w in zip(names, widths))
    side = SideConstraints("h")
    sim = Simulator(design, amap, side=side)
    c = sim.ctx
    atoms = {(n, w - 1, 0): SymAtom(c.var(f"v{n}", w), c.var(f"inv{n}", c.true.sort)) for n, w in zip(names, widths)}
    base_var = c.var("M@init", arr.sort)
    fe = FrameEval(sim, atoms, {"M": SymArray("base", base_var, initialized)})
    node = dctx.var("M", arr.sort)
    for k in range(updates):
        node = dctx.store(node, dctx.var(f"i{k}", 1), dctx.var(f"e{k}", e))
    f = dctx.select(node, dctx.var("j", 1))
    slices = [(q, p) for q in range(e) for p in range(q + 1)]
    results = [fe.slice(f, q, p) for q, p in slices]
    roots = [x for r in results for x in (r.val, r.inv)]
    fields = [(f"v{n}", w) for n, w in zip(names, widths)] + [(f"inv{n}", 1) for n in names] + [("M@init", 2 * e)]
    cols, _ = _grid(fields)
    tape = compile_tape(roots, [nm for nm, _ in fields])
    out = kernels.eval_tape(tape, np.stack([cols[nm] for nm in tape.var_names], axis=1))

    # exact tables: operands packed as one ternary word, one table per base content
    total = sum(widths)
    grid = np.arange(1 << total, dtype=np.uint64)
    tables_v, tables_x = [], []
    for base in range(1 << (2 * e)):
        mem = [base & ((1 << e) - 1), base >> e]
        res = np.empty(1 << total, dtype=np.uint64)
        for cv in range(1 << total):
            pos = 0
            cur = list(mem)
            for k in range(updates):
                i = (cv >> pos) & 1
                ev = (cv >> (pos + 1)) & ((1 << e) - 1)
                cur[i] = ev
                pos += 1 + e
            res[cv] = cur[(cv >> pos) & 1]
        tv, tx = kernels.ternary_closure(res, (total,), e)
        tables_v.append(tv)
        tables_x.append(tx)
    tv = np.stack(tables_v)
    tx = np.stack(tables_x)
    if not initialized:
        merged_x = tx[0].copy()
        for b in range(1, tv.shape[0]):
            merged_x |= tx[b] | (tv[b] ^ tv[0])
        tv = np.broadcast_to(tv[0] & ~merged_x, tv.shape)
        tx = np.broadcast_to(merged_x, tx.shape)
    del grid

    v = np.zeros_like(cols["M@init"])
    x = np.zeros_like(v)
    pos = 0
    for n, w in zip(names, widths):
        v |= cols[f"v{n}"] << np.uint64(pos)
        x |= (cols[f"inv{n}"] * np.uint64((1 << w) - 1)) << np.uint64(pos)
        pos += w
    idx = kernels.table_index((total,), [(v, x)])
    base_idx = cols["M@init"].astype(np.int64)
    exv, exx = tv[base_idx, idx], tx[base_idx, idx]
    report = SoundnessReport(f"array[{'init' if initialized else 'uninit'}]x{updates}", (e,), "strict-sound")
    report.configurations = out.shape[0]
    # concrete value of the read for the value rule
    mem0 = cols["M@init"] & np.uint64((1 << e) - 1)
    mem1 = cols["M@init"] >> np.uint64(e)
    for k in range(updates):
        i = cols[f"vi{k}"]
        ev = cols[f"ve{k}"]
        mem0 = np.where(i == 0, ev, mem0)
        mem1 = np.where(i == 1, ev, mem1)
    conc = np.where(cols["vj"] == 0, mem0, mem1)
    for k, (q, p) in enumerate(slices):
        m = np.uint64((1 << (q - p + 1)) - 1)
        eval_, einv = out[:, 2 * k], out[:, 2 * k + 1]
        report.value_mismatches += int((eval_ != ((conc >> np.uint64(p)) & m)).sum())
        xs, vs = (exx >> np.uint64(p)) & m, (exv >> np.uint64(p)) & m
        bad = (einv == 0) & ((xs != 0) | (vs != eval_))
        report.checks += out.shape[0]
        for r in np.nonzero(bad)[0][: max(0, max_violations - len(report.violations))]:
            operands = {n: (int(cols[f"v{n}"][r]), bool(cols[f"inv{n}"][r])) for n in names}
            operands["M"] = (int(cols["M@init"][r]), not initialized)
            exact = TernaryWord(q - p + 1, int(vs[r]), int(xs[r]))
            report.violations.append(Violation(report.op, (q, p), operands, (int(eval_[r]), bool(einv[r])), str(exact)))
    return report


def check_lub_pairs(m: int = 2) -> tuple[int, list]:
    """Symbolic lub versus lattice join over every pair of encodings.

    Each side is a valid value, an X with any payload, or top (a valid value
    carrying a pending top condition).  Returns (pairs checked, mismatches).
    """
    ctx = ExprContext()
    a = SymAtom(ctx.var("av", m), ctx.var("ai", ctx.true.sort))
    b = SymAtom(ctx.var("bv", m), ctx.var("bi", ctx.true.sort))
    c, top = lub(ctx, a, b)
    encodings = [(v, False, False) for v in range(1 << m)]
    encodings += [(v, True, False) for v in range(1 << m)]
    encodings.append((0, False, True))
    mismatches = []
    n = 0
    for ea, eb in itertools.product(encodings, repeat=2):
        n += 1
        env = {"av": ea[0], "ai": ea[1], "bv": eb[0], "bi": eb[1]}
        la, lb = interpret(*ea), interpret(*eb)
        got_top = ea[2] or eb[2] or eval_expr(top, env)
        got = interpret(eval_expr(c.val, env), eval_expr(c.inv, env), got_top)
        want = join(la, lb)
        if got != want:
            mismatches.append((str(la), str(lb), str(got), str(want)))
    return n, mismatches
