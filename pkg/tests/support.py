"""Shared helpers for the test suite (not collected)."""

from __future__ import annotations

import random
from typing import Mapping

from wordste.atomize import atomize_design
from wordste.expr import ExprContext, eval_expr
from wordste.ir.elaborate import elaborate_text
from wordste.symsim import Simulator, SymAtom

# criterion number -> (ok, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)


def mask(w: int) -> int:
    return (1 << w) - 1


# Plain-integer operator semantics, written independently of the package.
def _shl(a, d, m):
    return (a << d) & mask(m) if d < m else 0


def _lshr(a, d, m):
    return a >> d if d < m else 0


PY_OPS = {
    "+": lambda a, b, m: (a + b) & mask(m),
    "-": lambda a, b, m: (a - b) & mask(m),
    "*": lambda a, b, m: (a * b) & mask(m),
    "/": lambda a, b, m: mask(m) if b == 0 else a // b,
    "%": lambda a, b, m: a if b == 0 else a % b,
    "&": lambda a, b, m: a & b,
    "|": lambda a, b, m: a | b,
    "^": lambda a, b, m: a ^ b,
    "<<": _shl,
    ">>": _lshr,
}
PY_CMP = {
    "==": lambda a, b: int(a == b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
}


def one_op(expr: str, widths: Mapping[str, int], out_width: int, slices=(), mode: str = "strict-sound"):
    """Design ``r = expr`` over inputs ``widths`` plus a ready simulator."""
    decls = ", ".join(f"{n}:{w}" for n, w in widths.items())
    d = elaborate_text(f"input {decls}; wire r:{out_width}; r = {expr};")
    amap = atomize_design(d, extra=[("r", q, p) for q, p in slices])
    ctx = ExprContext()
    return d, amap, Simulator(d, amap, ctx, shift_mode=mode)


def eval_op(expr: str, operands: Mapping[str, tuple], out_width: int, q: int, p: int, mode: str = "strict-sound"):
    """Engine (val, inv) of ``r[q:p]`` for concrete operand atoms.

    ``operands`` maps input name -> (width, val, inv) with one inv for the
    whole word.
    """
    d, amap, sim = one_op(expr, {n: o[0] for n, o in operands.items()}, out_width, [(q, p)], mode)
    ctx = sim.ctx
    st = sim.initial_state()
    for (w, hi, lo) in list(st.atoms):
        if w in operands:
            _, v, inv = operands[w]
            st.atoms[(w, hi, lo)] = SymAtom(ctx.bv((v >> lo) & mask(hi - lo + 1), hi - lo + 1), ctx.bool_const(inv))
    st = sim.settle(st)
    atom = st.word(ctx, amap, "r", q, p)
    env = sim.side.complete_env({})
    for c in sim.side.constraints:
        assert eval_expr(c, env), "witness side constraint violated"
    return eval_expr(atom.val, env), bool(eval_expr(atom.inv, env))


# -- random designs ---------------------------------------------------------------


def random_design(rng: random.Random, n_words: int = 5, n_stmts: int = 6,
                  disjoint: bool = False) -> tuple[str, list[str]]:
    """Declarations and a list of independent statements with random slices.

    With ``disjoint`` no two writes to a register overlap, so statement order
    does not change the design (overlapping writes are last-write-wins).
    """
    widths = {f"w{i}": rng.randint(1, 12) for i in range(n_words)}
    inputs = [n for n in widths if rng.random() < 0.4] or ["w0"]
    decls = []
    for n, w in widths.items():
        kind = "input" if n in inputs else rng.choice(["reg", "wire"])
        decls.append((kind, n, w))
    targets = [n for k, n, _ in decls if k != "input"]

    def sl(name):
        w = widths[name]
        lo = rng.randint(0, w - 1)
        hi = rng.randint(lo, w - 1)
        return hi, lo

    stmts = []
    wired = set()
    written: dict[str, list] = {}
    for _ in range(n_stmts):
        if not targets:
            break
        t = rng.choice(targets)
        kind = next(k for k, n, _ in decls if n == t)
        if kind == "wire":
            if t in wired:
                continue
            wired.add(t)
            hi, lo = widths[t] - 1, 0
            src = rng.choice(inputs)  # wires read inputs only, so no cycles
        else:
            hi, lo = sl(t)
            if disjoint:
                if any(not (hi < l or h < lo) for h, l in written.get(t, [])):
                    continue
                written.setdefault(t, []).append((hi, lo))
            src = rng.choice(list(widths))
        width = hi - lo + 1
        parts = []
        for _ in range(rng.randint(1, 2)):
            shi, slo = sl(src)
            parts.append((src, shi, slo))
        terms = [f"zext({s}[{h}:{l}], {max(width, h - l + 1)})[{width - 1}:0]" for s, h, l in parts]
        rhs = f" {rng.choice(['+', '&', '^', '|'])} ".join(terms)
        op = "=" if kind == "wire" else "<="
        lhs = t if kind == "wire" else f"{t}[{hi}:{lo}]"
        stmts.append(f"{lhs} {op} {rhs};")
    for t in targets:  # every wire needs a driver
        if next(k for k, n, _ in decls if n == t) == "wire" and t not in wired:
            stmts.append(f"{t} = zext({inputs[0]}[0:0], {widths[t]});")
    header = "\n".join(f"{k} {n}:{w};" for k, n, w in decls)
    return header, stmts
