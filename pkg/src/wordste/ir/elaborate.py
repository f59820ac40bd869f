"""Width checking, expression building and scheduling of parsed designs.

Expressions are built in a non-simplifying :class:`ExprContext` so the DAG
mirrors the source: slices of operator results stay slices of results and
never turn into slices of the operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..expr import Expr, ExprContext
from . import ast as A
from .model import Array, CombAssign, Design, Word
from .parser import ParseError


class ElabError(ParseError):
    """Semantic error in an otherwise well-formed source."""


_SAME_WIDTH = {"+": "add", "-": "sub", "*": "mul", "/": "udiv", "%": "urem", "&": "bvand", "|": "bvor", "^": "bvxor"}
_COMPARE = {"==", "!=", "<", "<=", ">", ">="}


@dataclass
class Symbol:
    kind: str  # word | array | param | var
    width: int = 0  # words and guard variables
    value: int = 0  # params
    array: Array | None = None


class ExprBuilder:
    """Turn AST expressions into sorted Exprs under a symbol table.

    Unsized literals and parameter references take their width from the
    surrounding expression; comparisons are booleans internally and become
    1-bit words when used as values.
    """

    def __init__(self, ctx: ExprContext, lookup: Callable[[str], Symbol | None], source: str = ""):
        self.ctx = ctx
        self.lookup = lookup
        self.source = source

    def error(self, msg: str, node) -> ElabError:
        return ElabError(msg, getattr(node, "loc", None), self.source)

    def symbol(self, node: A.Name) -> Symbol:
        s = self.lookup(node.ident)
        if s is None:
            raise self.error(f"undeclared name {node.ident!r}", node)
        return s

    # -- constants ---------------------------------------------------------------

    def is_const(self, n) -> bool:
        if isinstance(n, A.Num):
            return n.size is None
        if isinstance(n, A.Name):
            s = self.lookup(n.ident)
            return s is not None and s.kind == "param"
        if isinstance(n, A.Unary):
            return n.op != "!" and self.is_const(n.arg)
        if isinstance(n, A.Binary):
            return self.is_const(n.left) and self.is_const(n.right)
        if isinstance(n, A.Cond):
            return self.is_const(n.cond) and self.is_const(n.then) and self.is_const(n.other)
        return False

    def const(self, n) -> int:
        """Evaluate an integer constant expression (literals and params)."""
        if isinstance(n, A.Num):
            return n.value
        if isinstance(n, A.BoolLit):
            return int(n.value)
        if isinstance(n, A.Name):
            s = self.symbol(n)
            if s.kind != "param":
                raise self.error(f"{n.ident!r} is not a constant", n)
            return s.value
        if isinstance(n, A.Unary):
            v = self.const(n.arg)
            return {"-": -v, "~": ~v, "!": int(not v)}[n.op]
        if isinstance(n, A.Cond):
            return self.const(n.then) if self.const(n.cond) else self.const(n.other)
        if isinstance(n, A.Binary):
            a, b = self.const(n.left), self.const(n.right)
            try:
                return _INT_OPS[n.op](a, b)
            except ZeroDivisionError:
                raise self.error("constant division by zero", n) from None
        raise self.error("expected a constant expression", n)

    def positive(self, n, what: str) -> int:
        v = self.const(n)
        if v < 1:
            raise self.error(f"{what} must be >= 1, got {v}", n)
        return v

    # -- width inference -------------------------------------------------------------

    def infer(self, n) -> int | None:
        """Width of ``n`` as a value, or None if it adapts to context."""
        if isinstance(n, A.Num):
            return None if n.size is None else n.size.value
        if isinstance(n, A.BoolLit):
            return 1
        if isinstance(n, A.Name):
            s = self.symbol(n)
            if s.kind == "param":
                return None
            if s.kind == "array":
                raise self.error(f"array {n.ident!r} used as a value", n)
            return s.width
        if isinstance(n, A.Index):
            arr = self._array_ref(n)
            if arr is not None:
                arr_sym, idx = arr
                if len(idx) < len(arr_sym.index_widths):
                    raise self.error("partial read of a multi-dimensional array used as a value", n)
                return arr_sym.elem_width
            return 1
        if isinstance(n, A.Slice):
            return self.const(n.hi) - self.const(n.lo) + 1
        if isinstance(n, A.Unary):
            return 1 if n.op == "!" else self.infer(n.arg)
        if isinstance(n, A.Binary):
            if n.op in _COMPARE or n.op in ("&&", "||"):
                return 1
            if n.op in ("<<", ">>"):
                return self.infer(n.left)
            wl = self.infer(n.left)
            return wl if wl is not None else self.infer(n.right)
        if isinstance(n, A.Cond):
            wt = self.infer(n.then)
            return wt if wt is not None else self.infer(n.other)
        if isinstance(n, A.Concat):
            total = 0
            for p in n.parts:
                w = self.infer(p)
                if w is None:
                    raise self.error("unsized operand in concatenation", p)
                total += w
            return total
        if isinstance(n, A.Call):
            if n.fn == "zext":
                return self.positive(n.args[1], "zext width") if len(n.args) == 2 else None
            raise self.error(f"unknown function {n.fn!r}", n)
        raise self.error("unsupported expression", n)

    def _array_ref(self, n) -> tuple[Array, list] | None:
        """If ``n`` is ``A[i]...[k]`` over an array, return (array, index nodes)."""
        idx = []
        base = n
        while isinstance(base, A.Index):
            idx.append(base.index)
            base = base.base
        if isinstance(base, A.Name):
            s = self.lookup(base.ident)
            if s is not None and s.kind == "array":
                idx.reverse()
                if len(idx) > len(s.array.index_widths):
                    raise self.error(f"too many indices for array {base.ident!r}", n)
                return s.array, idx
        return None

    # -- building ----------------------------------------------------------------------

    def as_bv(self, e: Expr) -> Expr:
        if e.sort.is_bool:
            return self.ctx.ite(e, self.ctx.bv(1, 1), self.ctx.bv(0, 1))
        return e

    def as_bool(self, e: Expr) -> Expr:
        if e.sort.is_bool:
            return e
        if e.width == 1:
            return self.ctx.eq(e, self.ctx.bv(1, 1))
        return self.ctx.not_(self.ctx.eq(e, self.ctx.zero(e.width)))

    def literal(self, value: int, width: int | None, node) -> Expr:
        if width is None:
            raise self.error("cannot infer the width of this constant; use a sized literal", node)
        if value < 0 or value >= 1 << width:
            raise self.error(f"constant {value} does not fit in {width} bits", node)
        return self.ctx.bv(value, width)

    def value(self, n, want: int | None = None) -> Expr:
        """Build ``n`` as a bit-vector; ``want`` sizes context-dependent parts."""
        w = self.infer(n)
        if w is None:
            w = want
        if w is not None and want is not None and w != want:
            raise self.error(f"width mismatch: expression is {w} bits, context needs {want}", n)
        return self.as_bv(self._build(n, w))

    def cond(self, n) -> Expr:
        """Build ``n`` as a boolean condition."""
        return self.as_bool(self._build(n, self.infer(n) or 1))

    def _build(self, n, w: int | None) -> Expr:
        c = self.ctx
        if self.is_const(n):
            return self.literal(self.const(n), w, n)
        if isinstance(n, A.Num):
            return self.literal(n.value, n.size.value, n)
        if isinstance(n, A.BoolLit):
            return c.bool_const(n.value)
        if isinstance(n, A.Name):
            s = self.symbol(n)
            return c.var(n.ident, s.width)
        if isinstance(n, A.Index):
            ref = self._array_ref(n)
            if ref is not None:
                arr, idx = ref
                e = c.var(arr.name, arr.sort)
                for i_node, iw in zip(idx, arr.index_widths):
                    e = c.select(e, self.value(i_node, iw))
                return e
            base = self.value(n.base)
            if not self.is_const(n.index):
                raise self.error("bit select index must be constant", n.index)
            i = self.const(n.index)
            if not 0 <= i < base.width:
                raise self.error(f"bit index {i} out of range for {base.width}-bit value", n)
            return c.extract(i, i, base)
        if isinstance(n, A.Slice):
            base = self.value(n.base)
            hi, lo = self.const(n.hi), self.const(n.lo)
            if not 0 <= lo <= hi < base.width:
                raise self.error(f"slice [{hi}:{lo}] out of range for {base.width}-bit value", n)
            return c.extract(hi, lo, base)
        if isinstance(n, A.Unary):
            if n.op == "!":
                return c.not_(self.cond(n.arg))
            a = self.value(n.arg, w)
            return c.bvnot(a) if n.op == "~" else c.sub(c.zero(a.width), a)
        if isinstance(n, A.Binary):
            return self._binary(n, w)
        if isinstance(n, A.Cond):
            return c.ite(self.cond(n.cond), self.value(n.then, w), self.value(n.other, w))
        if isinstance(n, A.Concat):
            return c.concat(*(self.value(p) for p in n.parts))
        if isinstance(n, A.Call):
            if n.fn == "zext" and len(n.args) == 2:
                inner = self.value(n.args[0])
                width = self.positive(n.args[1], "zext width")
                if width < inner.width:
                    raise self.error(f"zext to {width} bits narrows a {inner.width}-bit value", n)
                return c.zext(inner, width)
            raise self.error(f"bad call to {n.fn!r}", n)
        raise self.error("unsupported expression", n)

    def _binary(self, n: A.Binary, w: int | None) -> Expr:
        c = self.ctx
        op = n.op
        if op in ("&&", "||"):
            a, b = self.cond(n.left), self.cond(n.right)
            return c.and_(a, b) if op == "&&" else c.or_(a, b)
        if op in _COMPARE:
            wl, wr = self.infer(n.left), self.infer(n.right)
            if wl is not None and wr is not None and wl != wr:
                raise self.error(f"width mismatch in '{op}': left is {wl} bits, right is {wr} bits", n)
            ow = wl if wl is not None else wr
            if ow is None:
                raise self.error("cannot infer operand widths of comparison", n)
            a, b = self.value(n.left, ow), self.value(n.right, ow)
            if op == "==":
                return c.eq(a, b)
            if op == "!=":
                return c.not_(c.eq(a, b))
            if op == "<":
                return c.ult(a, b)
            if op == "<=":
                return c.ule(a, b)
            if op == ">":
                return c.ult(b, a)
            return c.ule(b, a)
        if op in ("<<", ">>"):
            a = self.value(n.left, w)
            if self.is_const(n.right):
                k = self.const(n.right)
                if k < 0:
                    raise self.error("negative shift amount", n.right)
                return c.shl_const(a, k) if op == "<<" else c.lshr_const(a, k)
            d = self.value(n.right)
            if d.width > a.width:
                raise self.error(f"shift amount is {d.width} bits, wider than the {a.width}-bit operand", n.right)
            d = c.zext(d, a.width)
            return c.shl(a, d) if op == "<<" else c.lshr(a, d)
        wl, wr = self.infer(n.left), self.infer(n.right)
        if wl is not None and wr is not None and wl != wr:
            raise self.error(f"width mismatch in '{op}': left is {wl} bits, right is {wr} bits", n)
        ow = wl if wl is not None else (wr if wr is not None else w)
        a, b = self.value(n.left, ow), self.value(n.right, ow)
        return c.mk(_SAME_WIDTH[op], a, b)


_INT_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a // b,
    "%": lambda a, b: a % b,
    "&": lambda a, b: a & b,
    "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b,
    "<<": lambda a, b: a << b,
    ">>": lambda a, b: a >> b,
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "&&": lambda a, b: int(bool(a) and bool(b)),
    "||": lambda a, b: int(bool(a) or bool(b)),
}


# --------------------------------------------------------------------------
# reads of words inside an expression (used for scheduling and atomization)


def word_reads(roots, word_widths: dict, shifts_as_slices: bool = False) -> list[tuple[str, int, int]]:
    """Slices ``(word, hi, lo)`` read by the expressions ``roots``.

    A bare word reference reads the whole word; ``extract`` directly over a
    word reads that slice.  With ``shifts_as_slices`` a constant shift of a
    word reads only the bits that survive the shift.
    """
    out: list[tuple[str, int, int]] = []
    seen: set[int] = set()
    stack = list(roots)
    while stack:
        n = stack.pop()
        if n.id in seen:
            continue
        seen.add(n.id)
        if n.op == "var":
            if n.name in word_widths:
                out.append((n.name, word_widths[n.name] - 1, 0))
            continue
        if n.op == "extract" and n.args[0].op == "var" and n.args[0].name in word_widths:
            hi, lo = n.params
            out.append((n.args[0].name, hi, lo))
            continue
        if shifts_as_slices and n.op in ("shlc", "lshrc") and n.args[0].op == "var" and n.args[0].name in word_widths:
            m = word_widths[n.args[0].name]
            k = n.params[0]
            if 0 < k < m:
                out.append((n.args[0].name, m - 1 - k, 0) if n.op == "shlc" else (n.args[0].name, m - 1, k))
                continue
        stack.extend(n.args)
    return out


# --------------------------------------------------------------------------
# designs


def elaborate(d: A.Design, overrides: dict | None = None, source: str = "") -> Design:
    """Check widths and declarations, desugar statements, schedule comb logic.

    ``overrides`` replaces parameter values by name (e.g. datapath width).
    """
    ctx = ExprContext(simplify=False)
    symbols: dict[str, Symbol] = {}
    params: dict[str, int] = {}
    words: dict[str, Word] = {}
    arrays: dict[str, Array] = {}
    overrides = dict(overrides or {})
    b = ExprBuilder(ctx, symbols.get, source)

    def declare(name: str, sym: Symbol, node) -> None:
        if name in symbols:
            raise b.error(f"duplicate declaration of {name!r}", node)
        symbols[name] = sym

    comb: list[CombAssign] = []
    reg_writes: dict[str, list] = {}
    array_writes: dict[str, list] = {}

    def lvalue(node) -> tuple[str, int, int]:
        if isinstance(node, A.Name):
            s = b.symbol(node)
            if s.kind != "word":
                raise b.error(f"cannot assign to {node.ident!r}", node)
            return node.ident, s.width - 1, 0
        if isinstance(node, (A.Slice, A.Index)) and isinstance(node.base, A.Name):
            s = b.symbol(node.base)
            if s.kind == "word":
                if isinstance(node, A.Slice):
                    hi, lo = b.const(node.hi), b.const(node.lo)
                else:
                    hi = lo = b.const(node.index)
                if not 0 <= lo <= hi < s.width:
                    raise b.error(f"slice [{hi}:{lo}] out of range for {node.base.ident!r} ({s.width} bits)", node)
                return node.base.ident, hi, lo
        raise b.error("unsupported assignment target", node)

    def visit(s, guard: Expr | None) -> None:
        if isinstance(s, A.If):
            c = b.cond(s.cond)
            g_then = c if guard is None else ctx.and_(guard, c)
            g_else = ctx.not_(c) if guard is None else ctx.and_(guard, ctx.not_(c))
            for t in s.then:
                visit(t, g_then)
            for t in s.other:
                visit(t, g_else)
            return
        ref = b._array_ref(s.lhs) if isinstance(s.lhs, A.Index) else None
        if ref is not None:
            arr, idx = ref
            if not s.seq:
                raise b.error(f"array {arr.name!r} can only be written with '<='", s)
            if len(idx) != len(arr.index_widths):
                raise b.error(f"write to {arr.name!r} needs {len(arr.index_widths)} indices", s)
            path = [b.value(i, iw) for i, iw in zip(idx, arr.index_widths)]
            array_writes.setdefault(arr.name, []).append((guard, path, b.value(s.rhs, arr.elem_width)))
            return
        name, hi, lo = lvalue(s.lhs)
        word = words[name]
        rhs = b.value(s.rhs, hi - lo + 1)
        if s.seq:
            if word.kind != "reg":
                raise b.error(f"'<=' assigns registers only; {name!r} is a {word.kind}", s)
            reg_writes.setdefault(name, []).append((guard, hi, lo, rhs))
        else:
            if guard is not None:
                raise b.error("combinational '=' is not allowed inside 'if'; use ?:", s)
            if word.kind != "wire":
                raise b.error(f"'=' drives wires only; {name!r} is a {word.kind}", s)
            comb.append(CombAssign(name, hi, lo, rhs, s.loc))

    comb: list[CombAssign] = []
    for item in d.items:
        if isinstance(item, A.Param):
            value = overrides.pop(item.name) if item.name in overrides else b.const(item.value)
            declare(item.name, Symbol("param", value=value), item)
            params[item.name] = value
        elif isinstance(item, A.WordDecl):
            if item.width is None:
                w = words.get(item.name)
                if w is None:
                    raise b.error(f"output {item.name!r} is not declared", item)
                w.output = True
                continue
            width = b.positive(item.width, f"width of {item.name!r}")
            kind = "wire" if item.kind == "output" else item.kind
            init = None
            if item.init is not None:
                init = b.const(item.init)
                if not 0 <= init < 1 << width:
                    raise b.error(f"init value {init} does not fit in {width} bits", item.init)
            declare(item.name, Symbol("word", width=width), item)
            words[item.name] = Word(item.name, width, kind, item.kind == "output", init, item.loc)
        elif isinstance(item, A.ArrayDecl):
            dims = tuple(b.positive(x, "array index width") for x in item.index_widths)
            arr = Array(item.name, dims, b.positive(item.elem_width, "array element width"), not item.uninit, item.loc)
            declare(item.name, Symbol("array", array=arr), item)
            arrays[item.name] = arr
        else:
            visit(item, None)
    if overrides:
        raise ElabError(f"unknown parameter(s): {', '.join(sorted(overrides))}", None, source)

    reg_next = {}
    write_slices = []
    for w in words.values():
        if w.kind == "reg":
            writes = reg_writes.get(w.name, [])
            write_slices.extend((w.name, hi, lo) for _, hi, lo, _ in writes)
            reg_next[w.name] = _register_next(ctx, ctx.var(w.name, w.width), writes)
    array_next = {}
    for a in arrays.values():
        cur = ctx.var(a.name, a.sort)
        for guard, path, rhs in array_writes.get(a.name, []):
            cur = _array_write(ctx, cur, path, rhs, guard)
        array_next[a.name] = cur

    widths = {w.name: w.width for w in words.values()}
    ordered = _schedule(comb, widths, b)
    return Design(d.name, ctx, params, words, arrays, ordered, reg_next, array_next, write_slices)


def _register_next(ctx: ExprContext, cur: Expr, writes: list) -> Expr:
    if not writes:
        return cur
    cuts = {0, cur.width}
    for _, hi, lo, _ in writes:
        cuts.update((lo, hi + 1))
    bounds = sorted(cuts)
    pieces = []
    for lo, top in zip(bounds, bounds[1:]):
        hi = top - 1
        val = ctx.extract(hi, lo, cur)
        for guard, whi, wlo, rhs in writes:
            if wlo <= lo and hi <= whi:
                part = ctx.extract(hi - wlo, lo - wlo, rhs)
                val = part if guard is None else ctx.ite(guard, part, val)
        pieces.append(val)
    return ctx.concat(*reversed(pieces))


def _array_write(ctx: ExprContext, arr: Expr, path: list, rhs: Expr, guard: Expr | None) -> Expr:
    i = path[0]
    if len(path) == 1:
        elem = rhs if guard is None else ctx.ite(guard, rhs, ctx.select(arr, i))
        return ctx.store(arr, i, elem)
    return ctx.store(arr, i, _array_write(ctx, ctx.select(arr, i), path[1:], rhs, guard))


def _schedule(comb: list, widths: dict, b: ExprBuilder) -> list:
    """Order comb assignments so every driven bit is computed before use."""
    for i, x in enumerate(comb):
        for y in comb[:i]:
            if x.word == y.word and x.lo <= y.hi and y.lo <= x.hi:
                raise b.error(f"bits of {x.word!r} driven twice (also at line {y.loc.line})", x)
    deps: list[list[int]] = []
    for x in comb:
        reads = word_reads([x.rhs], widths)
        deps.append(
            [j for j, y in enumerate(comb) for (w, hi, lo) in reads if w == y.word and lo <= y.hi and y.lo <= hi]
        )
    order: list[int] = []
    state = [0] * len(comb)  # 0 new, 1 on stack, 2 done

    for root in range(len(comb)):
        if state[root]:
            continue
        stack = [(root, iter(deps[root]))]
        state[root] = 1
        path = [root]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                state[node] = 2
                order.append(node)
                continue
            if state[nxt] == 1:
                cyc = path[path.index(nxt):] + [nxt]
                names = " -> ".join(comb[k].word for k in cyc)
                raise b.error(f"combinational cycle: {names}", comb[nxt])
            if state[nxt] == 0:
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(deps[nxt])))
    return [comb[k] for k in order]


def elaborate_text(text: str, overrides: dict | None = None, source: str = "") -> Design:
    from .parser import parse_design

    return elaborate(parse_design(text, source), overrides, source)

