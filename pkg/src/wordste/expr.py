"""Sorted, hash-consed word-level expression DAG.

Every symbolic value in the engine (atom values, invalid bits, guards,
obligations) is an :class:`Expr` built through an :class:`ExprContext`.
Structurally identical terms built in one context are the same Python object,
so identity comparison is term equality.  Construction applies a single pass of
local simplification; simplification is best effort and never recursive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping


class SortError(ValueError):
    """Raised when an operator is applied to operands of the wrong sort."""


class EvalError(KeyError):
    """Raised when evaluation meets a variable missing from the environment."""


@dataclass(frozen=True)
class Sort:
    kind: str  # "bv" | "bool" | "array"
    width: int = 0
    index_width: int = 0
    elem: "Sort | None" = None

    def __post_init__(self):
        if self.kind == "bv" and self.width < 1:
            raise SortError(f"bit-vector width must be >= 1, got {self.width}")
        if self.kind == "array" and (self.index_width < 1 or self.elem is None):
            raise SortError("array sort needs an index width >= 1 and an element sort")

    @property
    def is_bv(self) -> bool:
        return self.kind == "bv"

    @property
    def is_bool(self) -> bool:
        return self.kind == "bool"

    @property
    def is_array(self) -> bool:
        return self.kind == "array"

    def __str__(self) -> str:
        if self.kind == "bv":
            return f"bv{self.width}"
        if self.kind == "bool":
            return "bool"
        return f"array[{self.index_width}]{self.elem}"


BOOL = Sort("bool")
_BV_CACHE: dict[int, Sort] = {}


def bv_sort(width: int) -> Sort:
    s = _BV_CACHE.get(width)
    if s is None:
        s = _BV_CACHE[width] = Sort("bv", width)
    return s


def array_sort(index_width: int, elem: Sort | int) -> Sort:
    if isinstance(elem, int):
        elem = bv_sort(elem)
    return Sort("array", index_width=index_width, elem=elem)


class Expr:
    """A node of the DAG.  Never construct directly; use ExprContext."""

    __slots__ = ("op", "args", "params", "sort", "id", "__weakref__")

    def __init__(self, op: str, args: tuple, params: tuple, sort: Sort, id_: int):
        self.op = op
        self.args = args
        self.params = params
        self.sort = sort
        self.id = id_

    @property
    def width(self) -> int:
        return self.sort.width

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self) -> Any:
        return self.params[0]

    @property
    def name(self) -> str:
        return self.params[0]

    def is_true(self) -> bool:
        return self.op == "const" and self.sort.is_bool and self.params[0] is True

    def is_false(self) -> bool:
        return self.op == "const" and self.sort.is_bool and self.params[0] is False

    def __repr__(self) -> str:
        return to_text(self)


# --------------------------------------------------------------------------
# concrete array values


class ArrayValue:
    """Immutable finite-support array: a default element plus explicit entries."""

    __slots__ = ("default", "entries")

    def __init__(self, default: Any, entries: Mapping[int, Any] | None = None):
        self.default = default
        self.entries = dict(entries or {})

    def read(self, index: int) -> Any:
        return self.entries.get(index, self.default)

    def write(self, index: int, value: Any) -> "ArrayValue":
        entries = dict(self.entries)
        entries[index] = value
        return ArrayValue(self.default, entries)

    def normalized(self, index_width: int) -> tuple:
        """Canonical content for equality, over the full index range when small."""
        if index_width <= 12:
            return tuple(_norm(self.read(i)) for i in range(1 << index_width))
        items = tuple(sorted((k, _norm(v)) for k, v in self.entries.items() if v != self.default))
        return (_norm(self.default), items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArrayValue):
            return NotImplemented
        keys = set(self.entries) | set(other.entries)
        return self.default == other.default and all(self.read(k) == other.read(k) for k in keys)

    def __hash__(self):
        return hash((self.default, frozenset(self.entries.items())))

    def __repr__(self) -> str:
        return f"ArrayValue(default={self.default!r}, entries={self.entries!r})"


def _norm(v):
    return v.normalized(30) if isinstance(v, ArrayValue) else v


def default_value(sort: Sort) -> Any:
    if sort.is_bv:
        return 0
    if sort.is_bool:
        return False
    return ArrayValue(default_value(sort.elem))


# --------------------------------------------------------------------------
# context


def _mask(w: int) -> int:
    return (1 << w) - 1



class ExprContext:
    """Owns the hash-cons table.  One context per engine instance; not thread-safe."""

    def __init__(self, simplify: bool = True):
        self.simplify = simplify
        self._table: dict[tuple, Expr] = {}
        self._ids = itertools.count()
        self.true = self._node("const", (), (True,), BOOL)
        self.false = self._node("const", (), (False,), BOOL)

    def __len__(self) -> int:
        return len(self._table)

    def _node(self, op: str, args: tuple, params: tuple, sort: Sort) -> Expr:
        key = (op, args, params, sort)
        e = self._table.get(key)
        if e is None:
            e = Expr(op, args, params, sort, next(self._ids))
            self._table[key] = e
        return e

    # -- leaves --------------------------------------------------------------

    def bv(self, value: int, width: int) -> Expr:
        if width < 1:
            raise SortError(f"const: width must be >= 1, got {width}")
        return self._node("const", (), (value & _mask(width),), bv_sort(width))

    def boolean(self, value: bool) -> Expr:
        return self.true if value else self.false

    def var(self, name: str, sort: Sort | int) -> Expr:
        if isinstance(sort, int):
            sort = bv_sort(sort)
        return self._node("var", (), (name,), sort)

    def zero(self, width: int) -> Expr:
        return self.bv(0, width)

    def ones(self, width: int) -> Expr:
        return self.bv(_mask(width), width)

    # -- generic entry point -------------------------------------------------

    def mk(self, op: str, *args: Expr, params: tuple = ()) -> Expr:
        """Build ``op(args)`` by tag; the per-operator builders below do the work."""
        if op == "const":
            value, width = params
            return self.bool_const(value) if width == 0 else self.bv(value, width)
        if op == "var":
            return self.var(*params)
        builder = _BUILDERS.get(op)
        if builder is None:
            raise SortError(f"unknown operator {op!r}")
        return builder(self, args, params)

    def bool_const(self, value: bool) -> Expr:
        return self.true if value else self.false

    def import_expr(self, e: Expr) -> Expr:
        """Rebuild ``e`` (possibly from another context) bottom-up in this context."""
        memo: dict[int, Expr] = {}
        for n in postorder([e]):
            if n.op == "const":
                memo[n.id] = self.bool_const(n.value) if n.sort.is_bool else self.bv(n.value, n.width)
            elif n.op == "var":
                memo[n.id] = self.var(n.name, n.sort)
            else:
                memo[n.id] = self.mk(n.op, *(memo[a.id] for a in n.args), params=n.params)
        return memo[e.id]

    # -- bit-vector arithmetic -------------------------------------------------

    def _bin_same(self, op: str, a: Expr, b: Expr) -> int:
        if not (a.sort.is_bv and b.sort.is_bv) or a.width != b.width:
            raise SortError(f"{op}: operand widths differ or are not bit-vectors ({a.sort} vs {b.sort})")
        return a.width

    def add(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("add", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value + b.value, w)
            if a.is_const and a.value == 0:
                return b
            if b.is_const and b.value == 0:
                return a
        return self._node("add", (a, b), (), a.sort)

    def sub(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("sub", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value - b.value, w)
            if b.is_const and b.value == 0:
                return a
            if a is b:
                return self.zero(w)
        return self._node("sub", (a, b), (), a.sort)

    def mul(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("mul", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value * b.value, w)
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return x
                if x.is_const and x.value == 1:
                    return y
        return self._node("mul", (a, b), (), a.sort)

    def udiv(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("udiv", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(_udiv(a.value, b.value, w), w)
            if b.is_const and b.value == 1:
                return a
        return self._node("udiv", (a, b), (), a.sort)

    def urem(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("urem", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(_urem(a.value, b.value), w)
            if b.is_const and b.value == 1:
                return self.zero(w)
        return self._node("urem", (a, b), (), a.sort)

    # -- structure -------------------------------------------------------------

    def concat(self, *parts: Expr) -> Expr:
        """Concatenate, most significant part first."""
        if not parts:
            raise SortError("concat: needs at least one operand")
        for p in parts:
            if not p.sort.is_bv:
                raise SortError(f"concat: operand of sort {p.sort} is not a bit-vector")
        if not self.simplify:
            if len(parts) == 1:
                return parts[0]
            w = sum(p.width for p in parts)
            return self._node("concat", tuple(parts), (), bv_sort(w))
        flat: list[Expr] = []
        for p in parts:
            flat.extend(p.args if p.op == "concat" else (p,))
        merged: list[Expr] = []
        for p in flat:
            if merged:
                prev = merged[-1]
                if prev.is_const and p.is_const:
                    merged[-1] = self.bv((prev.value << p.width) | p.value, prev.width + p.width)
                    continue
                if (
                    prev.op == "extract"
                    and p.op == "extract"
                    and prev.args[0] is p.args[0]
                    and prev.params[1] == p.params[0] + 1
                ):
                    merged[-1] = self.extract(prev.params[0], p.params[1], p.args[0])
                    continue
            merged.append(p)
        if len(merged) == 1:
            return merged[0]
        w = sum(p.width for p in merged)
        return self._node("concat", tuple(merged), (), bv_sort(w))

    def extract(self, hi: int, lo: int, a: Expr) -> Expr:
        if not a.sort.is_bv or not (0 <= lo <= hi < a.width):
            raise SortError(f"extract[{hi}:{lo}]: out of range for operand of sort {a.sort}")
        if not self.simplify:
            if hi == a.width - 1 and lo == 0:
                return a
            return self._node("extract", (a,), (hi, lo), bv_sort(hi - lo + 1))
        while True:
            if hi == a.width - 1 and lo == 0:
                return a
            if a.is_const:
                return self.bv(a.value >> lo, hi - lo + 1)
            if a.op == "extract":
                lo += a.params[1]
                hi += a.params[1]
                a = a.args[0]
                continue
            if a.op == "concat":
                pieces = []
                pos = a.width
                for part in a.args:
                    top, bot = pos - 1, pos - part.width
                    pos = bot
                    if bot > hi or top < lo:
                        continue
                    pieces.append(self.extract(min(hi, top) - bot, max(lo, bot) - bot, part))
                return self.concat(*pieces)
            if a.op == "bvnot":
                return self.bvnot(self.extract(hi, lo, a.args[0]))
            if a.op in ("bvand", "bvor", "bvxor"):
                x, y = a.args
                return self.mk(a.op, self.extract(hi, lo, x), self.extract(hi, lo, y))
            if a.op == "ite":
                c, x, y = a.args
                return self.ite(c, self.extract(hi, lo, x), self.extract(hi, lo, y))
            return self._node("extract", (a,), (hi, lo), bv_sort(hi - lo + 1))

    def zext(self, a: Expr, width: int) -> Expr:
        if width < a.width:
            raise SortError(f"zext: target width {width} below operand width {a.width}")
        if width == a.width:
            return a
        return self.concat(self.zero(width - a.width), a)

    # -- bitwise -----------------------------------------------------------------

    def bvnot(self, a: Expr) -> Expr:
        if not a.sort.is_bv:
            raise SortError(f"bvnot: operand of sort {a.sort} is not a bit-vector")
        if self.simplify:
            if a.is_const:
                return self.bv(~a.value, a.width)
            if a.op == "bvnot":
                return a.args[0]
        return self._node("bvnot", (a,), (), a.sort)

    def bvand(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("bvand", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value & b.value, w)
            if a is b:
                return a
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return x
                if x.is_const and x.value == _mask(w):
                    return y
        return self._node("bvand", (a, b), (), a.sort)

    def bvor(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("bvor", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value | b.value, w)
            if a is b:
                return a
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return y
                if x.is_const and x.value == _mask(w):
                    return x
        return self._node("bvor", (a, b), (), a.sort)

    def bvxor(self, a: Expr, b: Expr) -> Expr:
        w = self._bin_same("bvxor", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bv(a.value ^ b.value, w)
            if a is b:
                return self.zero(w)
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return y
        return self._node("bvxor", (a, b), (), a.sort)

    # -- shifts ------------------------------------------------------------------

    def shl(self, a: Expr, d: Expr) -> Expr:
        w = self._bin_same("shl", a, d)
        if self.simplify:
            if d.is_const:
                return self.shl_const(a, d.value)
            if a.is_const and a.value == 0:
                return a
        return self._node("shl", (a, d), (), a.sort)

    def lshr(self, a: Expr, d: Expr) -> Expr:
        w = self._bin_same("lshr", a, d)
        if self.simplify:
            if d.is_const:
                return self.lshr_const(a, d.value)
            if a.is_const and a.value == 0:
                return a
        return self._node("lshr", (a, d), (), a.sort)

    def shl_const(self, a: Expr, k: int) -> Expr:
        if not a.sort.is_bv or k < 0:
            raise SortError(f"shl-const({k}): bad operand sort {a.sort} or negative amount")
        if self.simplify:
            if k == 0:
                return a
            if k >= a.width:
                return self.zero(a.width)
            if a.is_const:
                return self.bv(a.value << k, a.width)
        return self._node("shlc", (a,), (k,), a.sort)

    def lshr_const(self, a: Expr, k: int) -> Expr:
        if not a.sort.is_bv or k < 0:
            raise SortError(f"lshr-const({k}): bad operand sort {a.sort} or negative amount")
        if self.simplify:
            if k == 0:
                return a
            if k >= a.width:
                return self.zero(a.width)
            if a.is_const:
                return self.bv(a.value >> k, a.width)
        return self._node("lshrc", (a,), (k,), a.sort)

    def pow2(self, i: Expr) -> Expr:
        """``1 << i`` at the width of ``i``."""
        return self.shl(self.bv(1, i.width), i)

    # -- predicates ----------------------------------------------------------------

    def eq(self, a: Expr, b: Expr) -> Expr:
        if a.sort != b.sort:
            raise SortError(f"eq: operand sorts differ ({a.sort} vs {b.sort})")
        if self.simplify:
            if a is b:
                return self.true
            if a.is_const and b.is_const:
                return self.bool_const(a.value == b.value)
            if a.sort.is_bool:
                for x, y in ((a, b), (b, a)):
                    if x.is_const:
                        return y if x.value else self.not_(y)
            for x, y in ((a, b), (b, a)):
                if (
                    y.is_const
                    and x.op == "ite"
                    and x.args[1].is_const
                    and x.args[2].is_const
                ):
                    c, k1, k2 = x.args
                    hit1, hit2 = k1.value == y.value, k2.value == y.value
                    if hit1 and hit2:
                        return self.true
                    if hit1:
                        return c
                    if hit2:
                        return self.not_(c)
                    return self.false
            if a.id > b.id:
                a, b = b, a
        return self._node("eq", (a, b), (), BOOL)

    def ne(self, a: Expr, b: Expr) -> Expr:
        return self.not_(self.eq(a, b))

    def ult(self, a: Expr, b: Expr) -> Expr:
        self._bin_same("ult", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bool_const(a.value < b.value)
            if a is b or (b.is_const and b.value == 0):
                return self.false
            if a.is_const and a.value == _mask(a.width):
                return self.false
        return self._node("ult", (a, b), (), BOOL)

    def ule(self, a: Expr, b: Expr) -> Expr:
        self._bin_same("ule", a, b)
        if self.simplify:
            if a.is_const and b.is_const:
                return self.bool_const(a.value <= b.value)
            if a is b or (a.is_const and a.value == 0):
                return self.true
            if b.is_const and b.value == _mask(b.width):
                return self.true
        return self._node("ule", (a, b), (), BOOL)

    def ugt(self, a: Expr, b: Expr) -> Expr:
        return self.ult(b, a)

    def uge(self, a: Expr, b: Expr) -> Expr:
        return self.ule(b, a)

    # -- boolean connectives -------------------------------------------------------

    def _check_bool(self, op: str, xs: Iterable[Expr]) -> None:
        for x in xs:
            if not x.sort.is_bool:
                raise SortError(f"{op}: operand of sort {x.sort} is not boolean")

    def not_(self, a: Expr) -> Expr:
        self._check_bool("not", (a,))
        if self.simplify:
            if a.is_const:
                return self.bool_const(not a.value)
            if a.op == "not":
                return a.args[0]
        return self._node("not", (a,), (), BOOL)

    def and_(self, *xs: Expr) -> Expr:
        return self._nary("and", xs, absorbing=False)

    def or_(self, *xs: Expr) -> Expr:
        return self._nary("or", xs, absorbing=True)

    def _nary(self, op: str, xs: Iterable[Expr], absorbing: bool) -> Expr:
        xs = tuple(xs)
        self._check_bool(op, xs)
        if not self.simplify:
            if not xs:
                return self.bool_const(not absorbing)
            if len(xs) == 1:
                return xs[0]
            return self._node(op, xs, (), BOOL)
        out: list[Expr] = []
        seen: set[int] = set()
        for x in xs:
            for y in (x.args if x.op == op else (x,)):
                if y.is_const:
                    if y.value is absorbing:
                        return y
                    continue
                if y.id in seen:
                    continue
                seen.add(y.id)
                out.append(y)
        for y in out:
            if y.op == "not" and y.args[0].id in seen:
                return self.bool_const(absorbing)
        if not out:
            return self.bool_const(not absorbing)
        if len(out) == 1:
            return out[0]
        return self._node(op, tuple(out), (), BOOL)

    def implies(self, a: Expr, b: Expr) -> Expr:
        return self.or_(self.not_(a), b)

    def ite(self, c: Expr, t: Expr, e: Expr) -> Expr:
        self._check_bool("ite", (c,))
        if t.sort != e.sort:
            raise SortError(f"ite: branch sorts differ ({t.sort} vs {e.sort})")
        if self.simplify:
            if c.is_const:
                return t if c.value else e
            if t is e:
                return t
            if c.op == "not":
                c, t, e = c.args[0], e, t
            if t.sort.is_bool:
                if t.is_const and e.is_const:
                    return c if t.value else self.not_(c)
                if t.is_const:
                    return self.or_(c, e) if t.value else self.and_(self.not_(c), e)
                if e.is_const:
                    return self.or_(self.not_(c), t) if e.value else self.and_(c, t)
        return self._node("ite", (c, t, e), (), t.sort)

    # -- arrays ----------------------------------------------------------------------

    def select(self, a: Expr, i: Expr) -> Expr:
        if not a.sort.is_array or not i.sort.is_bv or i.width != a.sort.index_width:
            raise SortError(f"select: bad sorts {a.sort} / {i.sort}")
        if self.simplify:
            base = a
            while base.op == "store":
                j = base.args[1]
                if j is i:
                    return base.args[2]
                if i.is_const and j.is_const:
                    base = base.args[0]
                    continue
                break
            a = base
        return self._node("select", (a, i), (), a.sort.elem)

    def store(self, a: Expr, i: Expr, v: Expr) -> Expr:
        if (
            not a.sort.is_array
            or not i.sort.is_bv
            or i.width != a.sort.index_width
            or v.sort != a.sort.elem
        ):
            raise SortError(f"store: bad sorts {a.sort} / {i.sort} / {v.sort}")
        return self._node("store", (a, i, v), (), a.sort)


_BUILDERS: dict[str, Callable[[ExprContext, tuple, tuple], Expr]] = {
    "add": lambda c, a, p: c.add(*a),
    "sub": lambda c, a, p: c.sub(*a),
    "mul": lambda c, a, p: c.mul(*a),
    "udiv": lambda c, a, p: c.udiv(*a),
    "urem": lambda c, a, p: c.urem(*a),
    "concat": lambda c, a, p: c.concat(*a),
    "extract": lambda c, a, p: c.extract(p[0], p[1], *a),
    "bvnot": lambda c, a, p: c.bvnot(*a),
    "bvand": lambda c, a, p: c.bvand(*a),
    "bvor": lambda c, a, p: c.bvor(*a),
    "bvxor": lambda c, a, p: c.bvxor(*a),
    "shl": lambda c, a, p: c.shl(*a),
    "lshr": lambda c, a, p: c.lshr(*a),
    "shlc": lambda c, a, p: c.shl_const(a[0], p[0]),
    "lshrc": lambda c, a, p: c.lshr_const(a[0], p[0]),
    "eq": lambda c, a, p: c.eq(*a),
    "ult": lambda c, a, p: c.ult(*a),
    "ule": lambda c, a, p: c.ule(*a),
    "not": lambda c, a, p: c.not_(*a),
    "and": lambda c, a, p: c.and_(*a),
    "or": lambda c, a, p: c.or_(*a),
    "ite": lambda c, a, p: c.ite(*a),
    "select": lambda c, a, p: c.select(*a),
    "store": lambda c, a, p: c.store(*a),
}

OPERATORS = frozenset(_BUILDERS) | {"const", "var"}


# --------------------------------------------------------------------------
# traversal


def postorder(roots: Iterable[Expr]) -> list[Expr]:
    """All nodes reachable from ``roots``, children before parents, each once."""
    out: list[Expr] = []
    seen: set[int] = set()
    for root in roots:
        if root.id in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                out.append(node)
                continue
            if node.id in seen:
                continue
            seen.add(node.id)
            stack.append((node, True))
            for a in reversed(node.args):
                if a.id not in seen:
                    stack.append((a, False))
    return out


def free_vars(*roots: Expr) -> list[Expr]:
    """Variables reachable from the roots, in first-visit order."""
    return [n for n in postorder(roots) if n.op == "var"]


def dag_size(*roots: Expr) -> int:
    return len(postorder(roots))


# --------------------------------------------------------------------------
# concrete semantics


def _udiv(a: int, b: int, w: int) -> int:
    return _mask(w) if b == 0 else a // b


def _urem(a: int, b: int) -> int:
    return a if b == 0 else a % b


def _shl(a: int, s: int, w: int) -> int:
    return 0 if s >= w else (a << s) & _mask(w)


def _lshr(a: int, s: int, w: int) -> int:
    return 0 if s >= w else a >> s


def apply_op(op: str, sort: Sort, params: tuple, vals: list) -> Any:
    """Concrete semantics of one operator (unsigned, SMT-LIB conventions)."""
    w = sort.width
    if op == "add":
        return (vals[0] + vals[1]) & _mask(w)
    if op == "sub":
        return (vals[0] - vals[1]) & _mask(w)
    if op == "mul":
        return (vals[0] * vals[1]) & _mask(w)
    if op == "udiv":
        return _udiv(vals[0], vals[1], w)
    if op == "urem":
        return _urem(vals[0], vals[1])
    if op == "concat":
        raise AssertionError("concat handled by caller")
    if op == "extract":
        hi, lo = params
        return (vals[0] >> lo) & _mask(hi - lo + 1)
    if op == "bvnot":
        return ~vals[0] & _mask(w)
    if op == "bvand":
        return vals[0] & vals[1]
    if op == "bvor":
        return vals[0] | vals[1]
    if op == "bvxor":
        return vals[0] ^ vals[1]
    if op == "shl":
        return _shl(vals[0], vals[1], w)
    if op == "lshr":
        return _lshr(vals[0], vals[1], w)
    if op == "shlc":
        return _shl(vals[0], params[0], w)
    if op == "lshrc":
        return _lshr(vals[0], params[0], w)
    if op == "eq":
        return vals[0] == vals[1]
    if op == "ult":
        return vals[0] < vals[1]
    if op == "ule":
        return vals[0] <= vals[1]
    if op == "not":
        return not vals[0]
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    if op == "ite":
        return vals[1] if vals[0] else vals[2]
    if op == "select":
        return vals[0].read(vals[1])
    if op == "store":
        return vals[0].write(vals[1], vals[2])
    raise ValueError(f"no concrete semantics for {op!r}")


def eval_expr(e: Expr, env: Mapping[str, Any], *, memo: dict | None = None) -> Any:
    """Evaluate ``e`` with variables looked up by name in ``env``.

    Bit-vectors evaluate to non-negative ints, booleans to bool, arrays to
    :class:`ArrayValue`.  ``memo`` may be shared across calls with one env.
    """
    memo = {} if memo is None else memo
    for n in postorder([e]):
        if n.id in memo:
            continue
        if n.op == "const":
            memo[n.id] = n.value
        elif n.op == "var":
            try:
                v = env[n.name]
            except KeyError:
                raise EvalError(f"variable {n.name!r} missing from environment") from None
            if n.sort.is_bv:
                v = int(v) & _mask(n.width)
            elif n.sort.is_bool:
                v = bool(v)
            memo[n.id] = v
        elif n.op == "concat":
            acc = 0
            for a in n.args:
                acc = (acc << a.width) | memo[a.id]
            memo[n.id] = acc
        else:
            memo[n.id] = apply_op(n.op, n.sort, n.params, [memo[a.id] for a in n.args])
    return memo[e.id]


# --------------------------------------------------------------------------
# side constraints


@dataclass
class Witness:
    """A fresh variable ``var`` with ``2^var <= divisor < 2^(var+1)`` when defined."""

    var: Expr
    divisor: Expr

    def value_under(self, env: Mapping[str, Any]) -> int:
        d = eval_expr(self.divisor, env)
        return max(d.bit_length() - 1, 0)


class SideConstraints:
    """Append-only list of boolean constraints plus fresh-name allocation."""

    def __init__(self, prefix: str = "w"):
        self.constraints: list[Expr] = []
        self.witnesses: list[Witness] = []
        self.fresh_counter = 0
        self.prefix = prefix

    def fresh_name(self, stem: str) -> str:
        name = f"{self.prefix}!{stem}{self.fresh_counter}"
        self.fresh_counter += 1
        return name

    def add(self, c: Expr) -> None:
        if not c.is_true():
            self.constraints.append(c)

    def complete_env(self, env: dict) -> dict:
        """Fill in witness values implied by ``env`` (in creation order)."""
        for w in self.witnesses:
            if w.var.name not in env:
                env[w.var.name] = w.value_under(env)
        return env


# --------------------------------------------------------------------------
# printing


def to_text(e: Expr, limit: int = 400) -> str:
    """Compact prefix rendering, shared subterms repeated (debug only)."""
    memo: dict[int, str] = {}
    for n in postorder([e]):
        if n.op == "const":
            s = ("true" if n.value else "false") if n.sort.is_bool else f"{n.value}:{n.width}"
        elif n.op == "var":
            s = n.name
        else:
            head = n.op if not n.params else f"{n.op}{list(n.params)}"
            s = f"({head} {' '.join(memo[a.id] for a in n.args)})"
        if len(s) > limit:
            s = s[: limit - 3] + "..."
        memo[n.id] = s
    return memo[e.id]
