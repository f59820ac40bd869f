"""Symbolic simulation with invalid-bit encoded atoms.

Every value is a :class:`SymAtom` ``(val, inv)``: when ``inv`` holds the
value is X and ``val`` is a don't-care payload.  Values are computed per
requested slice ``[q:p]`` of a design expression node: ``val`` applies the
concrete operator to operand payloads (so it is always the result of one
concretization), while ``inv`` over-approximates "some bit of the slice may
be X" with a per-operator template.  Operators without a dedicated template
get a coarse one that still absorbs known zeros.

Shift templates come in two modes.  ``strict-sound`` (default) treats an X
shift amount as X unless the shifted bits are all known zero.  The
``paper-faithful`` mode keeps the published conjunction for variable shifts;
it reports a valid result for a valid nonzero operand shifted by an X
amount, which the exhaustive checker flags as unsound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .atomize import AtomMap
from .expr import Expr, ExprContext, SideConstraints, Witness
from .ir.model import Design

SHIFT_MODES = ("strict-sound", "paper-faithful")


@dataclass(frozen=True)
class SymAtom:
    val: Expr
    inv: Expr

    @property
    def width(self) -> int:
        return 1 if self.val.sort.is_bool else self.val.width


@dataclass(frozen=True, eq=False)
class SymArray:
    """Invalid-bit view of an array value.

    ``kind`` is ``base`` (initial contents, wholly valid or wholly X),
    ``update`` (``prev`` with ``elem`` written at ``index``) or ``read`` (row
    ``index`` of the outer array ``prev``, for arrays of arrays).  ``val`` is
    the array-sorted expression built from the val components.
    """

    kind: str
    val: Expr
    initialized: bool = True
    prev: Optional["SymArray"] = None
    index: Optional[SymAtom] = None
    elem: object = None  # SymAtom, or SymArray for arrays of arrays


AtomKey = tuple  # (word, hi, lo)


@dataclass
class SymState:
    time: int
    atoms: dict  # AtomKey -> SymAtom
    arrays: dict  # name -> SymArray
    side: SideConstraints
    settled: bool = False
    frame: Optional["FrameEval"] = field(default=None, repr=False, compare=False)

    def word(self, ctx: ExprContext, amap: AtomMap, name: str, hi: int, lo: int) -> SymAtom:
        """Slice ``name[hi:lo]`` assembled from this state's atoms."""
        return _assemble(ctx, [(h, l, self.atoms[(name, h, l)]) for h, l in amap[name].atoms], hi, lo)


def _assemble(ctx: ExprContext, parts, q: int, p: int) -> SymAtom:
    """Combine atom values (hi, lo, SymAtom), MSB first, clipped to [q:p]."""
    vals, invs = [], []
    for h, l, s in parts:
        if l > q or h < p:
            continue
        top, bot = min(q, h), max(p, l)
        vals.append(ctx.extract(top - l, bot - l, s.val))
        invs.append(s.inv)
    return SymAtom(ctx.concat(*vals), ctx.or_(*invs))


def lub(ctx: ExprContext, a: SymAtom, b: SymAtom) -> tuple[SymAtom, Expr]:
    """Join of circuit value ``a`` and antecedent value ``b``.

    Returns ``(c, top)``: ``top`` is the condition under which the join is
    over-constrained (both defined and different); ``c`` is the join when it
    is not.
    """
    top = ctx.and_(ctx.not_(a.inv), ctx.not_(b.inv), ctx.ne(a.val, b.val))
    inv = ctx.and_(a.inv, b.inv)
    if b.inv.is_false():
        val = b.val
    elif a.inv.is_false():
        val = a.val
    else:
        val = ctx.ite(a.inv, b.val, a.val)
    return SymAtom(val, inv), top


class Simulator:
    """Per-design symbolic simulation engine (single-threaded).

    ``track_inv=False`` gives plain word-level simulation with every inv
    constant false and no side constraints, which is what bounded model
    checking unrolls.
    """

    def __init__(
        self,
        design: Design,
        amap: AtomMap,
        ctx: ExprContext | None = None,
        shift_mode: str = "strict-sound",
        track_inv: bool = True,
        side: SideConstraints | None = None,
    ):
        if shift_mode not in SHIFT_MODES:
            raise ValueError(f"unknown shift mode {shift_mode!r}; choose from {SHIFT_MODES}")
        self.design = design
        self.amap = amap
        self.ctx = ctx or ExprContext()
        self.shift_mode = shift_mode
        self.track_inv = track_inv
        self.side = side or SideConstraints()
        self.trans = design.transition()
        self._witness: dict[int, Expr] = {}
        self._nonzero: set = set()
        self.divisors: list[SymAtom] = []  # for the optional division-by-zero query
        # fresh variables for registers without init (bmc); None -> X with payload 0
        self.free_init: Optional[Callable[[str, int, int], Expr]] = None

    # -- states ------------------------------------------------------------------

    def x_atom(self, width: int) -> SymAtom:
        return SymAtom(self.ctx.zero(width), self.ctx.true)

    def initial_state(self) -> SymState:
        """All-X state, except registers with an init value."""
        ctx = self.ctx
        atoms = {}
        for w in self.design.words.values():
            for hi, lo in self.amap[w.name].atoms:
                if w.kind == "reg" and w.init is not None:
                    atoms[(w.name, hi, lo)] = SymAtom(ctx.bv(w.init >> lo, hi - lo + 1), ctx.false)
                elif w.kind == "reg" and self.free_init is not None:
                    atoms[(w.name, hi, lo)] = SymAtom(self.free_init(w.name, hi, lo), ctx.false)
                else:
                    atoms[(w.name, hi, lo)] = self.x_atom(hi - lo + 1)
        arrays = {}
        for a in self.design.arrays.values():
            val = ctx.var(f"{a.name}@init", a.sort)
            arrays[a.name] = SymArray("base", val, a.initialized or not self.track_inv)
        return SymState(0, atoms, arrays, self.side)

    def settle(self, state: SymState, drive: Callable[[AtomKey, SymAtom], SymAtom] | None = None) -> SymState:
        """Evaluate combinational assignments in order.

        ``drive(key, circuit_value)`` may replace each freshly computed wire
        atom (antecedent lub) before anything downstream reads it.
        """
        fe = FrameEval(self, dict(state.atoms), dict(state.arrays))
        for ca in self.trans.comb:
            for hi, lo in self.amap[ca.word].atoms:
                if lo < ca.lo or hi > ca.hi:
                    continue
                v = fe.slice(ca.rhs, hi - ca.lo, lo - ca.lo)
                key = (ca.word, hi, lo)
                fe.atoms[key] = drive(key, v) if drive is not None else v
        return SymState(state.time, fe.atoms, fe.arrays, state.side, True, fe)

    def latch(self, state: SymState) -> SymState:
        """Next-state registers and arrays; inputs and wires start X."""
        if not state.settled:
            state = self.settle(state)
        fe = state.frame
        atoms = {}
        for w in self.design.words.values():
            for hi, lo in self.amap[w.name].atoms:
                if w.kind == "reg":
                    atoms[(w.name, hi, lo)] = fe.slice(self.trans.reg_next[w.name], hi, lo)
                else:
                    atoms[(w.name, hi, lo)] = self.x_atom(hi - lo + 1)
        arrays = {name: fe.array(nxt) for name, nxt in self.trans.array_next.items()}
        return SymState(state.time + 1, atoms, arrays, state.side)

    def step(self, state: SymState) -> SymState:
        return self.latch(state)

    # -- division witnesses ------------------------------------------------------------

    def witness(self, divisor: SymAtom) -> Expr:
        """Fresh ``i`` with ``2^i <= val(b) < 2^(i+1)`` whenever ``b`` is valid."""
        key = divisor.val.id
        i = self._witness.get(key)
        if i is not None:
            return i
        ctx = self.ctx
        m = divisor.width
        i = ctx.var(self.side.fresh_name("i"), m)
        self._witness[key] = i
        valid = ctx.not_(divisor.inv)
        bracket = ctx.and_(ctx.eq(ctx.lshr(divisor.val, i), ctx.bv(1, m)), ctx.ult(i, ctx.bv(m, m)))
        self.side.add(ctx.implies(valid, bracket))
        self.side.witnesses.append(Witness(i, divisor.val))
        return i

    def assume_nonzero(self, divisor: SymAtom) -> None:
        """Division by zero is checked separately; simulation assumes it away."""
        key = (divisor.val.id, divisor.inv.id)
        if key in self._nonzero:
            return
        self._nonzero.add(key)
        ctx = self.ctx
        c = ctx.implies(ctx.not_(divisor.inv), ctx.ne(divisor.val, ctx.zero(divisor.width)))
        self.side.add(c)
        self.divisors.append(divisor)


# ----------------------------------------------------------------------------
# per-frame evaluation


def _bits_for(m: int) -> int:
    """Width holding every index sum that the division template forms."""
    return max(m, (2 * m).bit_length()) + 1


class FrameEval:
    """Evaluates design expression nodes at slices, memoized per frame."""

    def __init__(self, sim: Simulator, atoms: dict, arrays: dict):
        self.sim = sim
        self.ctx = sim.ctx
        self.atoms = atoms
        self.arrays = arrays
        self.memo: dict[tuple, SymAtom] = {}
        self.amemo: dict[int, SymArray] = {}
        self.track = sim.track_inv

    # -- helpers -----------------------------------------------------------------

    def full(self, n: Expr) -> SymAtom:
        return self.slice(n, _width(n) - 1, 0)

    def nonzero(self, v: Expr) -> Expr:
        return v if v.sort.is_bool else self.ctx.ne(v, self.ctx.zero(v.width))

    def neg(self, v: Expr) -> Expr:
        return self.ctx.not_(v) if v.sort.is_bool else self.ctx.bvnot(v)

    def inv_or(self, *xs: Expr) -> Expr:
        return self.ctx.or_(*xs) if self.track else self.ctx.false

    # bitwise building blocks: everything else composes from these two

    def t_not(self, a: SymAtom) -> SymAtom:
        return SymAtom(self.neg(a.val), a.inv)

    def t_and(self, a: SymAtom, b: SymAtom) -> SymAtom:
        c = self.ctx
        val = c.and_(a.val, b.val) if a.val.sort.is_bool else c.bvand(a.val, b.val)
        if not self.track:
            return SymAtom(val, c.false)
        inv = c.and_(
            c.or_(a.inv, b.inv),
            c.or_(a.inv, self.nonzero(a.val)),
            c.or_(b.inv, self.nonzero(b.val)),
        )
        return SymAtom(val, inv)

    def t_or(self, a: SymAtom, b: SymAtom) -> SymAtom:
        r = self.t_not(self.t_and(self.t_not(a), self.t_not(b)))
        val = self.ctx.or_(a.val, b.val) if a.val.sort.is_bool else self.ctx.bvor(a.val, b.val)
        return SymAtom(val, r.inv)

    def t_xor(self, a: SymAtom, b: SymAtom) -> SymAtom:
        left = self.t_and(a, self.t_not(b))
        right = self.t_and(self.t_not(a), b)
        r = self.t_or(left, right)
        c = self.ctx
        val = c.not_(c.eq(a.val, b.val)) if a.val.sort.is_bool else c.bvxor(a.val, b.val)
        return SymAtom(val, r.inv)

    # -- words -------------------------------------------------------------------

    def word(self, name: str, q: int, p: int) -> SymAtom:
        parts = [(h, l, self.atoms[(name, h, l)]) for h, l in self.sim.amap[name].atoms if l <= q and h >= p]
        return _assemble(self.ctx, parts, q, p)

    def pieces(self, n: Expr, q: int, p: int) -> list[tuple[int, int, Expr]]:
        """Partition of ``n[q:p]`` into (hi, lo, inv) ranges with uniform X-ness."""
        if n.op == "var" and n.sort.is_bv:
            out = []
            for h, l in self.sim.amap[n.name].atoms:
                if l <= q and h >= p:
                    out.append((min(h, q), max(l, p), self.atoms[(n.name, h, l)].inv))
            return out
        if n.op == "extract":
            lo = n.params[1]
            return [(h - lo, l - lo, iv) for h, l, iv in self.pieces(n.args[0], q + lo, p + lo)]
        if n.op == "concat":
            out = []
            pos = n.width
            for part in n.args:
                top, bot = pos - 1, pos - part.width
                pos = bot
                if bot > q or top < p:
                    continue
                sub = self.pieces(part, min(q, top) - bot, max(p, bot) - bot)
                out.extend((h + bot, l + bot, iv) for h, l, iv in sub)
            return out
        return [(q, p, self.slice(n, q, p).inv)]

    def inv_range(self, n: Expr, x: Expr, y: Expr, ew: int) -> Expr:
        """inv of ``n[x:y]`` for symbolic bounds (``ew``-bit); false if empty."""
        c = self.ctx
        terms = []
        for h, l, iv in self.pieces(n, _width(n) - 1, 0):
            overlap = c.and_(c.ule(c.bv(l, ew), x), c.ule(y, c.bv(h, ew)))
            terms.append(c.and_(overlap, iv))
        return c.and_(c.ule(y, x), c.or_(*terms))

    # -- the evaluator -----------------------------------------------------------

    def slice(self, n: Expr, q: int, p: int) -> SymAtom:
        key = (n.id, q, p)
        r = self.memo.get(key)
        if r is None:
            r = self._slice(n, q, p)
            self.memo[key] = r
        return r

    def _slice(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        op = n.op
        if op == "const":
            if n.sort.is_bool:
                return SymAtom(c.bool_const(n.value), c.false)
            return SymAtom(c.bv(n.value >> p, q - p + 1), c.false)
        if op == "var":
            if n.sort.is_bool:
                raise ValueError(f"boolean variable {n.name!r} in design logic")
            return self.word(n.name, q, p)
        if op == "extract":
            lo = n.params[1]
            return self.slice(n.args[0], q + lo, p + lo)
        if op == "concat":
            parts = []
            pos = n.width
            for part in n.args:
                top, bot = pos - 1, pos - part.width
                pos = bot
                if bot > q or top < p:
                    continue
                parts.append((top, bot, self.slice(part, min(q, top) - bot, max(p, bot) - bot)))
            vals = [s.val for _, _, s in parts]
            return SymAtom(c.concat(*vals), self.inv_or(*(s.inv for _, _, s in parts)))
        if op in ("bvnot", "not"):
            return self.t_not(self.slice(n.args[0], q, p))
        if op in ("bvand", "and"):
            return self._fold(self.t_and, n, q, p)
        if op in ("bvor", "or"):
            return self._fold(self.t_or, n, q, p)
        if op == "bvxor":
            return self.t_xor(self.slice(n.args[0], q, p), self.slice(n.args[1], q, p))
        if op in ("add", "sub"):
            return self._addsub(n, q, p, op == "sub")
        if op == "mul":
            return self._mul(n, q, p)
        if op in ("udiv", "urem"):
            return self._div(n, q, p)
        if op in ("shlc", "lshrc"):
            return self._shift_const(n, q, p)
        if op in ("shl", "lshr"):
            return self._shift_var(n, q, p)
        if op in ("eq", "ult", "ule"):
            a, b = self.full(n.args[0]), self.full(n.args[1])
            val = c.mk(op, a.val, b.val)
            return SymAtom(val, self.inv_or(a.inv, b.inv))
        if op == "ite":
            return self._ite(n, q, p)
        if op == "select":
            return self._select(n, q, p)
        raise ValueError(f"no template for operator {op!r}")

    def _fold(self, tpl, n: Expr, q: int, p: int) -> SymAtom:
        acc = self.slice(n.args[0], q, p)
        for a in n.args[1:]:
            acc = tpl(acc, self.slice(a, q, p))
        return acc

    def _addsub(self, n: Expr, q: int, p: int, sub: bool) -> SymAtom:
        c = self.ctx
        a, b = n.args
        lo_a, lo_b = self.slice(a, q, 0), self.slice(b, q, 0)
        full = c.sub(lo_a.val, lo_b.val) if sub else c.add(lo_a.val, lo_b.val)
        val = c.extract(q - p, 0, c.lshr_const(full, p)) if p else full
        if not self.track:
            return SymAtom(val, c.false)
        sa, sb = self.slice(a, q, p), self.slice(b, q, p)
        return SymAtom(val, c.or_(sa.inv, sb.inv, self.carry_inv(a, b, p, sub)))

    def carry_inv(self, a: Expr, b: Expr, r: int, sub: bool) -> Expr:
        """inv of the carry into bit ``r`` of ``a + b`` (or ``a + ~b + 1``).

        A valid addend whose low ``r`` bits are the absorbing pattern fixes
        the carry: zero with carry-in 0, all ones with carry-in 1.
        """
        c = self.ctx
        if r == 0:
            return c.false
        x = self.slice(a, r - 1, 0)
        y = self.slice(b, r - 1, 0)
        yv = c.bvnot(y.val) if sub else y.val
        absorb = c.ones(r) if sub else c.zero(r)
        return c.and_(
            c.or_(x.inv, y.inv),
            c.or_(x.inv, c.ne(x.val, absorb)),
            c.or_(y.inv, c.ne(yv, absorb)),
        )

    def _mul(self, n: Expr, q: int, p: int) -> SymAtom:
        # the low q+1 product bits depend only on the low q+1 operand bits
        c = self.ctx
        a, b = self.slice(n.args[0], q, 0), self.slice(n.args[1], q, 0)
        prod = c.mul(a.val, b.val)
        val = c.extract(q - p, 0, c.lshr_const(prod, p)) if p else prod
        if not self.track:
            return SymAtom(val, c.false)
        inv = c.and_(
            c.or_(a.inv, b.inv),
            c.or_(a.inv, self.nonzero(a.val)),
            c.or_(b.inv, self.nonzero(b.val)),
        )
        return SymAtom(val, inv)

    def _div(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        a_node, b_node = n.args
        m = n.width
        A, B = self.full(a_node), self.full(b_node)
        res = c.udiv(A.val, B.val) if n.op == "udiv" else c.urem(A.val, B.val)
        val = c.extract(q, p, res)
        if not self.track:
            return SymAtom(val, c.false)
        self.sim.assume_nonzero(B)
        if A.inv.is_false() and B.inv.is_false():
            return SymAtom(val, c.false)
        ew = _bits_for(m)

        def k(v: int) -> Expr:
            return c.bv(v, ew)

        def mn(x: Expr, y: Expr) -> Expr:
            return c.ite(c.ult(x, y), x, y)

        if B.inv.is_true():
            i = ie = None
            is_pow = c.false
        else:
            i = self.sim.witness(B)
            ie = c.zext(i, ew)
            is_pow = c.eq(B.val, c.pow2(i))
        if n.op == "udiv":
            temp1 = c.or_(A.inv, self.nonzero(self.slice(a_node, m - 1, p).val), c.eq(B.val, c.zero(m)))
            if i is None:
                inv = temp1
            else:
                lo = c.add(ie, k(p))
                temp3 = c.and_(c.ule(lo, k(m - 1)), self.inv_range(a_node, mn(c.add(ie, k(q)), k(m - 1)), lo, ew))
                temp2 = c.ite(is_pow, temp3, c.or_(c.ult(ie, k(p)), self.slice(a_node, m - 1, p).inv))
                inv = c.ite(B.inv, temp1, temp2)
        else:
            if i is None:
                inv = c.true
            else:
                low = self.inv_range(a_node, mn(k(q), c.sub(ie, k(1))), k(p), ew)
                inv = c.or_(B.inv, c.ite(is_pow, c.and_(c.ult(k(p), ie), low), c.ule(k(p), ie)))
        return SymAtom(val, c.and_(c.or_(A.inv, B.inv), inv))

    def _shift_const(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        a = n.args[0]
        k = n.params[0]
        m = n.width
        if n.op == "shlc":
            if k >= m or q < k:
                return SymAtom(c.zero(q - p + 1), c.false)
            if p >= k:
                return self.slice(a, q - k, p - k)
            s = self.slice(a, q - k, 0)
            return SymAtom(c.concat(s.val, c.zero(k - p)), s.inv)
        if k >= m or p + k > m - 1:
            return SymAtom(c.zero(q - p + 1), c.false)
        if q + k <= m - 1:
            return self.slice(a, q + k, p + k)
        s = self.slice(a, m - 1, p + k)
        return SymAtom(c.concat(c.zero(q + k - (m - 1)), s.val), s.inv)

    def _shift_var(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        a_node, d_node = n.args
        m = n.width
        A, D = self.full(a_node), self.full(d_node)
        res = c.shl(A.val, D.val) if n.op == "shl" else c.lshr(A.val, D.val)
        val = c.extract(q, p, res)
        if not self.track:
            return SymAtom(val, c.false)
        if n.op == "shl":
            src = self.slice(a_node, q, 0)
            reach = c.ule(D.val, c.bv(q, m))
        else:
            src = self.slice(a_node, m - 1, p)
            reach = c.ule(D.val, c.bv(m - 1 - p, m))
        if self.sim.shift_mode == "paper-faithful":
            inv = c.and_(src.inv, c.or_(D.inv, reach))
        else:
            inv = c.ite(D.inv, c.or_(src.inv, self.nonzero(src.val)), c.and_(src.inv, reach))
        return SymAtom(val, inv)

    def _ite(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        sel = self.slice(n.args[0], 0, 0)
        t, e = self.slice(n.args[1], q, p), self.slice(n.args[2], q, p)
        val = c.ite(sel.val, t.val, e.val)
        if not self.track:
            return SymAtom(val, c.false)
        both = c.or_(t.inv, e.inv, c.ne(t.val, e.val))
        return SymAtom(val, c.ite(sel.inv, both, c.ite(sel.val, t.inv, e.inv)))

    # -- arrays ------------------------------------------------------------------

    def array(self, n: Expr) -> SymArray:
        r = self.amemo.get(n.id)
        if r is not None:
            return r
        c = self.ctx
        if n.op == "var":
            r = self.arrays[n.name]
        elif n.op == "store":
            prev = self.array(n.args[0])
            idx = self.full(n.args[1])
            e = n.args[2]
            elem = self.array(e) if e.sort.is_array else self.full(e)
            r = SymArray("update", c.store(prev.val, idx.val, elem.val), prev=prev, index=idx, elem=elem)
        elif n.op == "select":
            outer = self.array(n.args[0])
            idx = self.full(n.args[1])
            r = SymArray("read", c.select(outer.val, idx.val), prev=outer, index=idx)
        elif n.op == "ite":
            raise ValueError("conditional array values are desugared to element writes")
        else:
            raise ValueError(f"unsupported array expression {n.op!r}")
        self.amemo[n.id] = r
        return r

    def _select(self, n: Expr, q: int, p: int) -> SymAtom:
        c = self.ctx
        arr = self.array(n.args[0])
        idx = self.full(n.args[1])
        whole = c.select(arr.val, idx.val)
        val = c.extract(q, p, whole) if whole.sort.is_bv else whole
        if not self.track:
            return SymAtom(val, c.false)
        return SymAtom(val, self.read_inv(arr, (idx,)))

    def read_inv(self, arr: SymArray, path: tuple) -> Expr:
        """inv of ``arr[path[0]][path[1]]...`` by recursion over the update chain."""
        c = self.ctx
        if arr.kind == "read":
            return self.read_inv(arr.prev, (arr.index,) + path)
        if arr.kind == "base":
            # a valid base still reads X through an X index
            return c.or_(*(x.inv for x in path)) if arr.initialized else c.true
        i, j = path[0], arr.index
        if isinstance(arr.elem, SymArray):
            hit = self.read_inv(arr.elem, path[1:])
        else:
            hit = arr.elem.inv
        miss = self.read_inv(arr.prev, path)
        return c.or_(i.inv, j.inv, c.ite(c.eq(i.val, j.val), hit, miss))


def _width(n: Expr) -> int:
    return 1 if n.sort.is_bool else n.width
