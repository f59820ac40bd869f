"""Trajectory specs, the defining-trajectory run, BMC unrolling and checking.

A spec is a list of antecedent and consequent tuples ``(g, a, vexpr, start,
end)``: for every frame ``t`` in ``[start, end)`` the word slice ``a`` is
``vexpr`` whenever the guard ``g`` holds.  Guards and values range over the
spec's guard variables only.

:func:`run_ste` builds the defining trajectory frame by frame and collects
the verification obligation; :func:`run_bmc` unrolls the same design with no
invalid bits; :func:`check` discharges an obligation with the external
solver.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import solver as smt
from .atomize import AtomMap, atomize_design
from .expr import Expr, ExprContext, SideConstraints, default_value, eval_expr, free_vars
from .ir import ast as A
from .ir.elaborate import ElabError, ExprBuilder, Symbol
from .ir.model import Design
from .ir.parser import parse_spec
from .oracle import simulate_concrete
from .symsim import Simulator, SymAtom, SymState, lub

VERDICT_EXIT = {"pass": 0, "fail": 1, "antfail": 2, "unknown": 3}


class SpecError(ElabError):
    pass


# ----------------------------------------------------------------------------
# specs


@dataclass
class TrajectoryTuple:
    kind: str  # ant | cons
    guard: Expr
    word: str
    hi: int
    lo: int
    vexpr: Expr
    start: int
    end: int
    index: int = 0
    loc: A.Loc = A.NOLOC

    @property
    def ref(self) -> str:
        return f"{self.word}[{self.hi}:{self.lo}]"

    def frames(self) -> range:
        return range(self.start, self.end)


@dataclass
class Spec:
    ctx: ExprContext
    antecedents: list
    consequents: list
    constr: Expr
    mode: str = "report"  # report | assume
    guard_vars: dict = field(default_factory=dict)  # name -> Var

    def accesses(self) -> list[tuple[str, int, int]]:
        return [(t.word, t.hi, t.lo) for t in self.antecedents + self.consequents]

    @property
    def depth(self) -> int:
        return max((t.end for t in self.antecedents + self.consequents), default=1)

    def all_guards_true(self) -> bool:
        return all(t.guard.is_true() for t in self.antecedents + self.consequents)


def elaborate_spec(
    src: A.SpecSource | str,
    design: Design,
    ctx: ExprContext | None = None,
    overrides: dict | None = None,
    source: str = "",
) -> Spec:
    """Resolve a parsed spec against a design.

    Design parameters are visible; design words are not (tuples name them as
    targets only).
    """
    if isinstance(src, str):
        src = parse_spec(src, source)
    ctx = ctx or ExprContext()
    overrides = dict(overrides or {})
    symbols: dict[str, Symbol] = {k: Symbol("param", value=v) for k, v in design.params.items()}

    def lookup(name: str) -> Symbol | None:
        if name in design.words or name in design.arrays:
            return Symbol("design")
        return symbols.get(name)

    b = ExprBuilder(ctx, lookup, source)

    def check_refs(n) -> None:
        if isinstance(n, A.Name):
            s = lookup(n.ident)
            if s is not None and s.kind == "design":
                raise SpecError(f"spec expressions may only use guard variables, not design word {n.ident!r}", n.loc, source)
            return
        for f in getattr(n, "__dataclass_fields__", {}):
            v = getattr(n, f)
            if isinstance(v, (list, tuple)):
                for x in v:
                    check_refs(x)
            elif hasattr(v, "__dataclass_fields__") and not isinstance(v, A.Loc):
                check_refs(v)

    ants, cons, constrs = [], [], []
    mode = "report"
    guard_vars: dict[str, Expr] = {}
    for item in src.items:
        if isinstance(item, A.Param):
            if item.name in symbols:
                raise SpecError(f"duplicate declaration of {item.name!r}", item.loc, source)
            value = overrides.pop(item.name) if item.name in overrides else b.const(item.value)
            symbols[item.name] = Symbol("param", value=value)
        elif isinstance(item, A.VarDecl):
            if item.name in symbols or lookup(item.name) is not None:
                raise SpecError(f"duplicate declaration of {item.name!r}", item.loc, source)
            w = b.positive(item.width, "variable width")
            symbols[item.name] = Symbol("var", width=w)
            guard_vars[item.name] = ctx.var(item.name, w)
        elif isinstance(item, A.ConstrDecl):
            check_refs(item.expr)
            constrs.append(b.cond(item.expr))
        elif isinstance(item, A.ModeDecl):
            mode = item.mode
        elif isinstance(item, A.TupleDecl):
            t = _tuple(item, design, b, check_refs, source)
            (ants if t.kind == "ant" else cons).append(t)
    if overrides:
        raise SpecError(f"unknown parameter(s): {', '.join(sorted(overrides))}", None, source)
    for k, t in enumerate(ants):
        t.index = k
    for k, t in enumerate(cons):
        t.index = k
    return Spec(ctx, ants, cons, ctx.and_(*constrs), mode, guard_vars)


def _tuple(item: A.TupleDecl, design: Design, b: ExprBuilder, check_refs, source: str) -> TrajectoryTuple:
    target = item.target
    base = target.base if isinstance(target, A.Slice) else target
    if not isinstance(base, A.Name) or base.ident not in design.words:
        raise SpecError(f"tuple target must be a design word, got {getattr(base, 'ident', '?')!r}", item.loc, source)
    w = design.words[base.ident]
    if isinstance(target, A.Slice):
        hi, lo = b.const(target.hi), b.const(target.lo)
    else:
        hi, lo = w.width - 1, 0
    if not 0 <= lo <= hi < w.width:
        raise SpecError(f"slice [{hi}:{lo}] out of range for {w.name!r} ({w.width} bits)", item.loc, source)
    check_refs(item.guard)
    check_refs(item.value)
    start, end = b.const(item.start), b.const(item.end)
    if start < 0 or end < start + 1:
        raise SpecError(f"bad time interval [{start}, {end}): need 0 <= start and end >= start + 1", item.loc, source)
    return TrajectoryTuple(
        item.kind, b.cond(item.guard), w.name, hi, lo, b.value(item.value, hi - lo + 1), start, end, loc=item.loc
    )


# ----------------------------------------------------------------------------
# obligations


@dataclass
class AntFailCond:
    word: str
    hi: int
    lo: int
    frame: int
    cond: Expr
    tuples: tuple  # antecedent indices involved
    against_circuit: bool = True

    def describe(self) -> str:
        who = "circuit" if self.against_circuit else "another antecedent"
        tup = ",".join(f"ant#{i}" for i in self.tuples)
        return f"{self.word}[{self.hi}:{self.lo}] @ {self.frame}: {tup} conflicts with {who}"


@dataclass
class Check:
    tuple_index: int
    word: str
    hi: int
    lo: int
    frame: int
    ok: Expr
    guard: Expr
    vexpr: Expr
    value: SymAtom

    def describe(self) -> str:
        return f"cons#{self.tuple_index} {self.word}[{self.hi}:{self.lo}] @ {self.frame}"


@dataclass
class Obligation:
    kind: str  # ste | bmc
    spec: Spec
    frames: int
    constr: Expr
    ant_fail: list
    no_ant_fail: Expr
    ok: Expr
    side: list
    assumptions: list
    checks: list
    witnesses: list = field(default_factory=list)
    fresh_inputs: list = field(default_factory=list)
    divisors: list = field(default_factory=list)
    input_values: list = field(default_factory=list)  # per frame: {(word, hi, lo): SymAtom}
    reg_init: dict = field(default_factory=dict)  # {(reg, hi, lo): SymAtom} at frame 0
    overrides: list = field(default_factory=list)  # (frame, word, hi, lo, guard, value) internal drives
    sim_time: float = 0.0

    def antfail_assertions(self) -> list[Expr]:
        c = self.spec.ctx
        return [self.constr, *self.side, c.or_(*(a.cond for a in self.ant_fail))]

    def negok_assertions(self) -> list[Expr]:
        c = self.spec.ctx
        not_ok = c.or_(*(c.not_(k.ok) for k in self.checks))
        return [self.constr, *self.side, *self.assumptions, self.no_ant_fail, not_ok]

    def emit(self, query: str) -> smt.SmtScript:
        """Script for ``query`` in {"antfail", "negok"}."""
        if query == "antfail":
            return smt.emit_script(self.antfail_assertions(), [f"{self.kind} antecedent-failure query"])
        if query == "negok":
            return smt.emit_script(self.negok_assertions(), [f"{self.kind} consequent query"], self.fresh_inputs)
        raise ValueError(f"unknown query {query!r}")


def _atom_slices(amap: AtomMap, word: str, hi: int, lo: int) -> list[tuple[int, int]]:
    atoms = amap[word].atoms_in(hi, lo)
    if not amap[word].aligned(hi, lo):
        raise SpecError(f"{word}[{hi}:{lo}] is not atom-aligned; atomize with the spec")
    return atoms


def _drive(ctx: ExprContext, t: TrajectoryTuple, h: int, l: int) -> SymAtom:
    return SymAtom(ctx.extract(h - t.lo, l - t.lo, t.vexpr), ctx.not_(t.guard))


def _schedule(spec: Spec, amap: AtomMap, frames: int) -> dict:
    """frame -> {(word, h, l): [(tuple, drive atom)]} for antecedents."""
    out: dict[int, dict] = {}
    for t in spec.antecedents:
        if t.end > frames:
            raise SpecError(f"antecedent ant#{t.index} ends at {t.end}, beyond {frames} frames")
        for h, l in _atom_slices(amap, t.word, t.hi, t.lo):
            for f in t.frames():
                out.setdefault(f, {}).setdefault((t.word, h, l), []).append((t, _drive(spec.ctx, t, h, l)))
    for t in spec.consequents:
        if t.end > frames:
            raise SpecError(f"consequent cons#{t.index} ends at {t.end}, beyond {frames} frames")
        _atom_slices(amap, t.word, t.hi, t.lo)
    return out


def _checks(spec: Spec, state: SymState, amap: AtomMap, track_inv: bool) -> list[Check]:
    c = spec.ctx
    out = []
    for t in spec.consequents:
        if state.time not in t.frames():
            continue
        v = state.word(c, amap, t.word, t.hi, t.lo)
        good = c.eq(t.vexpr, v.val)
        if track_inv:
            good = c.and_(c.not_(v.inv), good)
        out.append(Check(t.index, t.word, t.hi, t.lo, state.time, c.implies(t.guard, good), t.guard, t.vexpr, v))
    return out


def _frames(spec: Spec, frames: int | None) -> int:
    depth = spec.depth
    if frames is None:
        return depth
    if frames < depth:
        raise SpecError(f"{frames} frames is fewer than the spec needs ({depth})")
    return frames


def run_ste(
    d: Design,
    spec: Spec,
    frames: int | None = None,
    amap: AtomMap | None = None,
    shift_mode: str = "strict-sound",
) -> tuple[Obligation, list[SymState]]:
    """Defining trajectory of the antecedent and the STE obligation."""
    t0 = time.perf_counter()
    ctx = spec.ctx
    amap = amap or atomize_design(d, spec)
    frames = _frames(spec, frames)
    sched = _schedule(spec, amap, frames)
    side = SideConstraints("w")
    sim = Simulator(d, amap, ctx, shift_mode=shift_mode, side=side)
    ant_fail: list[AntFailCond] = []

    def join_drives(key, circuit: SymAtom, drives, t: int) -> SymAtom:
        acc = drives[0][1]
        for tup, dv in drives[1:]:
            acc, top = lub(ctx, acc, dv)
            if not top.is_false():
                ant_fail.append(AntFailCond(*key, t, top, tuple(x[0].index for x in drives), False))
        res, top = lub(ctx, circuit, acc)
        if not top.is_false():
            ant_fail.append(AntFailCond(*key, t, top, tuple(x[0].index for x in drives), True))
        return res

    trace: list[SymState] = []
    checks: list[Check] = []
    input_values: list[dict] = []
    reg_init: dict = {}
    state = sim.initial_state()
    for t in range(frames):
        if t > 0:
            state = sim.latch(trace[-1])
        drives = sched.get(t, {})
        atoms = dict(state.atoms)
        for key, ds in drives.items():
            if d.words[key[0]].kind in ("input", "reg"):
                atoms[key] = join_drives(key, atoms[key], ds, t)
        if t == 0:
            reg_init = {k: v for k, v in atoms.items() if d.words[k[0]].kind == "reg"}
        input_values.append({k: v for k, v in atoms.items() if d.words[k[0]].kind == "input"})

        def hook(key, v, t=t, drives=drives):
            ds = drives.get(key)
            return join_drives(key, v, ds, t) if ds else v

        state = sim.settle(SymState(t, atoms, state.arrays, side), hook)
        trace.append(state)
        checks.extend(_checks(spec, state, amap, True))

    overrides = [
        (f, t.word, h, l, t.guard, ctx.extract(h - t.lo, l - t.lo, t.vexpr))
        for t in spec.antecedents
        if d.words[t.word].kind != "input"
        for h, l in _atom_slices(amap, t.word, t.hi, t.lo)
        for f in t.frames()
    ]
    ob = Obligation(
        kind="ste",
        spec=spec,
        frames=frames,
        constr=spec.constr,
        ant_fail=ant_fail,
        no_ant_fail=ctx.not_(ctx.or_(*(a.cond for a in ant_fail))),
        ok=ctx.and_(*(k.ok for k in checks)),
        side=list(side.constraints),
        assumptions=[],
        checks=checks,
        witnesses=list(side.witnesses),
        divisors=list(sim.divisors),
        input_values=input_values,
        reg_init=reg_init,
        overrides=overrides,
    )
    ob.sim_time = time.perf_counter() - t0
    return ob, trace


def run_bmc(d: Design, spec: Spec, frames: int | None = None, amap: AtomMap | None = None) -> Obligation:
    """Word-level unrolling without invalid bits.

    Each input atom gets one fresh variable per frame unless a constant-true
    antecedent drives it; conditional drives select between the antecedent
    value and the fresh variable.  Antecedents on internal words become
    assumptions.
    """
    t0 = time.perf_counter()
    ctx = spec.ctx
    amap = amap or atomize_design(d, spec)
    frames = _frames(spec, frames)
    sched = _schedule(spec, amap, frames)
    sim = Simulator(d, amap, ctx, track_inv=False, side=SideConstraints("b"))

    def atom_name(word: str, hi: int, lo: int) -> str:
        return word if (hi, lo) == (d.words[word].width - 1, 0) else f"{word}[{hi}:{lo}]"

    sim.free_init = lambda w, hi, lo: ctx.var(f"{atom_name(w, hi, lo)}@init", hi - lo + 1)
    assumptions: list[Expr] = []
    fresh: list[Expr] = []
    checks: list[Check] = []
    input_values: list[dict] = []
    state = sim.initial_state()
    reg_init = {k: v for k, v in state.atoms.items() if d.words[k[0]].kind == "reg"}
    prev = None

    def assume(v: SymAtom, ds) -> None:
        for tup, dv in ds:
            assumptions.append(ctx.implies(tup.guard, ctx.eq(v.val, dv.val)))

    for t in range(frames):
        if prev is not None:
            state = sim.latch(prev)
        drives = sched.get(t, {})
        atoms = dict(state.atoms)
        for w in d.inputs:
            for hi, lo in amap[w.name].atoms:
                key = (w.name, hi, lo)
                ds = drives.get(key, [])
                fixed = [dv for tup, dv in ds if tup.guard.is_true()]
                if fixed:
                    val = fixed[0].val
                    for dv in fixed[1:]:
                        assumptions.append(ctx.eq(val, dv.val))
                    cond = [(tup, dv) for tup, dv in ds if not tup.guard.is_true()]
                else:
                    v = ctx.var(f"{atom_name(w.name, hi, lo)}@{t}", hi - lo + 1)
                    fresh.append(v)
                    val = v
                    for tup, dv in reversed(ds):
                        val = ctx.ite(tup.guard, dv.val, val)
                    cond = ds[1:] if len(ds) > 1 else []
                    # overlapping conditional drives must also agree
                atoms[key] = SymAtom(val, ctx.false)
                if fixed or len(ds) > 1:
                    assume(atoms[key], cond)
        for key, ds in drives.items():
            if d.words[key[0]].kind == "reg":
                assume(atoms[key], ds)
        input_values.append({k: v for k, v in atoms.items() if d.words[k[0]].kind == "input"})

        def hook(key, v, drives=drives):
            if key in drives:
                assume(v, drives[key])
            return v

        prev = sim.settle(SymState(t, atoms, state.arrays, sim.side), hook)
        checks.extend(_checks(spec, prev, amap, False))

    ob = Obligation(
        kind="bmc",
        spec=spec,
        frames=frames,
        constr=spec.constr,
        ant_fail=[],
        no_ant_fail=ctx.true,
        ok=ctx.and_(*(k.ok for k in checks)),
        side=[],
        assumptions=assumptions,
        checks=checks,
        fresh_inputs=fresh,
        input_values=input_values,
        reg_init=reg_init,
    )
    ob.sim_time = time.perf_counter() - t0
    return ob


# ----------------------------------------------------------------------------
# checking


@dataclass
class VerifResult:
    verdict: str  # pass | fail | antfail | unknown
    model: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)  # Check
    conflicts: list = field(default_factory=list)  # AntFailCond
    warnings: list = field(default_factory=list)
    diagnostics: str = ""
    answers: list = field(default_factory=list)  # (query, SolverAnswer)
    emit_time: float = 0.0
    solve_time: float = 0.0

    @property
    def exit_code(self) -> int:
        return VERDICT_EXIT[self.verdict]


def _complete(ob: Obligation, env: dict, warnings: list) -> dict:
    """Give every guard variable and witness a value."""
    env = dict(env)
    missing = []
    for name, v in ob.spec.guard_vars.items():
        if name not in env:
            env[name] = default_value(v.sort)
            missing.append(name)
    for w in ob.witnesses:
        if w.var.name not in env:
            try:
                env[w.var.name] = w.value_under(env)
            except KeyError:
                env[w.var.name] = 0
    roots = [k.ok for k in ob.checks] + [a.cond for a in ob.ant_fail]
    # replay reads every driven input and initial register, used or not
    for atoms in [*ob.input_values, ob.reg_init]:
        roots.extend(x for atom in atoms.values() for x in (atom.val, atom.inv))
    for v in free_vars(*roots):
        if v.name not in env:
            env[v.name] = default_value(v.sort)
    if missing:
        warnings.append(f"guard variables absent from the model, defaulted to 0: {', '.join(sorted(missing))}")
    return env


def _query(result: VerifResult, ob: Obligation, assertions, label: str, solver_cmd, timeout):
    t0 = time.perf_counter()
    script = ob.emit("negok") if label == "negok" else smt.emit_script(assertions, [f"{ob.kind} {label} query"])
    result.emit_time += time.perf_counter() - t0
    ans = smt.solve(script, solver_cmd, timeout)
    result.solve_time += ans.wall_time
    result.answers.append((label, ans))
    if ans.status == "sat" and not ans.validated:
        ans.status = "unknown"
    return ans


def check(
    ob: Obligation,
    mode: str | None = None,
    solver_cmd: str | None = None,
    timeout: float | None = 60.0,
) -> VerifResult:
    """Discharge ``ob``: antecedent-failure query first in report mode."""
    mode = mode or ob.spec.mode
    if mode not in ("report", "assume"):
        raise ValueError(f"unknown antecedent-failure policy {mode!r}")
    c = ob.spec.ctx
    res = VerifResult("pass")
    if ob.constr.is_false():
        res.warnings.append("vacuous: the constraint is unsatisfiable")
        return res
    conds = [a for a in ob.ant_fail if not a.cond.is_false()]
    if mode == "report" and conds:
        ans = _query(res, ob, ob.antfail_assertions(), "antfail", solver_cmd, timeout)
        if ans.status == "sat":
            res.verdict = "antfail"
            res.model = _complete(ob, ans.model, res.warnings)
            memo: dict = {}
            res.conflicts = [a for a in conds if eval_expr(a.cond, res.model, memo=memo)]
            return res
        if ans.status != "unsat":
            res.verdict = "unknown"
            res.diagnostics = ans.diagnostics or "solver returned unknown"
            return res
    if not ob.ok.is_true():
        ans = _query(res, ob, ob.negok_assertions(), "negok", solver_cmd, timeout)
        if ans.status == "sat":
            res.verdict = "fail"
            res.model = _complete(ob, ans.model, res.warnings)
            memo = {}
            res.failed = [k for k in ob.checks if not eval_expr(k.ok, res.model, memo=memo)]
            return res
        if ans.status != "unsat":
            res.verdict = "unknown"
            res.diagnostics = ans.diagnostics or "solver returned unknown"
            return res
    # pass: make sure it is not vacuous
    premise = [ob.constr, *ob.side, *ob.assumptions]
    if mode == "assume":
        premise.append(ob.no_ant_fail)
    premise = [p for p in premise if not p.is_true()]
    vacuous = "vacuous: no assignment satisfies the constraint and assumptions"
    if any(p.is_false() for p in premise):
        res.warnings.append(vacuous)
    elif premise:
        v = _query(res, ob, premise, "vacuity", solver_cmd, timeout)
        if v.status == "unsat":
            res.warnings.append(vacuous)
    return res


def check_div_by_zero(ob: Obligation, solver_cmd: str | None = None, timeout: float | None = 60.0) -> smt.SolverAnswer | None:
    """Can a valid divisor be zero?  (The simulation assumes it cannot.)"""
    c = ob.spec.ctx
    if not ob.divisors:
        return None
    zero = c.or_(*(c.and_(c.not_(b.inv), c.eq(b.val, c.zero(b.width))) for b in ob.divisors))
    return smt.solve(smt.emit_script([ob.constr, zero], ["division-by-zero reachability"]), solver_cmd, timeout)


# ----------------------------------------------------------------------------
# counterexample replay


@dataclass
class ReplayReport:
    confirmed: bool
    lines: list = field(default_factory=list)
    flags: list = field(default_factory=list)


def replay(d: Design, ob: Obligation, result: VerifResult, tries: int = 8, seed: int = 0) -> ReplayReport:
    """Run the counterexample on the two-valued simulator.

    The first run gives X input and register bits the payloads the engine
    used, so it is one concretization of the symbolic run and every failing
    check with a defined value must disagree there.  A check that failed
    because its value was X is confirmed when some concretization of the X
    bits disagrees; the complement of the payload and a few seeded random
    values are tried.
    """
    env = result.model
    memo: dict = {}

    def ev(e: Expr) -> Any:
        return eval_expr(e, env, memo=memo)

    def pack(atoms: dict, pick) -> dict[str, int]:
        out: dict[str, int] = {}
        for (w, hi, lo), atom in atoms.items():
            v = ev(atom.val)
            if ob.kind == "ste" and ev(atom.inv):
                v = pick(v, hi - lo + 1)
            out[w] = out.get(w, 0) | (v << lo)
        return out

    init_arrays = {}
    flags = []
    for a in d.arrays.values():
        key = f"{a.name}@init"
        if key in env:
            init_arrays[a.name] = env[key]
        elif not a.initialized:
            flags.append(f"array {a.name}: no model value, replayed as zero")
    overrides: dict[int, list] = {}
    for f, w, hi, lo, g, v in ob.overrides:
        if ev(g):
            overrides.setdefault(f, []).append((w, hi, lo, ev(v)))

    def run(pick):
        stim = [pack(frame, pick) for frame in ob.input_values]
        return simulate_concrete(d, stim, ob.frames, pack(ob.reg_init, pick), init_arrays, overrides)

    rng = random.Random(seed)
    picks = [lambda v, w: v, lambda v, w: ~v & ((1 << w) - 1)]
    picks += [lambda v, w: rng.getrandbits(w)] * max(tries - 2, 0)
    first = run(picks[0])
    rep = ReplayReport(False, flags=flags + first.flags)
    pending = []
    for k in result.failed:
        got = first.value(k.word, k.frame, k.hi, k.lo)
        want = ev(k.vexpr)
        if ob.kind == "ste" and ev(k.value.inv):
            pending.append((k, want))
            continue
        hit = got != want
        rep.lines.append(f"{k.describe()}: concrete {got}, spec wants {want} -> {'violated' if hit else 'NOT violated'}")
        if not hit:
            return rep
        rep.confirmed = True
    for pick in picks:
        if not pending:
            break
        trace = first if pick is picks[0] else run(pick)
        still = []
        for k, want in pending:
            got = trace.value(k.word, k.frame, k.hi, k.lo)
            if got != want:
                rep.lines.append(f"{k.describe()}: engine value is X; a concretization gives {got}, spec wants {want}")
                rep.confirmed = True
            else:
                still.append((k, want))
        pending = still
    for k, want in pending:
        rep.lines.append(f"{k.describe()}: engine value is X; no tried concretization differs from {want}")
    return rep
