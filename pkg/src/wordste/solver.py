"""SMT-LIB2 emission, the external solver process, and model read-back.

No solver is linked in.  Scripts are written to a temporary file and the
command template (default ``z3 -smt2 {file}``, overridable with the
``WORDSTE_SOLVER`` environment variable or per call) is run on it.  Every
``sat`` answer is validated by evaluating the asserted formulas under the
returned model; the outcome is tallied in :data:`VALIDATION`.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from .expr import ArrayValue, Expr, Sort, default_value, eval_expr, free_vars, postorder

DEFAULT_SOLVER = "z3 -smt2 {file}"
SOLVER_ENV = "WORDSTE_SOLVER"

VALIDATION = {"sat_answers": 0, "validated": 0, "failures": 0}


def solver_command(cmd: str | None = None) -> str:
    return cmd or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER


# ----------------------------------------------------------------------------
# emission

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")
_RESERVED = {"true", "false", "ite", "and", "or", "not", "select", "store", "let", "assert"}

_SMT_OP = {
    "add": "bvadd",
    "sub": "bvsub",
    "mul": "bvmul",
    "udiv": "bvudiv",
    "urem": "bvurem",
    "concat": "concat",
    "bvnot": "bvnot",
    "bvand": "bvand",
    "bvor": "bvor",
    "bvxor": "bvxor",
    "shl": "bvshl",
    "lshr": "bvlshr",
    "eq": "=",
    "ult": "bvult",
    "ule": "bvule",
    "not": "not",
    "and": "and",
    "or": "or",
    "ite": "ite",
    "select": "select",
    "store": "store",
}


def sort_text(s: Sort) -> str:
    if s.is_bool:
        return "Bool"
    if s.is_bv:
        return f"(_ BitVec {s.width})"
    return f"(Array (_ BitVec {s.index_width}) {sort_text(s.elem)})"


def mangle(name: str) -> str:
    """Engine variable name to an SMT-LIB symbol (quoted when needed)."""
    if _SIMPLE.match(name) and name not in _RESERVED and not name.startswith("_t"):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"variable name {name!r} cannot be quoted in SMT-LIB")
    return f"|{name}|"


@dataclass
class SmtScript:
    text: str
    assertions: list  # Expr, in emission order
    symbols: dict  # SMT symbol -> engine Var
    logic: str = "QF_ABV"

    def declared(self) -> list[str]:
        return list(self.symbols)


def emit_script(assertions: Sequence[Expr], comments: Sequence[str] = (), declare: Sequence[Expr] = ()) -> SmtScript:
    """Deterministic QF_ABV script asserting each formula.

    Subterms used more than once become ``define-fun`` definitions named in
    post-order, so equal inputs always give identical bytes.  Variables in
    ``declare`` are declared even when no assertion mentions them.
    """
    assertions = [a for a in assertions]
    order = postorder(assertions)
    uses: dict[int, int] = {}
    for n in order:
        for a in n.args:
            uses[a.id] = uses.get(a.id, 0) + 1
    lines = [f"; {c}" for c in comments]
    lines += ["(set-logic QF_ABV)", "(set-option :produce-models true)"]
    symbols: dict[str, Expr] = {}
    text: dict[int, str] = {}
    ndef = 0
    seen = set()
    for v in [*free_vars(*assertions), *declare]:
        if v.id in seen:
            continue
        seen.add(v.id)
        sym = mangle(v.name)
        symbols[sym] = v
        lines.append(f"(declare-fun {sym} () {sort_text(v.sort)})")
    for n in order:
        s = _term(n, text)
        if n.args and uses.get(n.id, 0) > 1:
            name = f"_t{ndef}"
            ndef += 1
            lines.append(f"(define-fun {name} () {sort_text(n.sort)} {s})")
            s = name
        text[n.id] = s
    for a in assertions:
        lines.append(f"(assert {text[a.id]})")
    lines += ["(check-sat)", "(get-model)", "(exit)"]
    return SmtScript("\n".join(lines) + "\n", assertions, symbols)


def _term(n: Expr, text: dict) -> str:
    op = n.op
    if op == "const":
        if n.sort.is_bool:
            return "true" if n.value else "false"
        return f"(_ bv{n.value} {n.width})"
    if op == "var":
        return mangle(n.name)
    args = " ".join(text[a.id] for a in n.args)
    if op == "extract":
        return f"((_ extract {n.params[0]} {n.params[1]}) {args})"
    if op in ("shlc", "lshrc"):
        k = n.params[0]
        fn = "bvshl" if op == "shlc" else "bvlshr"
        return f"({fn} {args} (_ bv{k} {n.width}))"
    return f"({_SMT_OP[op]} {args})"


def normalize_widths(script: str) -> str:
    """Erase width annotations and constants (for structural comparison)."""
    s = re.sub(r"\(_ BitVec \d+\)", "(_ BitVec W)", script)
    s = re.sub(r"\(_ bv\d+ \d+\)", "(_ bvK W)", s)
    s = re.sub(r"\(_ extract \d+ \d+\)", "(_ extract H L)", s)
    return s


# ----------------------------------------------------------------------------
# s-expressions and models


def parse_sexprs(text: str) -> list:
    tokens = re.findall(r'\(|\)|\|[^|]*\||"(?:[^"]|"")*"|[^\s()]+', text)
    out: list = []
    stack: list[list] = []
    for t in tokens:
        if t == "(":
            stack.append([])
        elif t == ")":
            if not stack:
                raise ValueError("unbalanced ')' in solver output")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            (stack[-1] if stack else out).append(t)
    if stack:
        raise ValueError("unbalanced '(' in solver output")
    return out


def _unquote(sym: str) -> str:
    return sym[1:-1] if sym.startswith("|") and sym.endswith("|") else sym


def _literal(tok: Any) -> Any:
    if isinstance(tok, list) and len(tok) == 3 and tok[0] == "_" and tok[1].startswith("bv"):
        return int(tok[1][2:])
    if isinstance(tok, str):
        if tok.startswith("#b"):
            return int(tok[2:], 2)
        if tok.startswith("#x"):
            return int(tok[2:], 16)
        if tok in ("true", "false"):
            return tok == "true"
    raise ValueError(f"not a literal: {tok!r}")


def _array_value(term: Any, sort: Sort, funcs: dict) -> ArrayValue:
    """Array model term: as-const, store chains, or as-array of an ite body."""
    if isinstance(term, list) and term and term[0] == "store":
        base = _array_value(term[1], sort, funcs)
        return base.write(_literal(term[2]), _value(term[3], sort.elem, funcs))
    if isinstance(term, list) and len(term) == 2 and isinstance(term[0], list) and term[0][:2] == ["as", "const"]:
        return ArrayValue(_value(term[1], sort.elem, funcs))
    if isinstance(term, list) and len(term) == 3 and term[0] == "_" and term[1] == "as-array":
        params, body = funcs[_unquote(term[2])]
        return _lambda_array(body, params[0][0], sort, funcs)
    if isinstance(term, list) and term and term[0] == "lambda":
        return _lambda_array(term[2], term[1][0][0], sort, funcs)
    raise ValueError(f"unsupported array model term {term!r}")


def _lambda_array(body: Any, var: str, sort: Sort, funcs: dict) -> ArrayValue:
    entries = {}
    while isinstance(body, list) and body and body[0] == "ite":
        cond, then, body = body[1], body[2], body[3]
        if not (isinstance(cond, list) and len(cond) == 3 and cond[0] == "="):
            raise ValueError(f"unsupported array function condition {cond!r}")
        idx = cond[2] if cond[1] == var else cond[1]
        key = _literal(idx)
        if key not in entries:
            entries[key] = _value(then, sort.elem, funcs)
    return ArrayValue(_value(body, sort.elem, funcs), entries)


def _value(term: Any, sort: Sort, funcs: dict) -> Any:
    if sort.is_array:
        return _array_value(term, sort, funcs)
    return _literal(term)


def parse_model(text: str, sorts: dict[str, Sort]) -> tuple[dict, list[str]]:
    """(symbol -> value, problems) from a get-model response."""
    forms = parse_sexprs(text)
    defs = []
    for f in forms:
        if isinstance(f, list):
            body = f[1:] if f and f[0] == "model" else f
            defs.extend(d for d in body if isinstance(d, list) and d and d[0] == "define-fun")
    funcs = {_unquote(d[1]): (d[2], d[4]) for d in defs if d[2]}
    model, problems = {}, []
    for d in defs:
        name = _unquote(d[1])
        if d[2] or name not in sorts:
            continue
        try:
            model[name] = _value(d[4], sorts[name], funcs)
        except (ValueError, KeyError) as e:
            problems.append(f"{name}: {e}")
    return model, problems


# ----------------------------------------------------------------------------
# solving


@dataclass
class SolverAnswer:
    status: str  # sat | unsat | unknown
    model: dict = field(default_factory=dict)  # engine var name -> value
    raw: str = ""
    wall_time: float = 0.0
    timeout: bool = False
    defaulted: list = field(default_factory=list)  # vars missing from the model
    diagnostics: str = ""
    validated: bool | None = None


def solve(script: SmtScript, cmd: str | None = None, timeout: float | None = 60.0) -> SolverAnswer:
    """Run the solver on ``script``; never raises for solver-side problems."""
    template = solver_command(cmd)
    t0 = time.perf_counter()
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix="wordste-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(script.text)
        argv = [a.replace("{file}", path) for a in shlex.split(template)]
        if "{file}" not in template:
            argv.append(path)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as e:
            return SolverAnswer("unknown", wall_time=time.perf_counter() - t0, diagnostics=f"cannot spawn solver: {e}")
        except PermissionError as e:
            return SolverAnswer("unknown", wall_time=time.perf_counter() - t0, diagnostics=f"cannot spawn solver: {e}")
        except subprocess.TimeoutExpired as e:
            out = e.stdout.decode() if isinstance(e.stdout, bytes) else (e.stdout or "")
            return SolverAnswer(
                "unknown", raw=out, wall_time=time.perf_counter() - t0, timeout=True,
                diagnostics=f"solver timed out after {timeout}s",
            )
    finally:
        os.unlink(path)
    wall = time.perf_counter() - t0
    raw = proc.stdout
    first = raw.split(None, 1)[0] if raw.strip() else ""
    if first not in ("sat", "unsat", "unknown"):
        return SolverAnswer(
            "unknown", raw=raw, wall_time=wall,
            diagnostics=f"unparseable solver output (exit {proc.returncode}): {(raw + proc.stderr).strip()[:300]}",
        )
    ans = SolverAnswer(first, raw=raw, wall_time=wall)
    if first == "sat":
        _read_model(ans, script)
    return ans


def _read_model(ans: SolverAnswer, script: SmtScript) -> None:
    rest = ans.raw.split(None, 1)[1] if len(ans.raw.split(None, 1)) > 1 else ""
    sorts = {_unquote(sym): v.sort for sym, v in script.symbols.items()}
    try:
        model, problems = parse_model(rest, sorts)
    except ValueError as e:
        model, problems = {}, [str(e)]
    env = {}
    for sym, v in script.symbols.items():
        key = _unquote(sym)
        if key in model:
            env[v.name] = model[key]
        else:
            env[v.name] = default_value(v.sort)
            ans.defaulted.append(v.name)
    ans.model = env
    if problems:
        ans.diagnostics = "; ".join(problems)
    validate(ans, script.assertions)


def validate(ans: SolverAnswer, assertions: Sequence[Expr]) -> bool:
    """Engine-side check that the model satisfies every asserted formula."""
    VALIDATION["sat_answers"] += 1
    memo: dict = {}
    ok = all(bool(eval_expr(a, ans.model, memo=memo)) for a in assertions)
    ans.validated = ok
    if ok:
        VALIDATION["validated"] += 1
    else:
        VALIDATION["failures"] += 1
        ans.diagnostics = (ans.diagnostics + "; " if ans.diagnostics else "") + "model does not satisfy the assertions"
    return ok
