"""Canonical text rendering of parsed designs and specs.

``parse(print(parse(src)))`` reproduces the same tree; printed output uses
the minimum parentheses the precedence table allows.
"""

from __future__ import annotations

from . import ast as A
from .parser import BINARY_PREC, COND_PREC, KEYWORDS, UNARY_PREC


def expr_text(n: A.Node, min_prec: int = 0) -> str:
    if isinstance(n, A.Num):
        return n.text or str(n.value)
    if isinstance(n, A.BoolLit):
        return "true" if n.value else "false"
    if isinstance(n, A.Name):
        return n.ident
    if isinstance(n, A.Call):
        return f"{n.fn}({', '.join(expr_text(a) for a in n.args)})"
    if isinstance(n, A.Concat):
        return "{" + ", ".join(expr_text(p) for p in n.parts) + "}"
    if isinstance(n, A.Index):
        return f"{expr_text(n.base, UNARY_PREC + 1)}[{expr_text(n.index)}]"
    if isinstance(n, A.Slice):
        return f"{expr_text(n.base, UNARY_PREC + 1)}[{expr_text(n.hi)}:{expr_text(n.lo)}]"
    if isinstance(n, A.Unary):
        s = n.op + expr_text(n.arg, UNARY_PREC)
        # "- -x" must not print as "--x"; not a token, but keep it readable
        return _paren(s, UNARY_PREC, min_prec)
    if isinstance(n, A.Binary):
        p = BINARY_PREC[n.op]
        s = f"{expr_text(n.left, p)} {n.op} {expr_text(n.right, p + 1)}"
        return _paren(s, p, min_prec)
    if isinstance(n, A.Cond):
        s = f"{expr_text(n.cond, COND_PREC + 1)} ? {expr_text(n.then, COND_PREC)} : {expr_text(n.other, COND_PREC)}"
        return _paren(s, COND_PREC, min_prec)
    raise TypeError(f"not an expression node: {n!r}")


def _paren(s: str, prec: int, min_prec: int) -> str:
    return f"({s})" if prec < min_prec else s


def _stmt_lines(s, indent: str) -> list[str]:
    if isinstance(s, A.Assign):
        op = "<=" if s.seq else "="
        return [f"{indent}{expr_text(s.lhs)} {op} {expr_text(s.rhs)};"]
    if isinstance(s, A.If):
        out = [f"{indent}if ({expr_text(s.cond)}) {{"]
        for t in s.then:
            out.extend(_stmt_lines(t, indent + "  "))
        if s.other:
            out.append(f"{indent}}} else {{")
            for t in s.other:
                out.extend(_stmt_lines(t, indent + "  "))
        out.append(f"{indent}}}")
        return out
    raise TypeError(f"not a statement: {s!r}")


def design_text(d: A.Design) -> str:
    # a headerless source parses with the (keyword) default name
    lines = [] if d.name in KEYWORDS else [f"design {d.name};"]
    for item in d.items:
        if isinstance(item, A.Param):
            lines.append(f"param {item.name} = {expr_text(item.value)};")
        elif isinstance(item, A.WordDecl):
            if item.width is None:
                lines.append(f"output {item.name};")
                continue
            s = f"{item.kind} {item.name}:{expr_text(item.width, COND_PREC + 1)}"
            if item.init is not None:
                s += f" = {expr_text(item.init, COND_PREC + 1)}"
            lines.append(s + ";")
        elif isinstance(item, A.ArrayDecl):
            dims = "".join(f"[{expr_text(w)}]" for w in item.index_widths)
            s = f"array {item.name}:{dims}{expr_text(item.elem_width, UNARY_PREC)}"
            lines.append(s + (" uninit;" if item.uninit else ";"))
        else:
            lines.extend(_stmt_lines(item, ""))
    return "\n".join(lines) + "\n"


def spec_text(s: A.SpecSource) -> str:
    lines = []
    for item in s.items:
        if isinstance(item, A.Param):
            lines.append(f"param {item.name} = {expr_text(item.value)};")
        elif isinstance(item, A.VarDecl):
            lines.append(f"var {item.name}:{expr_text(item.width, COND_PREC + 1)};")
        elif isinstance(item, A.ConstrDecl):
            lines.append(f"constr {expr_text(item.expr)};")
        elif isinstance(item, A.ModeDecl):
            lines.append(f"mode {item.mode};")
        elif isinstance(item, A.TupleDecl):
            lines.append(
                f"{item.kind} ({expr_text(item.guard)}) {expr_text(item.target)} = "
                f"{expr_text(item.value)} @ [{expr_text(item.start)}, {expr_text(item.end)});"
            )
    return "\n".join(lines) + "\n"


def tree_key(n) -> tuple:
    """Location-free structural key of an AST node (for round-trip tests)."""
    if isinstance(n, (list, tuple)):
        return tuple(tree_key(x) for x in n)
    if isinstance(n, A.Num):
        return ("num", n.value, None if n.size is None else n.size.value)
    if isinstance(n, A.BoolLit):
        return ("bool", n.value)
    if isinstance(n, A.Name):
        return ("name", n.ident)
    fields = getattr(n, "__dataclass_fields__", None)
    if fields is None:
        return n
    return (type(n).__name__,) + tuple(tree_key(getattr(n, f)) for f in fields if f != "loc")
