"""Lower an expression DAG to a flat instruction tape for batch evaluation.

The tape is what the kernels in :mod:`wordste.kernels` execute.  Every value
lives in one unsigned 64-bit slot: bit-vectors up to 64 bits, booleans as 0/1,
and small arrays packed as ``2**index_width`` consecutive element fields.
Anything wider raises :class:`TapeUnsupported`; callers then fall back to
:func:`wordste.expr.eval_expr`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .expr import ArrayValue, Expr, Sort, postorder

OPCODES = {
    "const": 0,
    "var": 1,
    "add": 2,
    "sub": 3,
    "mul": 4,
    "udiv": 5,
    "urem": 6,
    "concat": 7,
    "extract": 8,
    "bvnot": 9,
    "bvand": 10,
    "bvor": 11,
    "bvxor": 12,
    "shl": 13,
    "lshr": 14,
    "shlc": 15,
    "lshrc": 16,
    "eq": 17,
    "ult": 18,
    "ule": 19,
    "not": 20,
    "and": 21,
    "or": 22,
    "ite": 23,
    "select": 24,
    "store": 25,
}

# instruction row layout
OPC, WIDTH, A, B, C, PARAM = range(6)


class TapeUnsupported(ValueError):
    pass


def packed_width(sort: Sort) -> int:
    if sort.is_bool:
        return 1
    if sort.is_bv:
        return sort.width
    return (1 << sort.index_width) * packed_width(sort.elem)


def pack_value(value: Any, sort: Sort) -> int:
    if sort.is_bool:
        return int(bool(value))
    if sort.is_bv:
        return int(value)
    ew = packed_width(sort.elem)
    acc = 0
    for i in range(1 << sort.index_width):
        acc |= pack_value(value.read(i), sort.elem) << (i * ew)
    return acc


def unpack_value(raw: int, sort: Sort) -> Any:
    if sort.is_bool:
        return bool(raw)
    if sort.is_bv:
        return int(raw)
    ew = packed_width(sort.elem)
    m = (1 << ew) - 1
    entries = {i: unpack_value((raw >> (i * ew)) & m, sort.elem) for i in range(1 << sort.index_width)}
    return ArrayValue(unpack_value(0, sort.elem), entries)


@dataclass
class Tape:
    instr: np.ndarray  # int64[n, 6]
    consts: np.ndarray  # uint64[k]
    var_names: list[str]
    var_sorts: list[Sort]
    outputs: np.ndarray  # int64[o]
    output_sorts: list[Sort]

    def __len__(self) -> int:
        return int(self.instr.shape[0])

    def env_matrix(self, envs: Sequence[Mapping[str, Any]]) -> np.ndarray:
        m = np.zeros((len(envs), len(self.var_names)), dtype=np.uint64)
        for r, env in enumerate(envs):
            for c, (name, sort) in enumerate(zip(self.var_names, self.var_sorts)):
                m[r, c] = pack_value(env[name], sort)
        return m


def compile_tape(roots: Sequence[Expr], var_order: Sequence[str] | None = None) -> Tape:
    """Compile ``roots`` into one tape whose outputs are the roots, in order.

    ``var_order`` fixes the env-matrix column of each variable; variables not
    listed are appended in first-visit order.
    """
    rows: list[list[int]] = []
    consts: list[int] = []
    slot: dict[int, int] = {}
    names: list[str] = list(var_order or ())
    col = {n: i for i, n in enumerate(names)}
    sorts: dict[str, Sort] = {}

    def emit(op: str, width: int, a: int = 0, b: int = 0, c: int = 0, param: int = 0) -> int:
        rows.append([OPCODES[op], width, a, b, c, param])
        return len(rows) - 1

    for n in postorder(roots):
        w = packed_width(n.sort)
        if w > 64:
            raise TapeUnsupported(f"{n.op} node of sort {n.sort} needs {w} bits")
        args = [slot[a.id] for a in n.args]
        op = n.op
        if op == "const":
            consts.append(int(n.value))
            s = emit("const", w, param=len(consts) - 1)
        elif op == "var":
            if n.name not in col:
                col[n.name] = len(names)
                names.append(n.name)
            sorts[n.name] = n.sort
            s = emit("var", w, param=col[n.name])
        elif op == "concat":
            s = args[0]
            acc_w = n.args[0].width
            for a_expr, a_slot in zip(n.args[1:], args[1:]):
                acc_w += a_expr.width
                s = emit("concat", acc_w, s, a_slot, param=a_expr.width)
        elif op in ("and", "or"):
            s = args[0]
            for a_slot in args[1:]:
                s = emit(op, 1, s, a_slot)
        elif op == "extract":
            s = emit("extract", w, args[0], param=n.params[1])
        elif op in ("shlc", "lshrc"):
            s = emit(op, w, args[0], param=n.params[0])
        elif op == "select":
            s = emit("select", w, args[0], args[1], param=packed_width(n.sort))
        elif op == "store":
            s = emit("store", w, args[0], args[1], args[2], param=packed_width(n.args[2].sort))
        else:
            s = emit(op, w, *args)
        slot[n.id] = s

    missing = [nm for nm in names if nm not in sorts]
    for nm in missing:
        sorts[nm] = Sort("bv", 64)
    return Tape(
        instr=np.asarray(rows, dtype=np.int64).reshape(-1, 6),
        consts=np.asarray(consts, dtype=np.uint64),
        var_names=names,
        var_sorts=[sorts[nm] for nm in names],
        outputs=np.asarray([slot[r.id] for r in roots], dtype=np.int64),
        output_sorts=[r.sort for r in roots],
    )
