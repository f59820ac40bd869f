"""Pure-Python (numpy-vectorised) kernels.  Always importable; the compiled
extension in ``_native`` must agree with these bit for bit."""

from __future__ import annotations

import numpy as np

from ..tape import OPCODES

_U = np.uint64
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)

_OPS = {v: k for k, v in OPCODES.items()}


def _mask(w: int) -> np.uint64:
    return _ALL if w >= 64 else np.uint64((1 << w) - 1)


def _shl(a, b, w):
    m = _mask(w)
    big = b >= np.uint64(w)
    s = np.where(big, _U(0), b)
    return np.where(big, _U(0), (a << s) & m)


def _lshr(a, b, w):
    big = b >= np.uint64(w)
    s = np.where(big, _U(0), b)
    return np.where(big, _U(0), a >> s)


def apply_vec(op: str, w: int, a, b, c, param: int):
    """Vectorised single-operator semantics over uint64 arrays."""
    m = _mask(w)
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "udiv":
        zero = b == 0
        return np.where(zero, m, a // np.where(zero, _U(1), b))
    if op == "urem":
        zero = b == 0
        return np.where(zero, a, a % np.where(zero, _U(1), b))
    if op == "concat":
        return (a << _U(param)) | b
    if op == "extract":
        return (a >> _U(param)) & m
    if op == "bvnot":
        return ~a & m
    if op == "bvand":
        return a & b
    if op == "bvor":
        return a | b
    if op == "bvxor":
        return a ^ b
    if op == "shl":
        return _shl(a, b, w)
    if op == "lshr":
        return _lshr(a, b, w)
    if op == "shlc":
        return _shl(a, np.full_like(a, param), w)
    if op == "lshrc":
        return _lshr(a, np.full_like(a, param), w)
    if op == "eq":
        return (a == b).astype(_U)
    if op == "ult":
        return (a < b).astype(_U)
    if op == "ule":
        return (a <= b).astype(_U)
    if op == "not":
        return a ^ _U(1)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "ite":
        return np.where(a != 0, b, c)
    if op == "select":
        return (a >> (b * _U(param))) & _mask(param)
    if op == "store":
        pos = b * _U(param)
        em = _mask(param)
        return (a & ~(em << pos)) | ((c & em) << pos)
    raise ValueError(f"unknown op {op}")


def eval_tape(instr: np.ndarray, consts: np.ndarray, env: np.ndarray, outputs: np.ndarray) -> np.ndarray:
    n_rows = env.shape[0]
    slots: list[np.ndarray] = []
    zero = np.zeros(n_rows, dtype=_U)
    for row in instr:
        opc, w, ia, ib, ic, param = (int(x) for x in row)
        op = _OPS[opc]
        if op == "const":
            slots.append(np.full(n_rows, consts[param], dtype=_U))
            continue
        if op == "var":
            slots.append(env[:, param].astype(_U, copy=False) & _mask(w))
            continue
        a = slots[ia] if ia < len(slots) else zero
        b = slots[ib] if ib < len(slots) else zero
        c = slots[ic] if ic < len(slots) else zero
        slots.append(apply_vec(op, w, a, b, c, param))
    out = np.empty((n_rows, len(outputs)), dtype=_U)
    for k, s in enumerate(outputs):
        out[:, k] = slots[int(s)]
    return out


def ternary_closure(results: np.ndarray, allowed: np.ndarray, widths: tuple, out_width: int):
    """Exact X-propagation over a concrete result table (see the native twin).

    ``results[c]`` is the result for the concatenated concrete operand vector
    ``c``; output entries pack, per operand from the least significant end,
    value then X mask.  Bits where two allowed concretizations disagree are X.
    """
    total = sum(widths)
    idx = np.arange(1 << (2 * total), dtype=_U)
    cv = np.zeros_like(idx)
    xall = np.zeros_like(idx)
    shift = pos = 0
    for w in widths:
        m = _mask(w)
        v = (idx >> _U(shift)) & m
        x = (idx >> _U(shift + w)) & m
        cv |= (v & ~x) << _U(pos)
        xall |= x << _U(pos)
        shift += 2 * w
        pos += w
    and_acc = np.full_like(idx, _ALL)
    or_acc = np.zeros_like(idx)
    seen = np.zeros(idx.shape, dtype=bool)
    for c in range(1 << total):
        if not allowed[c]:
            continue
        ok = (_U(c) & ~xall) == cv
        r = results[c]
        and_acc[ok] &= r
        or_acc[ok] |= r
        seen |= ok
    diff = and_acc ^ or_acc
    values = np.where(seen, and_acc & ~diff, _U(0))
    xmasks = np.where(seen, diff, _mask(out_width))
    return values, xmasks
