# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batch tape evaluation and exact ternary tables.

Opcode numbers mirror ``wordste.tape.OPCODES``; ``OPCODE_TABLE`` below is
checked against it by the test suite.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_UDIV = 5
    OP_UREM = 6
    OP_CONCAT = 7
    OP_EXTRACT = 8
    OP_BVNOT = 9
    OP_BVAND = 10
    OP_BVOR = 11
    OP_BVXOR = 12
    OP_SHL = 13
    OP_LSHR = 14
    OP_SHLC = 15
    OP_LSHRC = 16
    OP_EQ = 17
    OP_ULT = 18
    OP_ULE = 19
    OP_NOT = 20
    OP_AND = 21
    OP_OR = 22
    OP_ITE = 23
    OP_SELECT = 24
    OP_STORE = 25

OPCODE_TABLE = {
    "const": OP_CONST, "var": OP_VAR, "add": OP_ADD, "sub": OP_SUB,
    "mul": OP_MUL, "udiv": OP_UDIV, "urem": OP_UREM, "concat": OP_CONCAT,
    "extract": OP_EXTRACT, "bvnot": OP_BVNOT, "bvand": OP_BVAND,
    "bvor": OP_BVOR, "bvxor": OP_BVXOR, "shl": OP_SHL, "lshr": OP_LSHR,
    "shlc": OP_SHLC, "lshrc": OP_LSHRC, "eq": OP_EQ, "ult": OP_ULT,
    "ule": OP_ULE, "not": OP_NOT, "and": OP_AND, "or": OP_OR,
    "ite": OP_ITE, "select": OP_SELECT, "store": OP_STORE,
}


cdef inline uint64_t mask(int64_t w) nogil:
    if w >= 64:
        return <uint64_t>0xFFFFFFFFFFFFFFFF
    return ((<uint64_t>1) << w) - 1


cdef inline uint64_t apply1(int64_t op, int64_t w, uint64_t a, uint64_t b,
                            uint64_t c, int64_t param) nogil:
    cdef uint64_t m = mask(w)
    cdef uint64_t em, pos
    if op == OP_ADD:
        return (a + b) & m
    elif op == OP_SUB:
        return (a - b) & m
    elif op == OP_MUL:
        return (a * b) & m
    elif op == OP_UDIV:
        return m if b == 0 else a / b
    elif op == OP_UREM:
        return a if b == 0 else a % b
    elif op == OP_CONCAT:
        return (a << param) | b
    elif op == OP_EXTRACT:
        return (a >> param) & m
    elif op == OP_BVNOT:
        return (~a) & m
    elif op == OP_BVAND or op == OP_AND:
        return a & b
    elif op == OP_BVOR or op == OP_OR:
        return a | b
    elif op == OP_BVXOR:
        return a ^ b
    elif op == OP_SHL:
        return 0 if b >= <uint64_t>w else (a << b) & m
    elif op == OP_LSHR:
        return 0 if b >= <uint64_t>w else a >> b
    elif op == OP_SHLC:
        return 0 if param >= w else (a << param) & m
    elif op == OP_LSHRC:
        return 0 if param >= w else a >> param
    elif op == OP_EQ:
        return 1 if a == b else 0
    elif op == OP_ULT:
        return 1 if a < b else 0
    elif op == OP_ULE:
        return 1 if a <= b else 0
    elif op == OP_NOT:
        return a ^ 1
    elif op == OP_ITE:
        return b if a != 0 else c
    elif op == OP_SELECT:
        return (a >> (b * <uint64_t>param)) & mask(param)
    elif op == OP_STORE:
        em = mask(param)
        pos = b * <uint64_t>param
        return (a & ~(em << pos)) | ((c & em) << pos)
    return 0


def eval_tape(cnp.int64_t[:, ::1] instr, cnp.uint64_t[::1] consts,
              cnp.uint64_t[:, ::1] env, cnp.int64_t[::1] outputs):
    cdef Py_ssize_t n = instr.shape[0]
    cdef Py_ssize_t rows = env.shape[0]
    cdef Py_ssize_t nout = outputs.shape[0]
    out = np.empty((rows, nout), dtype=np.uint64)
    cdef cnp.uint64_t[:, ::1] o = out
    cdef uint64_t *slots = <uint64_t *> malloc(max(n, 1) * sizeof(uint64_t))
    cdef Py_ssize_t r, k
    cdef int64_t op, w
    if slots == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(rows):
                for k in range(n):
                    op = instr[k, 0]
                    w = instr[k, 1]
                    if op == OP_CONST:
                        slots[k] = consts[instr[k, 5]]
                    elif op == OP_VAR:
                        slots[k] = env[r, instr[k, 5]] & mask(w)
                    else:
                        slots[k] = apply1(op, w, slots[instr[k, 2]],
                                          slots[instr[k, 3]] if op != OP_BVNOT else 0,
                                          slots[instr[k, 4]] if (op == OP_ITE or op == OP_STORE) else 0,
                                          instr[k, 5])
                for k in range(nout):
                    o[r, k] = slots[outputs[k]]
    finally:
        free(slots)
    return out


def ternary_closure(cnp.uint64_t[::1] results, cnp.uint8_t[::1] allowed,
                    tuple widths, int out_width):
    """Exact X-propagation over a concrete result table.

    ``results[c]`` is the operator result for the concrete operand vector
    ``c`` (operand j in bits starting at the sum of earlier widths).  Entry
    ``e`` of the output packs, per operand from the least significant end,
    its value then its X mask.  A result bit is X iff two allowed
    concretizations disagree on it; entries with no allowed concretization
    come back all-X.
    """
    cdef int nops = len(widths)
    cdef int64_t w[3]
    cdef int j
    cdef int total = 0
    for j in range(3):
        w[j] = widths[j] if j < nops else 0
        total += w[j]
    cdef Py_ssize_t size = (<Py_ssize_t>1) << (2 * total)
    values = np.empty(size, dtype=np.uint64)
    xmasks = np.empty(size, dtype=np.uint64)
    cdef cnp.uint64_t[::1] vo = values
    cdef cnp.uint64_t[::1] xo = xmasks
    cdef Py_ssize_t e
    cdef uint64_t cv, xall, sub, r, r0, diff, v, x, om = mask(out_width)
    cdef int shift, pos, seen
    with nogil:
        for e in range(size):
            cv = 0
            xall = 0
            shift = 0
            pos = 0
            for j in range(3):
                if w[j] == 0:
                    continue
                v = (<uint64_t>e >> shift) & mask(w[j])
                x = (<uint64_t>e >> (shift + w[j])) & mask(w[j])
                cv |= (v & ~x) << pos
                xall |= x << pos
                shift += 2 * w[j]
                pos += w[j]
            seen = 0
            r0 = 0
            diff = 0
            sub = 0
            while True:
                if allowed[cv | sub]:
                    r = results[cv | sub]
                    if seen:
                        diff |= r ^ r0
                    else:
                        r0 = r
                        seen = 1
                if sub == xall:
                    break
                sub = (sub - xall) & xall
            if seen:
                vo[e] = r0 & ~diff
                xo[e] = diff
            else:
                vo[e] = 0
                xo[e] = om
    return values, xmasks
