"""Hot loops of the exhaustive checkers, with a compiled fast path.

``BACKEND`` is ``"native"`` when the Cython extension imported, otherwise
``"reference"`` (numpy).  Set ``WORDSTE_KERNELS=reference`` to force the
fallback.  Both backends expose the same two functions:

eval_tape(instr, consts, env_matrix, outputs) -> uint64[rows, outputs]
ternary_closure(results, allowed, widths, out_width) -> (values, xmasks)
"""

from __future__ import annotations

import importlib
import os
from functools import lru_cache

import numpy as np

from ..tape import Tape
from . import _reference


def _load_native():
    if os.environ.get("WORDSTE_KERNELS", "").lower() == "reference":
        return None
    try:
        return importlib.import_module(f"{__name__}._native")
    except ImportError:  # extension not built
        return None


_native = _load_native()

BACKEND = "native" if _native is not None else "reference"


def backends() -> dict:
    out = {"reference": _reference}
    if _native is not None:
        out["native"] = _native
    return out


def eval_tape(tape: Tape, env: np.ndarray, backend: str | None = None) -> np.ndarray:
    mod = backends()[backend or BACKEND]
    env = np.ascontiguousarray(env, dtype=np.uint64)
    if env.ndim != 2 or env.shape[1] < len(tape.var_names):
        raise ValueError(f"env matrix must have {len(tape.var_names)} columns")
    return mod.eval_tape(
        np.ascontiguousarray(tape.instr, dtype=np.int64),
        np.ascontiguousarray(tape.consts, dtype=np.uint64),
        env,
        np.ascontiguousarray(tape.outputs, dtype=np.int64),
    )


def concrete_grid(widths: tuple) -> list[np.ndarray]:
    """Per-operand values for every concatenated concrete operand vector."""
    total = sum(widths)
    c = np.arange(1 << total, dtype=np.uint64)
    out, pos = [], 0
    for w in widths:
        out.append((c >> np.uint64(pos)) & np.uint64((1 << w) - 1))
        pos += w
    return out


def ternary_closure(results, widths: tuple, out_width: int, allowed=None, backend: str | None = None):
    """Exact ternary table from concrete ``results`` over ``concrete_grid(widths)``."""
    if 2 * sum(widths) > 24:
        raise ValueError(f"exact table too large for operand widths {widths}")
    n = 1 << sum(widths)
    results = np.ascontiguousarray(results, dtype=np.uint64)
    allowed = np.ones(n, dtype=np.uint8) if allowed is None else np.ascontiguousarray(allowed, dtype=np.uint8)
    mod = backends()[backend or BACKEND]
    return mod.ternary_closure(results, allowed, tuple(widths), out_width)


@lru_cache(maxsize=256)
def exact_table(op: str, widths: tuple, out_width: int, param: int = 0,
                nonzero_divisor: bool = False, backend: str | None = None):
    """Exact X-propagation table for one operator.

    Entry index packs, per operand from the least significant end, value
    then X mask.  ``nonzero_divisor`` drops concretizations whose second
    operand is zero (division with the divide-by-zero case handled apart).
    """
    if op == "concat":
        param = widths[1]
    grid = concrete_grid(widths)
    while len(grid) < 3:
        grid.append(np.zeros_like(grid[0]))
    results = _reference.apply_vec(op, out_width, grid[0], grid[1], grid[2], param)
    allowed = None
    if nonzero_divisor:
        allowed = (grid[1] != 0).astype(np.uint8)
    vals, xms = ternary_closure(results, tuple(widths), out_width, allowed, backend)
    vals.flags.writeable = False
    xms.flags.writeable = False
    return vals, xms


def table_index(widths: tuple, operands) -> np.ndarray:
    """Pack per-operand (value, xmask) arrays into exact-table indices."""
    idx = None
    shift = 0
    for w, (v, x) in zip(widths, operands):
        part = (np.asarray(v, dtype=np.uint64) << np.uint64(shift)) | (
            np.asarray(x, dtype=np.uint64) << np.uint64(shift + w)
        )
        idx = part if idx is None else idx | part
        shift += 2 * w
    return idx.astype(np.int64)
