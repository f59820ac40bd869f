"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--rows N]

Each workload runs on every available backend; outputs are compared for
equality before any timing is printed.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from wordste import kernels
from wordste.expr import ExprContext
from wordste.kernels import _reference
from wordste.tape import compile_tape


def tape_workload(rows: int):
    c = ExprContext()
    a, b, s = c.var("a", 16), c.var("b", 16), c.var("s", 1)
    diff = c.ite(c.ult(a, b), c.sub(b, a), c.sub(a, b))
    acc = c.add(c.mul(diff, c.lshr(a, c.bv(3, 16))), c.udiv(b, c.bvor(a, c.bv(1, 16))))
    out = c.ite(c.eq(s, c.bv(1, 1)), acc, c.bvxor(diff, c.shl(b, c.zext(c.extract(3, 0, a), 16))))
    tape = compile_tape([out, c.concat(c.extract(7, 0, acc), c.extract(15, 8, diff))], ["a", "b", "s"])
    rng = np.random.default_rng(0)
    env = np.stack(
        [rng.integers(0, 1 << 16, rows), rng.integers(0, 1 << 16, rows), rng.integers(0, 2, rows)], axis=1
    ).astype(np.uint64)
    return lambda backend: kernels.eval_tape(tape, env, backend)


def closure_workload(widths: tuple, op: str):
    grid = kernels.concrete_grid(widths)
    while len(grid) < 3:
        grid.append(np.zeros_like(grid[0]))
    out_w = widths[-1]
    results = _reference.apply_vec(op, out_w, grid[0], grid[1], grid[2], 0)
    return lambda backend: kernels.ternary_closure(results, widths, out_w, None, backend)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(np.array_equal(a, b) for a, b in zip(x, y))
    return np.array_equal(x, y)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rows", type=int, default=200_000)
    args = ap.parse_args(argv)

    workloads = [
        (f"eval_tape ({args.rows} rows)", tape_workload(args.rows)),
        ("ternary_closure add 4+4", closure_workload((4, 4), "add")),
        ("ternary_closure mul 5+4", closure_workload((5, 4), "mul")),
        ("ternary_closure ite 1+3+3", closure_workload((1, 3, 3), "ite")),
    ]
    backends = list(kernels.backends())
    print(f"default backend: {kernels.BACKEND}")
    if "native" not in backends:
        print("compiled kernels not built; only the numpy fallback is timed")
    print(f"{'workload':32}" + "".join(f"{b:>14}" for b in backends) + ("      speedup" if len(backends) > 1 else ""))
    ok = True
    for name, run in workloads:
        outs = {b: run(b) for b in backends}
        if len(backends) > 1 and not same(outs["native"], outs["reference"]):
            print(f"{name}: backends disagree")
            ok = False
            continue
        times = {b: best_of(lambda: run(b), args.repeat) for b in backends}
        line = f"{name:32}" + "".join(f"{times[b] * 1e3:12.2f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{times['reference'] / max(times['native'], 1e-9):12.1f}x"
        print(line)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
