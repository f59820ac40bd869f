"""Bundled designs and specs.

``sad``: three-stage pipelined sum of absolute differences, properties
``sad_p1`` .. ``sad_p6``, mutants ``sad_mut1`` .. ``sad_mut3``.
``mult``: serial multiplier with stall and wait flags, properties
``mult_p1`` .. ``mult_p3``, mutants ``mult_mut1`` .. ``mult_mut3``.
``twogate``: the small demo with its golden SMT script.
"""

from __future__ import annotations

from pathlib import Path

HERE = Path(__file__).parent

# design -> (properties, mutants, widths exercised by the test suite)
SUITES = {
    "sad": ([f"sad_p{i}" for i in range(1, 7)], [f"sad_mut{i}" for i in range(1, 4)], (8, 16, 32, 64)),
    "mult": ([f"mult_p{i}" for i in range(1, 4)], [f"mult_mut{i}" for i in range(1, 4)], (4,)),
}


def path(name: str) -> Path:
    """``sad`` -> the design file, ``sad_p1`` -> the spec, or a file name."""
    for candidate in (HERE / name, HERE / f"{name}.wdl", HERE / f"{name}.spec"):
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no bundled benchmark {name!r}")


def read(name: str) -> str:
    return path(name).read_text()
