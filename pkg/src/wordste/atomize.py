"""Split words into atoms: maximal slices never read or written partially.

An atomization of an ``m``-bit word is its set of cut positions in
``1..m-1``; a cut at ``c`` separates bit ``c-1`` from bit ``c``.  Refining two
atomizations is the union of their cuts, so the result does not depend on
the order in which accesses are processed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .ir.elaborate import word_reads
from .ir.model import Design


class AtomizeError(ValueError):
    pass


@dataclass(frozen=True)
class Atomization:
    width: int
    cuts: frozenset = frozenset()

    def __post_init__(self):
        bad = [c for c in self.cuts if not 0 < c < self.width]
        if bad:
            raise AtomizeError(f"cut positions {sorted(bad)} outside 1..{self.width - 1}")

    @property
    def atoms(self) -> list[tuple[int, int]]:
        """Atoms as (hi, lo) pairs, most significant first."""
        bounds = [0, *sorted(self.cuts), self.width]
        return [(hi - 1, lo) for lo, hi in zip(bounds, bounds[1:])][::-1]

    def refine(self, other: "Atomization") -> "Atomization":
        if other.width != self.width:
            raise AtomizeError(f"cannot refine a {self.width}-bit atomization with a {other.width}-bit one")
        return Atomization(self.width, self.cuts | other.cuts)

    def aligned(self, q: int, p: int) -> bool:
        """True if ``[q:p]`` is a union of whole atoms."""
        return (p == 0 or p in self.cuts) and (q == self.width - 1 or q + 1 in self.cuts)

    def atoms_in(self, q: int, p: int) -> list[tuple[int, int]]:
        """Atoms overlapping ``[q:p]``, most significant first."""
        return [(hi, lo) for hi, lo in self.atoms if lo <= q and hi >= p]

    def largest(self) -> int:
        return max(hi - lo + 1 for hi, lo in self.atoms)

    def __str__(self) -> str:
        return " ".join(f"[{hi}:{lo}]" for hi, lo in self.atoms)


def induce(width: int, q: int, p: int) -> Atomization:
    """Atomization induced by one access ``w[q:p]`` of an ``width``-bit word."""
    if not 0 <= p <= q < width:
        raise AtomizeError(f"slice [{q}:{p}] out of range for a {width}-bit word")
    cuts = set()
    if p > 0:
        cuts.add(p)
    if q < width - 1:
        cuts.add(q + 1)
    return Atomization(width, frozenset(cuts))


def refine(a: Atomization, b: Atomization) -> Atomization:
    return a.refine(b)


class AtomMap(dict):
    """word name -> Atomization, with lookups used by the simulator."""

    def atoms(self) -> list[tuple[str, int, int]]:
        return [(w, hi, lo) for w, at in self.items() for hi, lo in at.atoms]

    def largest(self) -> int:
        return max((a.largest() for a in self.values()), default=0)

    def table(self) -> str:
        """Tab-separated ``word  width  atoms`` lines."""
        lines = ["word\twidth\tatoms"]
        for w, at in self.items():
            lines.append(f"{w}\t{at.width}\t{' '.join(f'{hi}:{lo}' for hi, lo in at.atoms)}")
        return "\n".join(lines)


def design_accesses(d: Design) -> list[tuple[str, int, int]]:
    """Every slice access (read or write) the design makes on a word.

    Variable shifts and array index expressions are not cut through; constant
    shifts of a word count as reads of the surviving bits.
    """
    widths = {w.name: w.width for w in d.words.values()}
    acc = [(c.word, c.hi, c.lo) for c in d.comb]
    acc.extend(d.write_slices)
    roots = [c.rhs for c in d.comb] + list(d.reg_next.values()) + list(d.array_next.values())
    acc.extend(word_reads(roots, widths, shifts_as_slices=True))
    return acc


def atomize_accesses(widths: dict, accesses: Iterable[tuple[str, int, int]]) -> AtomMap:
    amap = AtomMap((w, Atomization(m)) for w, m in widths.items())
    for w, q, p in accesses:
        if w not in amap:
            raise AtomizeError(f"access to unknown word {w!r}")
        amap[w] = amap[w].refine(induce(amap[w].width, q, p))
    return amap


def atomize_design(d: Design, spec=None, extra: Iterable[tuple[str, int, int]] = ()) -> AtomMap:
    """Coarsest atomization aligning every design access and spec reference.

    ``spec`` may be any object with an ``accesses()`` method returning
    ``(word, hi, lo)`` triples (the trajectory specs of :mod:`wordste.ste`).
    """
    accesses = design_accesses(d)
    if spec is not None:
        accesses.extend(spec.accesses())
    accesses.extend(extra)
    return atomize_accesses({w.name: w.width for w in d.words.values()}, accesses)
