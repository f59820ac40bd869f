"""Elaborated (width-checked) designs and their per-cycle transition form."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..expr import Expr, ExprContext, Sort, array_sort, bv_sort
from .ast import NOLOC, Loc


@dataclass
class Word:
    name: str
    width: int
    kind: str  # input | wire | reg
    output: bool = False
    init: int | None = None
    loc: Loc = NOLOC


@dataclass
class Array:
    name: str
    index_widths: tuple
    elem_width: int
    initialized: bool = True
    loc: Loc = NOLOC

    @property
    def sort(self) -> Sort:
        s: Sort = bv_sort(self.elem_width)
        for iw in reversed(self.index_widths):
            s = array_sort(iw, s)
        return s


@dataclass
class CombAssign:
    """``word[hi:lo] = rhs`` evaluated once per frame, in list order."""

    word: str
    hi: int
    lo: int
    rhs: Expr
    loc: Loc = NOLOC


@dataclass
class Transition:
    """Schedulable form of the transition function.

    ``comb`` is already in dependency order.  ``reg_next`` and ``array_next``
    are the values latched at the clock edge, all computed from the current
    frame (simultaneous update).  Registers without a driving update map to
    their own variable.
    """

    comb: list
    reg_next: dict
    array_next: dict


@dataclass
class Design:
    name: str
    ctx: ExprContext
    params: dict
    words: dict  # name -> Word, declaration order
    arrays: dict  # name -> Array
    comb: list  # CombAssign, dependency order
    reg_next: dict  # reg name -> Expr (full width)
    array_next: dict  # array name -> Expr (array sort)
    write_slices: list = field(default_factory=list)  # (word, hi, lo) from sequential writes

    def var(self, name: str) -> Expr:
        if name in self.words:
            return self.ctx.var(name, self.words[name].width)
        return self.ctx.var(name, self.arrays[name].sort)

    @property
    def inputs(self) -> list:
        return [w for w in self.words.values() if w.kind == "input"]

    @property
    def registers(self) -> list:
        return [w for w in self.words.values() if w.kind == "reg"]

    @property
    def wires(self) -> list:
        return [w for w in self.words.values() if w.kind == "wire"]

    @property
    def outputs(self) -> list:
        return [w for w in self.words.values() if w.output]

    def transition(self) -> Transition:
        return Transition(list(self.comb), dict(self.reg_next), dict(self.array_next))
